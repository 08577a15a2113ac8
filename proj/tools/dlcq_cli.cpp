// dlcq: simulation and inference for gene family evolution under
// duplication, loss, and the bounded multispecies coalescent.

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dlcq/bounds.hpp"
#include "dlcq/coalescent.hpp"
#include "dlcq/experiments.hpp"
#include "dlcq/gdl.hpp"
#include "dlcq/inference.hpp"
#include "dlcq/quartets.hpp"
#include "dlcq/trees.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw dlcq::DataError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string read_newick_file(const std::string& path) {
    // Accept an inline Newick string as well as a file path; no filename
    // contains '(' in practice.
    std::string s =
        path.find('(') != std::string::npos ? path : slurp(path);
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' '))
        s.pop_back();
    return s;
}

std::vector<dlcq::GeneTree> read_gene_trees(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw dlcq::DataError("cannot open " + path);
    std::vector<dlcq::GeneTree> genes;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
            line.pop_back();
        if (line.empty()) continue;
        genes.push_back(dlcq::GeneTree::from_newick(line));
    }
    return genes;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw dlcq::DataError("cannot open " + path + " for writing");
    return out;
}

int run_simulate(const std::string& species_file, double lambda, double mu,
                 long count, std::uint64_t seed, long cap,
                 const std::string& out_path) {
    const auto species = dlcq::SpeciesTree::from_newick(read_newick_file(species_file));
    const dlcq::BDParams bd{lambda, mu};
    const dlcq::CoalescentConfig ccfg{cap};
    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file = open_out(out_path);
        os = &file;
    }
    dlcq::RngStream rng = dlcq::RngStream::derived(seed, "simulate", 0);
    for (long i = 0; i < count; ++i) {
        dlcq::LocusTree obs =
            dlcq::prune_losses(dlcq::simulate_full_locus_tree(species, bd, rng));
        if (obs.empty()) continue;  // extinct family yields no observable tree
        auto sim = dlcq::simulate_gene_tree(obs, species, ccfg, rng);
        *os << sim.gene.to_newick() << '\n';
    }
    return kExitOk;
}

int run_infer(const std::string& genes_file, const std::string& mode,
              std::uint64_t seed, int cap, std::uint64_t tuple_cap,
              const std::string& out_path) {
    auto genes = read_gene_trees(genes_file);
    if (genes.empty()) throw dlcq::DataError("no gene trees in " + genes_file);
    std::vector<std::string> species;
    {
        std::set<std::string> names;
        for (const auto& g : genes)
            for (const auto& nd : g.nodes())
                if (nd.is_leaf()) names.insert(nd.species);
        species.assign(names.begin(), names.end());
    }
    if (static_cast<int>(species.size()) > cap)
        throw dlcq::DataError("species count " + std::to_string(species.size()) +
                              " exceeds --cap " + std::to_string(cap));
    dlcq::InferenceOptions opt;
    opt.enumeration_cap = cap;
    opt.tuple_cap = tuple_cap;
    dlcq::InferenceResult res;
    dlcq::RngStream rng = dlcq::RngStream::derived(seed, "infer", 0);
    if (mode == "one")
        res = dlcq::astral_one_exact(genes, species, rng, opt);
    else
        res = dlcq::astral_multi_exact(genes, species, opt, &rng);

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file = open_out(out_path);
        os = &file;
    }
    *os << res.best.to_newick() << '\n';
    *os << "score," << dlcq::format_double(res.best_score) << '\n';
    *os << "tie," << (res.is_tie() ? 1 : 0) << '\n';
    if (res.is_tie())
        for (const auto& t : res.tied) *os << "tied," << t.to_newick() << '\n';
    return kExitOk;
}

int run_tally(const std::string& genes_file, const std::string& mode,
              std::uint64_t seed, std::uint64_t tuple_cap,
              const std::string& out_path) {
    auto genes = read_gene_trees(genes_file);
    if (genes.empty()) throw dlcq::DataError("no gene trees in " + genes_file);
    std::set<std::string> names;
    for (const auto& g : genes)
        for (const auto& nd : g.nodes())
            if (nd.is_leaf()) names.insert(nd.species);
    const std::vector<std::string> species(names.begin(), names.end());
    const int n = static_cast<int>(species.size());
    if (n < 4) throw dlcq::DataError("tally needs at least 4 species");
    dlcq::RngStream rng = dlcq::RngStream::derived(seed, "tally", 0);

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file = open_out(out_path);
        os = &file;
    }
    *os << "a,b,c,d,n_ab_cd,n_ac_bd,n_ad_bc,usable,skipped,dominant\n";
    for (const auto& ix : dlcq::quartet_index_sets(n)) {
        const std::array<std::string, 4> quartet{species[ix[0]], species[ix[1]],
                                                 species[ix[2]], species[ix[3]]};
        dlcq::QuartetTally t;
        if (mode == "one")
            t = dlcq::tally_one(genes, quartet, rng);
        else
            t = dlcq::tally_multi(genes, quartet, tuple_cap, &rng);
        const auto dom = dlcq::dominant(t, 0.95);
        *os << quartet[0] << ',' << quartet[1] << ',' << quartet[2] << ','
            << quartet[3] << ',' << dlcq::format_double(t.n1) << ','
            << dlcq::format_double(t.n2) << ',' << dlcq::format_double(t.n3) << ','
            << t.usable << ',' << t.skipped << ',' << dlcq::to_string(dom.topology)
            << '\n';
    }
    return kExitOk;
}

int run_bounds(double f, double delta, double lambda, double mu, int n, double eps,
               const std::string& out_path) {
    dlcq::BoundInputs in{f, delta, lambda, mu, n, eps};
    const dlcq::BoundOutputs out = dlcq::sample_size_bound(in);
    auto print = [&](std::ostream& os) {
        os << "quantity,value\n";
        os << "gamma," << dlcq::format_double(out.gamma) << '\n';
        os << "sigma_lower," << dlcq::format_double(out.sigma_lb) << '\n';
        os << "alpha_upper," << dlcq::format_double(out.alpha_ub) << '\n';
        os << "delta_prime_lower," << dlcq::format_double(out.delta_prime_lb) << '\n';
        os << "kstar," << dlcq::format_double(out.kstar_req) << '\n';
        os << "k," << dlcq::format_double(out.k_req) << '\n';
        os << "k_closed_form," << dlcq::format_double(out.k_closed_form) << '\n';
        os << "degenerate," << (out.degenerate ? 1 : 0) << '\n';
    };
    print(std::cout);
    if (!out_path.empty()) {
        auto file = open_out(out_path);
        print(file);
    }
    return kExitOk;
}

int run_experiment(const std::string& config_path, const std::string& kind_flag,
                   bool seed_set, std::uint64_t seed, int threads_flag,
                   const std::string& out_prefix) {
    nlohmann::json j;
    {
        std::istringstream in(slurp(config_path));
        in >> j;
    }
    const std::string kind = kind_flag.empty() ? j.value("experiment", "") : kind_flag;
    if (kind != "gap" && kind != "survival" && kind != "curve")
        throw dlcq::DataError("experiment kind must be gap, survival, or curve");

    dlcq::ExperimentConfig cfg;
    cfg.species_newick = j.at("species").get<std::string>();
    if (j.contains("quartet")) cfg.quartet = j["quartet"].get<std::vector<std::string>>();
    cfg.lambda = j.value("lambda", 0.0);
    cfg.mu = j.value("mu", 0.0);
    cfg.replicates = j.value("replicates", 1L);
    cfg.trials = j.value("trials", 1L);
    cfg.confidence = j.value("confidence", 0.95);
    cfg.min_bin_support = j.value("min_bin_support", 1000L);
    cfg.threads = j.value("threads", 1);
    cfg.rejection_cap = j.value("rejection_cap", 1'000'000L);
    if (j.contains("k_grid")) cfg.k_grid = j["k_grid"].get<std::vector<long>>();
    if (j.contains("seed"))
        cfg.master_seed = j["seed"].get<std::uint64_t>();
    else if (!seed_set)
        throw dlcq::DataError("experiment needs a seed (--seed or config)");
    if (seed_set) cfg.master_seed = seed;  // flags override config
    if (threads_flag > 0) cfg.threads = threads_flag;

    const std::string prefix = out_prefix.empty() ? kind : out_prefix;
    const auto t0 = std::chrono::steady_clock::now();
    if (kind == "gap") {
        const auto rep = dlcq::run_quartet_gap(cfg);
        auto f1 = open_out(prefix + "_gap.csv");
        dlcq::write_gap_csv(rep, f1);
        auto f2 = open_out(prefix + "_cab.csv");
        dlcq::write_cab_csv(rep, f2);
    } else if (kind == "survival") {
        const auto rep = dlcq::run_survival_and_lineages(cfg);
        auto f1 = open_out(prefix + "_survival.csv");
        dlcq::write_survival_csv(rep, f1);
    } else {
        const auto rep = dlcq::run_reconstruction_curve(cfg);
        auto f1 = open_out(prefix + "_curve.csv");
        dlcq::write_curve_csv(rep, f1);
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto mf = open_out(prefix + "_manifest.json");
    dlcq::write_manifest(cfg, kind, wall, mf);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gene-family simulation and quartet-based species tree inference"};
    app.require_subcommand(1);

    std::string species_file, genes_file, out_path, config_path, mode = "one";
    std::string experiment_kind;
    double lambda = 0, mu = 0, f = 0, delta = 0, eps = 0.05;
    long count = 0, rejection_cap = 1'000'000;
    int n = 0, cap = 9, threads = 0;
    std::uint64_t seed = 0, tuple_cap = dlcq::kDefaultTupleCap;

    auto* sim = app.add_subcommand("simulate", "simulate gene trees");
    sim->add_option("--species", species_file, "species tree (Newick file or inline string)")->required();
    sim->add_option("--lambda", lambda, "duplication rate")->required();
    sim->add_option("--mu", mu, "loss rate")->required();
    sim->add_option("--count", count, "number of gene families")->required();
    sim->add_option("--seed", seed, "master seed")->required();
    sim->add_option("--cap", rejection_cap, "rejection cap per bounded edge");
    sim->add_option("--out", out_path, "output file (default stdout)");

    auto* inf = app.add_subcommand("infer", "estimate the species tree");
    inf->add_option("--genes", genes_file, "gene trees, one Newick per line")->required();
    inf->add_option("--mode", mode, "one|multi")
        ->check(CLI::IsMember({"one", "multi"}));
    inf->add_option("--seed", seed, "master seed")->required();
    inf->add_option("--cap", cap, "max species count for exact search");
    inf->add_option("--tuple-cap", tuple_cap, "4-tuple cap per quartet (multi)");
    inf->add_option("--out", out_path, "output file (default stdout)");

    auto* tal = app.add_subcommand("tally", "per-quartet topology tallies");
    tal->add_option("--genes", genes_file, "gene trees, one Newick per line")->required();
    tal->add_option("--mode", mode, "one|multi")
        ->check(CLI::IsMember({"one", "multi"}));
    tal->add_option("--seed", seed, "master seed")->required();
    tal->add_option("--tuple-cap", tuple_cap, "4-tuple cap per quartet (multi)");
    tal->add_option("--out", out_path, "output file (default stdout)");

    auto* bnd = app.add_subcommand("bounds", "closed-form sample-size bounds");
    bnd->add_option("--f", f, "shortest internal branch")->required();
    bnd->add_option("--delta", delta, "species tree depth")->required();
    bnd->add_option("--lambda", lambda, "duplication rate")->required();
    bnd->add_option("--mu", mu, "loss rate")->required();
    bnd->add_option("--n", n, "species count")->required();
    bnd->add_option("--eps", eps, "failure probability");
    bnd->add_option("--out", out_path, "also write CSV here");

    auto* exp = app.add_subcommand("experiment", "run a verification campaign");
    exp->add_option("--config", config_path, "JSON config file")->required();
    exp->add_option("--kind", experiment_kind, "gap|survival|curve");
    auto* seed_opt = exp->add_option("--seed", seed, "master seed (overrides config)");
    exp->add_option("--threads", threads, "worker threads (overrides config)");
    exp->add_option("--out", out_path, "output file prefix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim->parsed())
            return run_simulate(species_file, lambda, mu, count, seed, rejection_cap,
                                out_path);
        if (inf->parsed())
            return run_infer(genes_file, mode, seed, cap, tuple_cap, out_path);
        if (tal->parsed()) return run_tally(genes_file, mode, seed, tuple_cap, out_path);
        if (bnd->parsed()) return run_bounds(f, delta, lambda, mu, n, eps, out_path);
        return run_experiment(config_path, experiment_kind, seed_opt->count() > 0,
                              seed, threads, out_path);
    } catch (const dlcq::RejectionCapExhausted& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const dlcq::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
}
