#include "dlcq/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

namespace dlcq {

namespace {

constexpr const char* kCodeVersion = "dlcq 0.1.0";

// Acklam's rational approximation to the standard normal quantile.
double normal_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p > phigh) return -normal_quantile(1 - p);
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

double binom_se(double p, long n) {
    if (n <= 0) return 0;
    return std::sqrt(std::max(p * (1 - p), 0.0) / static_cast<double>(n));
}

// SE of the difference of two proportions of the same multinomial sample.
double multinom_diff_se(double p1, double p2, long n) {
    if (n <= 0) return 0;
    return std::sqrt(std::max(p1 + p2 - (p1 - p2) * (p1 - p2), 0.0) /
                     static_cast<double>(n));
}

// Deterministic parallel loop: results must be written to index-addressed
// slots, never accumulated per worker.
void parallel_for(long n, int threads, const std::function<void(long)>& fn) {
    if (threads <= 1 || n < 2) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr err;
    std::mutex err_mutex;
    const long chunk = std::max<long>(1, std::min<long>(256, n / (4 * threads) + 1));
    auto worker = [&] {
        try {
            while (true) {
                long start = next.fetch_add(chunk);
                if (start >= n) return;
                long end = std::min(n, start + chunk);
                for (long i = start; i < end; ++i) fn(i);
            }
        } catch (...) {
            std::scoped_lock lock(err_mutex);
            if (!err) err = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

int species_mrca(const SpeciesTree& t, int u, int v) {
    while (u != v) {
        if (t.nodes()[u].depth >= t.nodes()[v].depth)
            u = t.nodes()[u].parent;
        else
            v = t.nodes()[v].parent;
    }
    return u;
}

std::string csv_bool(bool b) { return b ? "1" : "0"; }

}  // namespace

double one_sided_z(double confidence) { return normal_quantile(confidence); }
double two_sided_z(double confidence) {
    return normal_quantile(0.5 + confidence / 2);
}

void ExperimentConfig::validate() const {
    if (species_newick.empty()) throw DataError("experiment config: species tree missing");
    if (replicates < 1) throw DataError("experiment config: replicates must be >= 1");
    if (!(confidence > 0.5 && confidence < 1.0))
        throw DataError("experiment config: confidence must lie in (0.5, 1)");
    for (std::size_t i = 1; i < k_grid.size(); ++i)
        if (k_grid[i] <= k_grid[i - 1])
            throw DataError("experiment config: k grid must be strictly increasing");
}

void classify_quartet_tree(const SpeciesTree& species,
                           const std::vector<std::string>& quartet,
                           std::array<std::string, 4>& roles, int& vertex_R,
                           bool& balanced) {
    std::vector<std::string> q = quartet;
    if (q.empty()) {
        q = species.species();
        if (q.size() != 4)
            throw DataError("a quartet designation is required on trees with more than 4 taxa");
    }
    if (q.size() != 4) throw DataError("quartet designation needs exactly 4 species");
    std::sort(q.begin(), q.end());
    if (std::adjacent_find(q.begin(), q.end()) != q.end())
        throw DataError("quartet designation has repeated species");
    std::array<int, 4> leaf;
    for (int s = 0; s < 4; ++s) {
        leaf[s] = species.find_leaf(q[s]);
        if (leaf[s] < 0)
            throw DataError("quartet designation names unknown species '" + q[s] + "'");
    }

    int R = leaf[0];
    for (int s = 1; s < 4; ++s) R = species_mrca(species, leaf[s], R);
    // side of R each leaf descends through
    auto side_of = [&](int u) {
        while (species.nodes()[u].parent != R) u = species.nodes()[u].parent;
        return u == species.nodes()[R].left ? 0 : 1;
    };
    std::array<int, 4> side;
    int n_left = 0;
    for (int s = 0; s < 4; ++s) n_left += (side[s] = side_of(leaf[s])) == 0;
    if (n_left == 2) {
        balanced = true;
        vertex_R = R;
        std::vector<std::string> first, second;
        for (int s = 0; s < 4; ++s) (side[s] == 0 ? first : second).push_back(q[s]);
        if (second[0] < first[0]) std::swap(first, second);
        roles = {first[0], first[1], second[0], second[1]};
    } else {
        balanced = false;
        // the singleton side holds the outgroup D; recurse on the triple
        const int lone = n_left == 1 ? 0 : 1;
        std::string d;
        std::vector<std::string> triple;
        std::vector<int> tleaf;
        for (int s = 0; s < 4; ++s) {
            if (side[s] == lone) {
                d = q[s];
            } else {
                triple.push_back(q[s]);
                tleaf.push_back(leaf[s]);
            }
        }
        int Rp = species_mrca(species, tleaf[0], tleaf[1]);
        Rp = species_mrca(species, Rp, tleaf[2]);
        vertex_R = Rp;
        auto tside = [&](int u) {
            while (species.nodes()[u].parent != Rp) u = species.nodes()[u].parent;
            return u == species.nodes()[Rp].left ? 0 : 1;
        };
        int pair_side = -1;
        {
            int cnt[2] = {0, 0};
            for (int s = 0; s < 3; ++s) ++cnt[tside(tleaf[s])];
            pair_side = cnt[0] == 2 ? 0 : 1;
        }
        std::string c;
        std::vector<std::string> cherry;
        for (int s = 0; s < 3; ++s) {
            if (tside(tleaf[s]) == pair_side)
                cherry.push_back(triple[s]);
            else
                c = triple[s];
        }
        roles = {cherry[0], cherry[1], c, d};
    }
}

QuartetReplicate simulate_quartet_replicate(const SpeciesTree& species,
                                            const std::array<std::string, 4>& roles,
                                            bool balanced, int vertex_R,
                                            const BDParams& bd,
                                            const CoalescentConfig& ccfg,
                                            RngStream& rng) {
    QuartetReplicate rec;
    LocusTree full = simulate_full_locus_tree(species, bd, rng);
    LocusTree obs = prune_losses(full);
    if (obs.empty()) return rec;
    GeneSimResult sim;
    try {
        sim = simulate_gene_tree(obs, species, ccfg, rng);
    } catch (const RejectionCapExhausted&) {
        rec.discarded = true;
        return rec;
    }
    std::array<int, 4> pick{-1, -1, -1, -1};
    for (int s = 0; s < 4; ++s) {
        auto copies = sim.gene.copies_of(roles[s]);
        if (copies.empty()) return rec;
        pick[s] = copies[rng.below(copies.size())];
    }
    rec.usable = true;
    QuartetTopology q =
        sim.gene.quartet_topology(pick[0], pick[1], pick[2], pick[3]);
    rec.q = q == QuartetTopology::AB_CD ? 1 : (q == QuartetTopology::AC_BD ? 2 : 3);
    std::array<int, 4> traced = pick;
    if (!balanced) traced[3] = -1;  // R is ancestral to A,B,C only
    LatentTrace tr = extract_trace(obs, sim, species, vertex_R, traced);
    rec.lineages = tr.lineages;
    rec.ab_same = tr.lineage_id[0] == tr.lineage_id[1];
    rec.cd_same = balanced && tr.lineage_id[2] == tr.lineage_id[3];
    rec.event = tr.event;
    rec.nc = tr.nc;
    rec.c_ab = tr.c_ab;
    return rec;
}

GapReport run_quartet_gap(const ExperimentConfig& config) {
    config.validate();
    const SpeciesTree species = SpeciesTree::from_newick(config.species_newick);
    GapReport rep;
    int vertex_R = -1;
    classify_quartet_tree(species, config.quartet, rep.roles, vertex_R, rep.balanced);
    const BDParams bd{config.lambda, config.mu};
    const CoalescentConfig ccfg{config.rejection_cap};

    const int la = species.find_leaf(rep.roles[0]);
    const int lb = species.find_leaf(rep.roles[1]);
    const double t_R = species.nodes()[vertex_R].time;
    const double t_ab = species.nodes()[species_mrca(species, la, lb)].time;
    rep.gamma_ab = -std::expm1(-(t_R - t_ab));

    std::vector<QuartetReplicate> recs(config.replicates);
    parallel_for(config.replicates, config.threads, [&](long r) {
        RngStream rng = RngStream::derived(config.master_seed, "quartet_gap",
                                           static_cast<std::uint64_t>(r));
        recs[r] = simulate_quartet_replicate(species, rep.roles, rep.balanced,
                                             vertex_R, bd, ccfg, rng);
    });

    rep.replicates = config.replicates;
    long nq[4] = {0, 0, 0, 0};
    int max_i = 0;
    for (const auto& rc : recs) {
        rep.discarded += rc.discarded;
        if (rc.usable) {
            ++rep.usable;
            ++nq[rc.q];
            max_i = std::max(max_i, rc.lineages);
        }
    }
    if (rep.usable == 0) return rep;
    for (int j = 0; j < 3; ++j) {
        rep.p[j] = static_cast<double>(nq[j + 1]) / rep.usable;
        rep.p_se[j] = binom_se(rep.p[j], rep.usable);
    }
    const int jmax = rep.p[1] >= rep.p[2] ? 1 : 2;
    rep.gap = rep.p[0] - rep.p[jmax];
    rep.gap_se = multinom_diff_se(rep.p[0], rep.p[jmax], rep.usable);
    rep.gap_ci_above_zero =
        rep.gap - two_sided_z(config.confidence) * rep.gap_se > 0;

    const double z1 = one_sided_z(config.confidence);
    for (int i = 1; i <= max_i; ++i) {
        long support = 0, q1 = 0, q2 = 0, ab = 0, cd = 0, cab = 0;
        long f_ab = 0, g_ab = 0, g_ac = 0;
        for (const auto& rc : recs) {
            if (!rc.usable || rc.lineages != i) continue;
            ++support;
            q1 += rc.q == 1;
            q2 += rc.q == 2;
            ab += rc.ab_same;
            cd += rc.cd_same;
            cab += rc.c_ab;
            f_ab += rc.event == RootEvent::F_ab;
            g_ab += rc.event == RootEvent::G_ab || rc.event == RootEvent::G3_ab;
            g_ac += rc.event == RootEvent::G_ac || rc.event == RootEvent::G3_ac;
        }
        if (support == 0) continue;
        GapBinRow row;
        row.i = i;
        row.support = support;
        row.sufficient = support >= config.min_bin_support;
        const double p1 = static_cast<double>(q1) / support;
        const double p2 = static_cast<double>(q2) / support;
        row.gap = p1 - p2;
        row.gap_se = multinom_diff_se(p1, p2, support);
        row.x = static_cast<double>(ab) / support;
        row.x_se = binom_se(row.x, support);
        row.y = static_cast<double>(cd) / support;
        row.y_se = binom_se(row.y, support);
        const double inv_i = 1.0 / i;
        double bound_se;
        if (rep.balanced) {
            const double tx = row.x - inv_i, ty = row.y - inv_i;
            row.prop_bound = std::min(tx, ty) / 12.0;
            bound_se = (tx <= ty ? row.x_se : row.y_se) / 12.0;
            row.share_floor_pass = row.x >= inv_i - z1 * row.x_se &&
                              row.y >= inv_i - z1 * row.y_se;
        } else {
            row.prop_bound = (row.x - inv_i) / 3.0;
            bound_se = row.x_se / 3.0;
            row.share_floor_pass = row.x >= inv_i - z1 * row.x_se;
        }
        row.prop_pass = row.gap - row.prop_bound >= -z1 * (row.gap_se + bound_se);
        rep.bins.push_back(row);

        // C_ab lower-bound check
        CabBinRow cb;
        cb.i = i;
        cb.support = support;
        cb.sufficient = row.sufficient;
        cb.c_ab = static_cast<double>(cab) / support;
        cb.se = binom_se(cb.c_ab, support);
        cb.bound = std::min(rep.gamma_ab, 0.125) * inv_i;
        cb.pass = cb.c_ab >= cb.bound - z1 * cb.se;
        rep.cab.push_back(cb);

        // Event-frequency identities, balanced trees with i >= 2.
        if (rep.balanced && i >= 2) {
            struct Pred {
                const char* name;
                long count;
                double value;
                double se;
            };
            const double x = row.x, y = row.y, xe = row.x_se, ye = row.y_se;
            const double c_f = static_cast<double>(i - 2) / i;
            const double c_g = static_cast<double>(i - 1) / i;
            const double c_gac = 1.0 / (static_cast<double>(i) * (i - 1));
            const Pred preds[3] = {
                {"F_ab", f_ab, c_f * x * (1 - y),
                 c_f * std::hypot((1 - y) * xe, x * ye)},
                {"G_ab", g_ab, c_g * x * y, c_g * std::hypot(y * xe, x * ye)},
                {"G_ac", g_ac, c_gac * (1 - x) * (1 - y),
                 c_gac * std::hypot((1 - y) * xe, (1 - x) * ye)},
            };
            for (const Pred& p : preds) {
                EventFreqRow lr;
                lr.i = i;
                lr.support = support;
                lr.event = p.name;
                lr.observed = static_cast<double>(p.count) / support;
                lr.observed_se = binom_se(lr.observed, support);
                lr.predicted = p.value;
                lr.predicted_se = p.se;
                lr.pass = std::abs(lr.observed - lr.predicted) <=
                          3.0 * (lr.observed_se + lr.predicted_se);
                lr.sufficient = row.sufficient;
                rep.event_freqs.push_back(lr);
            }
        }
    }
    return rep;
}

void write_gap_csv(const GapReport& r, std::ostream& os) {
    os << "metric,event,i,support,estimate,se,bound_or_predicted,pass,sufficient\n";
    auto row = [&](const std::string& metric, const std::string& event, int i,
                   long support, double est, double se, double bound,
                   int pass, int sufficient) {
        os << metric << ',' << event << ',' << (i >= 0 ? std::to_string(i) : "")
           << ',' << (support >= 0 ? std::to_string(support) : "") << ','
           << format_double(est) << ',' << format_double(se) << ','
           << format_double(bound) << ',' << (pass >= 0 ? std::to_string(pass) : "")
           << ',' << (sufficient >= 0 ? std::to_string(sufficient) : "") << '\n';
    };
    const char* pn[3] = {"p_q1", "p_q2", "p_q3"};
    for (int j = 0; j < 3; ++j)
        row(pn[j], "", -1, r.usable, r.p[j], r.p_se[j], 0, -1, -1);
    row("gap", "", -1, r.usable, r.gap, r.gap_se, 0, r.gap_ci_above_zero, -1);
    row("discarded", "", -1, r.discarded, 0, 0, 0, -1, -1);
    for (const auto& b : r.bins) {
        row("bin_gap", "", b.i, b.support, b.gap, b.gap_se, b.prop_bound,
            b.prop_pass, b.sufficient);
        row("bin_x", "", b.i, b.support, b.x, b.x_se, 1.0 / b.i, b.share_floor_pass,
            b.sufficient);
        if (r.balanced)
            row("bin_y", "", b.i, b.support, b.y, b.y_se, 1.0 / b.i, b.share_floor_pass,
                b.sufficient);
    }
    for (const auto& l : r.event_freqs)
        row("event_freq", l.event, l.i, l.support, l.observed,
            l.observed_se + l.predicted_se, l.predicted, l.pass, l.sufficient);
}

void write_cab_csv(const GapReport& r, std::ostream& os) {
    os << "i,support,c_ab,se,bound,pass,sufficient\n";
    for (const auto& c : r.cab)
        os << c.i << ',' << c.support << ',' << format_double(c.c_ab) << ','
           << format_double(c.se) << ',' << format_double(c.bound) << ','
           << csv_bool(c.pass) << ',' << csv_bool(c.sufficient) << '\n';
}

SurvivalReport run_survival_and_lineages(const ExperimentConfig& config) {
    config.validate();
    const SpeciesTree species = SpeciesTree::from_newick(config.species_newick);
    const BDParams bd{config.lambda, config.mu};
    const auto names = species.species();
    const int n = static_cast<int>(names.size());
    const int nv = static_cast<int>(species.nodes().size());
    const auto qsets = quartet_index_sets(n);

    // per replicate: lineage count per vertex, copy count per species
    std::vector<std::vector<int>> vtx_counts(config.replicates);
    std::vector<std::vector<int>> sp_counts(config.replicates);
    parallel_for(config.replicates, config.threads, [&](long r) {
        RngStream rng = RngStream::derived(config.master_seed, "survival",
                                           static_cast<std::uint64_t>(r));
        // full-tree census: copies alive at each vertex, extinct or not
        LocusTree full = simulate_full_locus_tree(species, bd, rng);
        std::vector<int> vc(nv, 0);
        std::vector<int> sc(n, 0);
        for (const auto& nd : full.nodes) {
            if (nd.event == LocusEvent::Speciation || nd.event == LocusEvent::Leaf)
                ++vc[nd.species_node];
        }
        for (int s = 0; s < n; ++s) sc[s] = vc[species.find_leaf(names[s])];
        vtx_counts[r] = std::move(vc);
        sp_counts[r] = std::move(sc);
    });

    SurvivalReport rep;
    rep.replicates = config.replicates;
    const double z1 = one_sided_z(config.confidence);

    rep.sigma_hat_min = 2.0;
    for (const auto& ix : qsets) {
        long ok = 0;
        for (long r = 0; r < config.replicates; ++r) {
            const auto& sc = sp_counts[r];
            if (sc[ix[0]] >= 1 && sc[ix[1]] >= 1 && sc[ix[2]] >= 1 && sc[ix[3]] >= 1)
                ++ok;
        }
        SurvivalQuartetRow row;
        row.species = {names[ix[0]], names[ix[1]], names[ix[2]], names[ix[3]]};
        row.sigma_hat = static_cast<double>(ok) / config.replicates;
        row.se = binom_se(row.sigma_hat, config.replicates);
        if (row.sigma_hat < rep.sigma_hat_min) {
            rep.sigma_hat_min = row.sigma_hat;
            rep.sigma_min_se = row.se;
        }
        rep.quartets.push_back(row);
    }

    rep.alpha_hat_max = 0;
    for (int v = 0; v < nv; ++v) {
        double sum = 0, sumsq = 0;
        for (long r = 0; r < config.replicates; ++r) {
            const double c = vtx_counts[r][v];
            sum += c;
            sumsq += c * c;
        }
        VertexRow row;
        row.vertex = v;
        row.vertex_time = species.nodes()[v].time;
        row.mean_lineages = sum / config.replicates;
        const double var =
            std::max(0.0, sumsq / config.replicates -
                              row.mean_lineages * row.mean_lineages);
        row.se = std::sqrt(var / config.replicates);
        if (row.mean_lineages > rep.alpha_hat_max) {
            rep.alpha_hat_max = row.mean_lineages;
            rep.alpha_max_se = row.se;
        }
        rep.vertices.push_back(row);
    }

    rep.sigma_bound = sigma_lower_bound(config.lambda, config.mu, species.depth());
    rep.alpha_bound = alpha_upper_bound(config.lambda, config.mu, species.depth());
    rep.sigma_pass = rep.sigma_hat_min >= rep.sigma_bound - z1 * rep.sigma_min_se;
    rep.alpha_pass = rep.alpha_hat_max <= rep.alpha_bound + z1 * rep.alpha_max_se;
    return rep;
}

void write_survival_csv(const SurvivalReport& r, std::ostream& os) {
    os << "metric,key,estimate,se,bound,pass\n";
    for (const auto& q : r.quartets)
        os << "sigma," << q.species[0] << '|' << q.species[1] << '|' << q.species[2]
           << '|' << q.species[3] << ',' << format_double(q.sigma_hat) << ','
           << format_double(q.se) << ",,\n";
    os << "sigma_min,," << format_double(r.sigma_hat_min) << ','
       << format_double(r.sigma_min_se) << ',' << format_double(r.sigma_bound)
       << ',' << csv_bool(r.sigma_pass) << '\n';
    for (const auto& v : r.vertices)
        os << "alpha,v" << v.vertex << ',' << format_double(v.mean_lineages) << ','
           << format_double(v.se) << ",,\n";
    os << "alpha_max,," << format_double(r.alpha_hat_max) << ','
       << format_double(r.alpha_max_se) << ',' << format_double(r.alpha_bound)
       << ',' << csv_bool(r.alpha_pass) << '\n';
}

CurveReport run_reconstruction_curve(const ExperimentConfig& config) {
    config.validate();
    if (config.k_grid.empty()) throw DataError("curve experiment needs a k grid");
    const SpeciesTree truth = SpeciesTree::from_newick(config.species_newick);
    const auto names = truth.species();
    const BDParams bd{config.lambda, config.mu};
    const CoalescentConfig ccfg{config.rejection_cap};
    const long nk = static_cast<long>(config.k_grid.size());
    const long tasks = nk * config.trials;

    // success flags per task, one pair per method
    std::vector<std::uint8_t> succ_one(tasks, 0), succ_multi(tasks, 0);
    parallel_for(tasks, config.threads, [&](long t) {
        const long k = config.k_grid[t / config.trials];
        RngStream sim_rng = RngStream::derived(config.master_seed, "curve-sim",
                                               static_cast<std::uint64_t>(t));
        std::vector<GeneTree> genes;
        genes.reserve(k);
        for (long j = 0; j < k; ++j) {
            LocusTree obs = prune_losses(simulate_full_locus_tree(truth, bd, sim_rng));
            if (obs.empty()) continue;  // extinct family: no observable tree
            try {
                genes.push_back(simulate_gene_tree(obs, truth, ccfg, sim_rng).gene);
            } catch (const RejectionCapExhausted&) {
                // numerically extreme family: dropped from this trial's input
            }
        }
        if (genes.empty()) return;
        RngStream sel_rng = RngStream::derived(config.master_seed, "curve-sel",
                                               static_cast<std::uint64_t>(t));
        RngStream sub_rng = RngStream::derived(config.master_seed, "curve-sub",
                                               static_cast<std::uint64_t>(t));
        try {
            auto r1 = astral_one_exact(genes, names, sel_rng);
            succ_one[t] = !r1.is_tie() && unrooted_equal(r1.best, truth);
            auto rm = astral_multi_exact(genes, names, {}, &sub_rng);
            succ_multi[t] = !rm.is_tie() && unrooted_equal(rm.best, truth);
        } catch (const DataError&) {
            // no usable gene tree for any quartet: counted as failure
        }
    });

    CurveReport rep;
    for (long ki = 0; ki < nk; ++ki) {
        for (int m = 0; m < 2; ++m) {
            CurvePoint pt;
            pt.k = config.k_grid[ki];
            pt.method = m == 0 ? "one" : "multi";
            pt.trials = config.trials;
            const auto& flags = m == 0 ? succ_one : succ_multi;
            for (long tr = 0; tr < config.trials; ++tr)
                pt.successes += flags[ki * config.trials + tr];
            pt.rate = static_cast<double>(pt.successes) / config.trials;
            pt.se = binom_se(pt.rate, config.trials);
            rep.points.push_back(pt);
        }
    }
    const double z2 = two_sided_z(config.confidence);
    rep.monotone_within_ci = true;
    for (int m = 0; m < 2; ++m)
        for (long ki = 1; ki < nk; ++ki) {
            const auto& prev = rep.points[2 * (ki - 1) + m];
            const auto& cur = rep.points[2 * ki + m];
            if (cur.rate < prev.rate - z2 * (prev.se + cur.se))
                rep.monotone_within_ci = false;
        }
    rep.smallest_k_at_target = -1;
    for (long ki = 0; ki < nk; ++ki) {
        bool both = rep.points[2 * ki].rate >= config.confidence &&
                    rep.points[2 * ki + 1].rate >= config.confidence;
        if (both) {
            rep.smallest_k_at_target = config.k_grid[ki];
            break;
        }
    }
    if (config.lambda != config.mu) {
        BoundInputs bi{truth.min_internal_branch(), truth.depth(), config.lambda,
                       config.mu, static_cast<int>(names.size()),
                       1.0 - config.confidence};
        rep.theory_k = sample_size_bound(bi).k_closed_form;
    }
    return rep;
}

void write_curve_csv(const CurveReport& r, std::ostream& os) {
    os << "k,method,trials,successes,rate,se\n";
    for (const auto& p : r.points)
        os << p.k << ',' << p.method << ',' << p.trials << ',' << p.successes
           << ',' << format_double(p.rate) << ',' << format_double(p.se) << '\n';
    os << "-1,monotone_within_ci," << csv_bool(r.monotone_within_ci) << ",,,\n";
    os << "-1,smallest_k_at_target," << r.smallest_k_at_target << ",,,\n";
    os << "-1,theory_k," << format_double(r.theory_k) << ",,,\n";
}

void write_manifest(const ExperimentConfig& config, const std::string& experiment,
                    double wall_seconds, std::ostream& os) {
    nlohmann::json j;
    j["experiment"] = experiment;
    j["code_version"] = kCodeVersion;
    j["wall_seconds"] = wall_seconds;
    j["config"] = {
        {"species", config.species_newick},
        {"quartet", config.quartet},
        {"lambda", config.lambda},
        {"mu", config.mu},
        {"replicates", config.replicates},
        {"k_grid", config.k_grid},
        {"trials", config.trials},
        {"seed", config.master_seed},
        {"confidence", config.confidence},
        {"min_bin_support", config.min_bin_support},
        {"threads", config.threads},
        {"rejection_cap", config.rejection_cap},
    };
    os << j.dump(2) << '\n';
}

}  // namespace dlcq
