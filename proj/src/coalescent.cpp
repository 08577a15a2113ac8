#include "dlcq/coalescent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dlcq {

const char* to_string(RootEvent e) {
    switch (e) {
        case RootEvent::E: return "E";
        case RootEvent::F_ab: return "F_ab";
        case RootEvent::F_ac: return "F_ac";
        case RootEvent::F_ad: return "F_ad";
        case RootEvent::F_bc: return "F_bc";
        case RootEvent::F_bd: return "F_bd";
        case RootEvent::F_cd: return "F_cd";
        case RootEvent::G_ab: return "G_ab";
        case RootEvent::G_ac: return "G_ac";
        case RootEvent::G_ad: return "G_ad";
        case RootEvent::H_abc: return "H_abc";
        case RootEvent::H_abd: return "H_abd";
        case RootEvent::H_acd: return "H_acd";
        case RootEvent::H_bcd: return "H_bcd";
        case RootEvent::K: return "K";
        case RootEvent::E3: return "E3";
        case RootEvent::G3_ab: return "G3_ab";
        case RootEvent::G3_ac: return "G3_ac";
        case RootEvent::G3_bc: return "G3_bc";
        case RootEvent::K3: return "K3";
    }
    return "?";
}

namespace {

struct Merge {
    double elapsed;
    int i, j;  // lineage list positions at merge time, i < j
};

// Kingman merge schedule for m lineages over duration d (infinite for the
// stem). When bounded, only schedules reaching a single lineage within d
// are produced; returns false if the cap runs out.
bool plan_edge(int m, double d, bool bounded, long cap, RngStream& rng,
               std::vector<Merge>& plan) {
    long attempts = 0;
    while (true) {
        plan.clear();
        int mm = m;
        double t = 0.0;
        bool complete = true;
        while (mm > 1) {
            double rate = 0.5 * mm * (mm - 1);
            t += rng.exponential(rate);
            if (t >= d) {
                complete = false;
                break;
            }
            auto k = static_cast<int>(rng.below(
                static_cast<std::uint64_t>(mm) * (mm - 1) / 2));
            int i = 0;
            while (k >= mm - 1 - i) {
                k -= mm - 1 - i;
                ++i;
            }
            int j = i + 1 + k;
            plan.push_back({t, i, j});
            --mm;
        }
        if (!bounded || complete) return true;
        if (++attempts >= cap) return false;
    }
}

}  // namespace

GeneSimResult simulate_gene_tree(const LocusTree& locus, const SpeciesTree& species,
                                 const CoalescentConfig& cfg, RngStream& rng) {
    if (locus.empty()) throw DataError("cannot run the coalescent on an empty locus tree");
    if (locus.nodes[locus.root].daughter)
        throw DataError("daughter flag on the locus root edge is not defined");

    std::vector<GeneTree::Node> gnodes;
    std::vector<int> origin;
    auto new_gene_node = [&](double time, int ctx) {
        gnodes.emplace_back();
        gnodes.back().time = time;
        origin.push_back(ctx);
        return static_cast<int>(gnodes.size()) - 1;
    };

    std::vector<Merge> plan;
    // Applies a merge schedule; times in the plan are elapsed above t_bottom.
    auto apply_plan = [&](std::vector<int>& lineages, double t_bottom, int ctx) {
        for (const Merge& m : plan) {
            int g = new_gene_node(t_bottom + m.elapsed, ctx);
            gnodes[g].left = lineages[m.i];
            gnodes[g].right = lineages[m.j];
            lineages[m.i] = g;
            lineages.erase(lineages.begin() + m.j);
        }
    };

    // Lineages present at the top of each locus subtree.
    auto process = [&](auto&& self, int v) -> std::vector<int> {
        const auto& nd = locus.nodes[v];
        if (nd.is_leaf()) {
            int g = new_gene_node(nd.time, v);
            gnodes[g].species = species.nodes()[nd.species_node].name;
            gnodes[g].copy = nd.copy;
            return {g};
        }
        std::vector<int> at_top;
        for (int c : {nd.left, nd.right}) {
            if (c < 0) continue;
            std::vector<int> lineages = self(self, c);
            const double duration = nd.time - locus.nodes[c].time;
            const bool bounded = locus.nodes[c].daughter;
            if (!plan_edge(static_cast<int>(lineages.size()), duration, bounded,
                           cfg.rejection_cap, rng, plan))
                throw RejectionCapExhausted(c, cfg.rejection_cap);
            apply_plan(lineages, locus.nodes[c].time, c);
            at_top.insert(at_top.end(), lineages.begin(), lineages.end());
        }
        return at_top;
    };

    std::vector<int> at_root = process(process, locus.root);
    // Unbounded Kingman stem above the locus root.
    plan_edge(static_cast<int>(at_root.size()),
              std::numeric_limits<double>::infinity(), false, cfg.rejection_cap,
              rng, plan);
    apply_plan(at_root, locus.nodes[locus.root].time, locus.root);

    GeneSimResult out;
    out.gene = GeneTree::build(std::move(gnodes), at_root.front());
    out.origin = std::move(origin);
    return out;
}

namespace {

// Locus node whose top edge contains the ancestral lineage of gene leaf
// `leaf` just below time t; the returned node's parent sits at or above t.
int locus_lineage_below(const LocusTree& locus, const GeneSimResult& sim,
                        int leaf, double t) {
    const auto& gn = sim.gene.nodes();
    int g = leaf;
    while (gn[g].parent >= 0 && gn[gn[g].parent].time < t) g = gn[g].parent;
    int L = sim.origin[g];
    while (locus.nodes[L].parent >= 0 && locus.nodes[locus.nodes[L].parent].time < t)
        L = locus.nodes[L].parent;
    return L;
}

RootEvent classify4(const std::array<int, 4>& id) {
    const bool ab = id[0] == id[1], ac = id[0] == id[2], ad = id[0] == id[3];
    const bool bc = id[1] == id[2], bd = id[1] == id[3], cd = id[2] == id[3];
    const int eq = ab + ac + ad + bc + bd + cd;
    if (eq == 0) return RootEvent::E;
    if (eq == 6) return RootEvent::K;
    if (eq == 1) {
        if (ab) return RootEvent::F_ab;
        if (ac) return RootEvent::F_ac;
        if (ad) return RootEvent::F_ad;
        if (bc) return RootEvent::F_bc;
        if (bd) return RootEvent::F_bd;
        return RootEvent::F_cd;
    }
    if (eq == 2) {
        if (ab && cd) return RootEvent::G_ab;
        if (ac && bd) return RootEvent::G_ac;
        return RootEvent::G_ad;
    }
    // eq == 3: one triple
    if (ab && ac) return RootEvent::H_abc;
    if (ab && ad) return RootEvent::H_abd;
    if (ac && ad) return RootEvent::H_acd;
    return RootEvent::H_bcd;
}

RootEvent classify3(const std::array<int, 4>& id) {
    const bool ab = id[0] == id[1], ac = id[0] == id[2], bc = id[1] == id[2];
    if (ab && ac) return RootEvent::K3;
    if (ab) return RootEvent::G3_ab;
    if (ac) return RootEvent::G3_ac;
    if (bc) return RootEvent::G3_bc;
    return RootEvent::E3;
}

}  // namespace

LatentTrace extract_trace(const LocusTree& locus, const GeneSimResult& sim,
                          const SpeciesTree& species, int vertex,
                          const std::array<int, 4>& gene_leaves) {
    const double t_R = species.nodes()[vertex].time;
    LatentTrace tr;
    tr.vertex = vertex;
    tr.ncopies = gene_leaves[3] < 0 ? 3 : 4;
    for (int x = 0; x < tr.ncopies; ++x) {
        int L = locus_lineage_below(locus, sim, gene_leaves[x], t_R);
        int top = locus.nodes[L].parent;
        if (top < 0 || locus.nodes[top].species_node != vertex ||
            locus.nodes[top].event != LocusEvent::Speciation)
            throw DataError("vertex is not ancestral to chosen copy " +
                            std::to_string(x));
        tr.lineage_id[x] = top;
    }
    for (const auto& nd : locus.nodes)
        if (nd.species_node == vertex && nd.event == LocusEvent::Speciation)
            ++tr.lineages;
    tr.event = tr.ncopies == 4 ? classify4(tr.lineage_id) : classify3(tr.lineage_id);
    tr.nc = true;
    for (int x = 0; x < tr.ncopies; ++x)
        for (int y = x + 1; y < tr.ncopies; ++y) {
            int m = sim.gene.mrca(gene_leaves[x], gene_leaves[y]);
            if (sim.gene.nodes()[m].time < t_R) tr.nc = false;
        }
    tr.c_ab = sim.gene.nodes()[sim.gene.mrca(gene_leaves[0], gene_leaves[1])].time < t_R;
    return tr;
}

void check_bounded_postcondition(const LocusTree& locus, const GeneSimResult& sim) {
    // gene leaves grouped by locus leaf
    std::vector<std::vector<int>> under(locus.nodes.size());
    for (int gl : sim.gene.leaves()) under[sim.origin[gl]].push_back(gl);
    // propagate upward (children have larger ids than parents)
    for (int v = static_cast<int>(locus.nodes.size()) - 1; v > 0; --v) {
        int p = locus.nodes[v].parent;
        under[p].insert(under[p].end(), under[v].begin(), under[v].end());
    }
    for (std::size_t v = 0; v < locus.nodes.size(); ++v) {
        if (!locus.nodes[v].daughter) continue;
        const double top = locus.nodes[locus.nodes[v].parent].time;
        const auto& leaves = under[v];
        if (leaves.empty()) throw DataError("daughter edge with no sampled leaves");
        int m = leaves[0];
        for (std::size_t i = 1; i < leaves.size(); ++i)
            m = sim.gene.mrca(m, leaves[i]);
        if (!(sim.gene.nodes()[m].time < top))
            throw DataError("lineages entering a daughter edge did not coalesce below its top");
    }
}

}  // namespace dlcq
