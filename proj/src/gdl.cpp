#include "dlcq/gdl.hpp"

#include <algorithm>
#include <cmath>

namespace dlcq {

namespace {

const char* event_name(LocusEvent e) {
    switch (e) {
        case LocusEvent::Speciation: return "speciation";
        case LocusEvent::Duplication: return "dup";
        case LocusEvent::Leaf: return "leaf";
        case LocusEvent::Loss: return "loss";
    }
    return "?";
}

}  // namespace

LocusTree simulate_full_locus_tree(const SpeciesTree& species, const BDParams& bd,
                                   RngStream& rng) {
    LocusTree t;
    const auto& sn = species.nodes();
    const double total = bd.lambda + bd.mu;
    const double p_dup = total > 0.0 ? bd.lambda / total : 0.0;

    auto new_node = [&](int parent, LocusEvent ev, double time, int sv,
                        bool daughter) {
        int id = static_cast<int>(t.nodes.size());
        t.nodes.emplace_back();
        t.nodes[id].parent = parent;
        t.nodes[id].event = ev;
        t.nodes[id].time = time;
        t.nodes[id].species_node = sv;
        t.nodes[id].daughter = daughter;
        if (parent >= 0) {
            if (t.nodes[parent].left < 0)
                t.nodes[parent].left = id;
            else
                t.nodes[parent].right = id;
        }
        return id;
    };

    // One copy evolving down the species edge that ends at vertex `sv`,
    // entering at time `t_top` (time before present, decreasing forward).
    auto sim_copy = [&](auto&& self, int parent, int sv, double t_top,
                        bool daughter) -> void {
        const double t_bottom = sn[sv].time;
        double t_cur = t_top;
        while (true) {
            double t_ev = total > 0.0 ? t_cur - rng.exponential(total)
                                      : -std::numeric_limits<double>::infinity();
            if (t_ev <= t_bottom) {
                if (sn[sv].is_leaf()) {
                    new_node(parent, LocusEvent::Leaf, t_bottom, sv, daughter);
                } else {
                    int id = new_node(parent, LocusEvent::Speciation, t_bottom, sv,
                                      daughter);
                    self(self, id, sn[sv].left, t_bottom, false);
                    self(self, id, sn[sv].right, t_bottom, false);
                }
                return;
            }
            if (rng.bernoulli(p_dup)) {
                int id = new_node(parent, LocusEvent::Duplication, t_ev, sv, daughter);
                bool left_daughter = rng.bernoulli(0.5);
                self(self, id, sv, t_ev, left_daughter);
                self(self, id, sv, t_ev, !left_daughter);
                return;
            }
            new_node(parent, LocusEvent::Loss, t_ev, sv, daughter);
            return;
        }
    };

    // The process starts with a single copy exactly at the root vertex,
    // which immediately bifurcates into the two root edges.
    int sroot = species.root();
    t.root = new_node(-1, LocusEvent::Speciation, sn[sroot].time, sroot, false);
    sim_copy(sim_copy, t.root, sn[sroot].left, sn[sroot].time, false);
    sim_copy(sim_copy, t.root, sn[sroot].right, sn[sroot].time, false);
    return t;
}

LocusTree prune_losses(const LocusTree& full) {
    LocusTree out;
    if (full.empty()) return out;
    const auto& nodes = full.nodes;
    std::vector<char> survives(nodes.size(), 0);
    // children carry larger indices than their parent by construction
    for (int v = static_cast<int>(nodes.size()) - 1; v >= 0; --v) {
        const auto& nd = nodes[v];
        if (nd.event == LocusEvent::Leaf)
            survives[v] = 1;
        else
            survives[v] = (nd.left >= 0 && survives[nd.left]) ||
                          (nd.right >= 0 && survives[nd.right]);
    }
    if (!survives[full.root]) return out;

    std::vector<int> remap(nodes.size(), -1);
    for (std::size_t v = 0; v < nodes.size(); ++v) {
        if (!survives[v]) continue;
        const auto& nd = nodes[v];
        int id = static_cast<int>(out.nodes.size());
        remap[v] = id;
        out.nodes.emplace_back();
        auto& copy = out.nodes[id];
        copy.event = nd.event;
        copy.time = nd.time;
        copy.species_node = nd.species_node;
        copy.daughter = nd.daughter;
        copy.parent = nd.parent >= 0 ? remap[nd.parent] : -1;
        if (copy.parent >= 0) {
            auto& p = out.nodes[copy.parent];
            if (p.left < 0)
                p.left = id;
            else
                p.right = id;
        }
    }
    out.root = remap[full.root];

    // In-order copy indices per species.
    std::map<int, int> next_copy;  // species_node -> next index
    auto rec = [&](auto&& self, int v) -> void {
        auto& nd = out.nodes[v];
        if (nd.is_leaf()) {
            nd.copy = next_copy[nd.species_node]++;
            return;
        }
        self(self, nd.left);
        if (nd.right >= 0) self(self, nd.right);
    };
    rec(rec, out.root);
    return out;
}

std::vector<int> LocusTree::extant_leaves() const {
    std::vector<int> out;
    if (empty()) return out;
    auto rec = [&](auto&& self, int v) -> void {
        const auto& nd = nodes[v];
        if (nd.is_leaf()) {
            if (nd.event == LocusEvent::Leaf) out.push_back(v);
            return;
        }
        self(self, nd.left);
        if (nd.right >= 0) self(self, nd.right);
    };
    rec(rec, root);
    return out;
}

std::string LocusTree::species_of(int leaf, const SpeciesTree& species) const {
    return species.nodes()[nodes[leaf].species_node].name;
}

std::string LocusTree::to_newick(const SpeciesTree& species) const {
    if (empty()) return ";";
    auto rec = [&](auto&& self, int v) -> std::string {
        const auto& nd = nodes[v];
        std::string s;
        if (nd.is_leaf()) {
            if (nd.event == LocusEvent::Leaf)
                s = species.nodes()[nd.species_node].name + "_" +
                    std::to_string(nd.copy);
        } else if (nd.unary()) {
            s = "(" + self(self, nd.left) + ")";
        } else {
            s = "(" + self(self, nd.left) + "," + self(self, nd.right) + ")";
        }
        s += std::string("[&event=") + event_name(nd.event);
        if (nd.parent >= 0) {
            s += ",daughter=";
            s += nd.daughter ? '1' : '0';
            s += "]:" + format_double(nodes[nd.parent].time - nd.time);
        } else {
            s += "]";
        }
        return s;
    };
    return rec(rec, root) + ";";
}

CopyCensus census(const LocusTree& observed, const SpeciesTree& species, int vertex) {
    if (vertex < 0 || vertex >= static_cast<int>(species.nodes().size()))
        throw DataError("census: vertex not in species tree");
    CopyCensus c;
    for (int leaf : species.leaves()) c.per_species[species.nodes()[leaf].name] = 0;
    if (observed.empty()) return c;
    for (const auto& nd : observed.nodes) {
        if (nd.is_leaf() && nd.event == LocusEvent::Leaf)
            ++c.per_species[species.nodes()[nd.species_node].name];
    }
    if (species.nodes()[vertex].is_leaf()) {
        c.lineages_at_vertex = c.per_species[species.nodes()[vertex].name];
    } else {
        for (const auto& nd : observed.nodes)
            if (nd.species_node == vertex && nd.event == LocusEvent::Speciation)
                ++c.lineages_at_vertex;
    }
    return c;
}

void validate_locus_tree(const LocusTree& t, const SpeciesTree& species,
                         bool pruned) {
    if (t.empty()) return;
    const auto& sn = species.nodes();
    for (std::size_t v = 0; v < t.nodes.size(); ++v) {
        const auto& nd = t.nodes[v];
        if (nd.parent >= 0 && !(nd.time < t.nodes[nd.parent].time))
            throw DataError("locus node time not below its parent");
        switch (nd.event) {
            case LocusEvent::Leaf:
                if (!nd.is_leaf()) throw DataError("extant leaf with children");
                if (!sn[nd.species_node].is_leaf() ||
                    nd.time != sn[nd.species_node].time)
                    throw DataError("extant leaf not at its species leaf time");
                break;
            case LocusEvent::Loss:
                if (pruned) throw DataError("loss tip survived pruning");
                if (!nd.is_leaf()) throw DataError("loss tip with children");
                break;
            case LocusEvent::Duplication: {
                if (nd.left < 0) throw DataError("duplication without children");
                int daughters = t.nodes[nd.left].daughter ? 1 : 0;
                if (nd.right >= 0) daughters += t.nodes[nd.right].daughter ? 1 : 0;
                if (!pruned && daughters != 1)
                    throw DataError("duplication must have exactly one daughter edge");
                if (pruned && nd.unary() && daughters > 1)
                    throw DataError("bad daughter flag on unary duplication");
                break;
            }
            case LocusEvent::Speciation: {
                if (nd.left < 0) throw DataError("speciation without children");
                if (sn[nd.species_node].is_leaf() ||
                    nd.time != sn[nd.species_node].time)
                    throw DataError("speciation not at a species vertex time");
                for (int ch : {nd.left, nd.right})
                    if (ch >= 0 && t.nodes[ch].daughter)
                        throw DataError("daughter flag on speciation child edge");
                if (!pruned && nd.right < 0)
                    throw DataError("unary speciation in full tree");
                break;
            }
        }
    }
    if (t.nodes[t.root].daughter || t.nodes[t.root].parent != -1)
        throw DataError("bad root");
}

}  // namespace dlcq
