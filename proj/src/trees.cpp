#include "dlcq/trees.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <unordered_map>

namespace dlcq {

const char* to_string(QuartetTopology q) {
    switch (q) {
        case QuartetTopology::AB_CD: return "AB|CD";
        case QuartetTopology::AC_BD: return "AC|BD";
        case QuartetTopology::AD_BC: return "AD|BC";
        case QuartetTopology::Unresolved: return "UNRESOLVED";
    }
    return "?";
}

std::string format_double(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

namespace {

struct RawNode {
    int parent = -1;
    std::vector<int> children;
    std::string label;
    double length = 1.0;
    bool has_length = false;
    std::size_t offset = 0;
};

struct RawTree {
    std::vector<RawNode> nodes;
    int root = -1;
};

bool is_label_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           c == '.' || c == '-' || c == '+';
}

// Minimal Newick grammar: subtree := "(" list ")" [label][":" length]
//                                  | label [":" length]
RawTree parse_raw(std::string_view text) {
    RawTree t;
    std::size_t i = 0;
    auto skip_ws = [&] {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
    };
    auto parse_label = [&]() -> std::string {
        std::size_t start = i;
        while (i < text.size() && is_label_char(text[i])) ++i;
        return std::string(text.substr(start, i - start));
    };
    auto parse_length = [&](RawNode& node) {
        skip_ws();
        if (i < text.size() && text[i] == ':') {
            ++i;
            skip_ws();
            double v = 0;
            auto res = std::from_chars(text.data() + i, text.data() + text.size(), v);
            if (res.ec != std::errc() || res.ptr == text.data() + i)
                throw ParseError("non-numeric branch length", i);
            i = static_cast<std::size_t>(res.ptr - text.data());
            node.length = v;
            node.has_length = true;
        }
    };

    // Recursive descent without recursion depth limits is fine here: inputs
    // come from files we also write, and pathological depth throws on stack
    // growth long after any realistic tree.
    auto parse_subtree = [&](auto&& self, int parent) -> int {
        skip_ws();
        int id = static_cast<int>(t.nodes.size());
        t.nodes.emplace_back();
        t.nodes[id].parent = parent;
        t.nodes[id].offset = i;
        if (i < text.size() && text[i] == '(') {
            ++i;
            while (true) {
                int child = self(self, id);
                t.nodes[id].children.push_back(child);
                skip_ws();
                if (i >= text.size())
                    throw ParseError("unterminated '('", t.nodes[id].offset);
                if (text[i] == ',') {
                    ++i;
                    continue;
                }
                if (text[i] == ')') {
                    ++i;
                    break;
                }
                throw ParseError("expected ',' or ')'", i);
            }
            skip_ws();
            t.nodes[id].label = parse_label();
        } else {
            t.nodes[id].label = parse_label();
            if (t.nodes[id].label.empty())
                throw ParseError("expected leaf label or '('", i);
        }
        parse_length(t.nodes[id]);
        return id;
    };

    t.root = parse_subtree(parse_subtree, -1);
    skip_ws();
    if (i >= text.size() || text[i] != ';')
        throw ParseError("expected ';'", i);
    ++i;
    skip_ws();
    if (i != text.size())
        throw ParseError("trailing characters after ';'", i);
    return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// SpeciesTree

void SpeciesTree::finalize() {
    leaves_.clear();
    std::vector<double> dist(nodes_.size(), 0.0);
    // Nodes are stored parent-before-child by construction.
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
        Node& nd = nodes_[v];
        if (nd.parent >= 0) {
            if (!(nd.length > 0.0) || !std::isfinite(nd.length))
                throw DataError("branch length must be strictly positive and finite");
            dist[v] = dist[nd.parent] + nd.length;
            nd.depth = nodes_[nd.parent].depth + 1;
        }
        if (nd.is_leaf()) {
            if (nd.name.empty()) throw DataError("unnamed species leaf");
            if (nd.name.find('_') != std::string::npos)
                throw DataError("species name contains '_': " + nd.name);
            leaves_.push_back(static_cast<int>(v));
        } else if (nd.right < 0) {
            throw DataError("species tree must be strictly binary");
        }
    }
    double maxd = 0.0;
    for (int leaf : leaves_) maxd = std::max(maxd, dist[leaf]);
    for (std::size_t v = 0; v < nodes_.size(); ++v)
        nodes_[v].time = maxd - dist[v];
    // unique leaf names
    std::vector<std::string> names;
    for (int leaf : leaves_) names.push_back(nodes_[leaf].name);
    std::sort(names.begin(), names.end());
    if (std::adjacent_find(names.begin(), names.end()) != names.end())
        throw DataError("duplicate species leaf name");
    // keep leaves in name order for stable iteration
    std::sort(leaves_.begin(), leaves_.end(), [&](int a, int b) {
        return nodes_[a].name < nodes_[b].name;
    });
}

SpeciesTree SpeciesTree::from_newick(std::string_view text) {
    RawTree raw = parse_raw(text);
    SpeciesTree t;
    t.nodes_.resize(raw.nodes.size());
    for (std::size_t v = 0; v < raw.nodes.size(); ++v) {
        const RawNode& rn = raw.nodes[v];
        Node& nd = t.nodes_[v];
        nd.parent = rn.parent;
        nd.length = rn.length;
        if (rn.children.empty()) {
            nd.name = rn.label;
        } else if (rn.children.size() == 2) {
            nd.left = rn.children[0];
            nd.right = rn.children[1];
        } else {
            throw ParseError("species tree node is not binary", rn.offset);
        }
    }
    t.root_ = raw.root;
    t.finalize();
    return t;
}

SpeciesTree SpeciesTree::build(const std::vector<int>& parents,
                               const std::vector<double>& lengths,
                               const std::vector<std::string>& names) {
    SpeciesTree t;
    const std::size_t n = parents.size();
    t.nodes_.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        t.nodes_[v].parent = parents[v];
        t.nodes_[v].length = lengths[v];
        t.nodes_[v].name = names[v];
        if (parents[v] < 0) {
            t.root_ = static_cast<int>(v);
        } else {
            Node& p = t.nodes_[parents[v]];
            if (static_cast<std::size_t>(parents[v]) >= v)
                throw DataError("parents must precede children");
            if (p.left < 0)
                p.left = static_cast<int>(v);
            else if (p.right < 0)
                p.right = static_cast<int>(v);
            else
                throw DataError("species tree node is not binary");
        }
    }
    if (t.root_ < 0) throw DataError("no root");
    t.finalize();
    return t;
}

int SpeciesTree::find_leaf(std::string_view name) const {
    for (int leaf : leaves_)
        if (nodes_[leaf].name == name) return leaf;
    return -1;
}

std::vector<std::string> SpeciesTree::species() const {
    std::vector<std::string> out;
    out.reserve(leaves_.size());
    for (int leaf : leaves_) out.push_back(nodes_[leaf].name);
    return out;
}

double SpeciesTree::min_internal_branch() const {
    double f = std::numeric_limits<double>::infinity();
    for (const Node& nd : nodes_)
        if (!nd.is_leaf() && nd.parent >= 0) f = std::min(f, nd.length);
    if (!std::isfinite(f)) {
        // No internal edge (n <= 2): fall back to the shortest branch.
        for (const Node& nd : nodes_)
            if (nd.parent >= 0) f = std::min(f, nd.length);
    }
    return f;
}

double SpeciesTree::depth() const { return nodes_[root_].time; }

namespace {

template <typename Tree>
std::string newick_subtree(const Tree& t, int v,
                           std::vector<std::string>& minleaf,
                           const std::vector<std::string>& leaf_label) {
    const auto& nd = t.nodes()[v];
    std::string s;
    if (nd.is_leaf()) {
        minleaf[v] = leaf_label[v];
        s = leaf_label[v];
    } else {
        std::string ls = newick_subtree(t, nd.left, minleaf, leaf_label);
        std::string rs = newick_subtree(t, nd.right, minleaf, leaf_label);
        int first = nd.left, second = nd.right;
        if (minleaf[nd.right] < minleaf[nd.left]) {
            std::swap(ls, rs);
            std::swap(first, second);
        }
        minleaf[v] = std::min(minleaf[first], minleaf[second]);
        s = "(" + ls + "," + rs + ")";
    }
    return s;
}

template <typename Tree>
std::string newick_canonical(const Tree& t, const std::vector<std::string>& leaf_label,
                             const std::vector<double>& edge_length) {
    // Re-run the subtree builder with lengths attached; ordering decided by
    // smallest descendant leaf label.
    std::vector<std::string> minleaf(t.nodes().size());
    // First pass fills minleaf.
    newick_subtree(t, t.root(), minleaf, leaf_label);
    auto rec = [&](auto&& self, int v) -> std::string {
        const auto& nd = t.nodes()[v];
        std::string s;
        if (nd.is_leaf()) {
            s = leaf_label[v];
        } else {
            int a = nd.left, b = nd.right;
            if (minleaf[b] < minleaf[a]) std::swap(a, b);
            s = "(" + self(self, a) + "," + self(self, b) + ")";
        }
        if (nd.parent >= 0) s += ":" + format_double(edge_length[v]);
        return s;
    };
    return rec(rec, t.root()) + ";";
}

}  // namespace

std::string SpeciesTree::to_newick() const {
    std::vector<std::string> labels(nodes_.size());
    std::vector<double> lengths(nodes_.size());
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
        labels[v] = nodes_[v].name;
        lengths[v] = nodes_[v].length;
    }
    return newick_canonical(*this, labels, lengths);
}

namespace {

// Unrooted quartet topology in a rooted binary tree: the pairing (u,v) wins
// iff mrca(u,v) has exactly {u,v} among the four chosen leaves below it,
// for at least one side of the pairing.
template <typename Tree>
QuartetTopology quartet_from_mrcas(const Tree& t, const int leaf[4]) {
    auto mrca = [&](int u, int v) {
        while (u != v) {
            if (t.nodes()[u].depth >= t.nodes()[v].depth)
                u = t.nodes()[u].parent;
            else
                v = t.nodes()[v].parent;
        }
        return u;
    };
    auto is_anc = [&](int anc, int v) {
        while (t.nodes()[v].depth > t.nodes()[anc].depth) v = t.nodes()[v].parent;
        return v == anc;
    };
    auto chosen_below = [&](int z) {
        int c = 0;
        for (int j = 0; j < 4; ++j) c += is_anc(z, leaf[j]);
        return c;
    };
    static constexpr int pairing[3][4] = {{0, 1, 2, 3}, {0, 2, 1, 3}, {0, 3, 1, 2}};
    static constexpr QuartetTopology topo[3] = {
        QuartetTopology::AB_CD, QuartetTopology::AC_BD, QuartetTopology::AD_BC};
    for (int p = 0; p < 3; ++p) {
        int z1 = mrca(leaf[pairing[p][0]], leaf[pairing[p][1]]);
        int z2 = mrca(leaf[pairing[p][2]], leaf[pairing[p][3]]);
        if (chosen_below(z1) == 2 || chosen_below(z2) == 2) return topo[p];
    }
    return QuartetTopology::Unresolved;
}

}  // namespace

QuartetTopology SpeciesTree::quartet_topology(int a, int b, int c, int d) const {
    const int leaf[4] = {a, b, c, d};
    return quartet_from_mrcas(*this, leaf);
}

// ---------------------------------------------------------------------------
// GeneTree

GeneTree GeneTree::build(std::vector<Node> nodes, int root) {
    GeneTree t;
    t.nodes_ = std::move(nodes);
    t.root_ = root;
    // depths + validation via traversal from root
    std::vector<int> stack{root};
    t.nodes_[root].depth = 0;
    std::size_t seen = 0;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        ++seen;
        Node& nd = t.nodes_[v];
        if (nd.is_leaf()) {
            if (nd.right >= 0) throw DataError("gene tree leaf with one child");
            t.leaves_.push_back(v);
            continue;
        }
        if (nd.right < 0) throw DataError("gene tree must be binary");
        for (int ch : {nd.left, nd.right}) {
            if (!(t.nodes_[ch].time < nd.time))
                throw DataError("gene tree node times must decrease toward leaves");
            t.nodes_[ch].depth = nd.depth + 1;
            t.nodes_[ch].parent = v;
            stack.push_back(ch);
        }
    }
    if (seen != t.nodes_.size()) throw DataError("disconnected gene tree nodes");
    std::sort(t.leaves_.begin(), t.leaves_.end(), [&](int a, int b) {
        const Node &x = t.nodes_[a], &y = t.nodes_[b];
        return std::tie(x.species, x.copy) < std::tie(y.species, y.copy);
    });
    return t;
}

GeneTree GeneTree::from_newick(std::string_view text) {
    RawTree raw = parse_raw(text);
    std::vector<Node> nodes(raw.nodes.size());
    std::vector<double> dist(raw.nodes.size(), 0.0);
    double maxd = 0.0;
    for (std::size_t v = 0; v < raw.nodes.size(); ++v) {
        const RawNode& rn = raw.nodes[v];
        Node& nd = nodes[v];
        nd.parent = rn.parent;
        if (rn.parent >= 0) {
            if (!(rn.length > 0.0) || !std::isfinite(rn.length))
                throw ParseError("branch length must be strictly positive", rn.offset);
            dist[v] = dist[rn.parent] + rn.length;
        }
        if (rn.children.empty()) {
            auto us = rn.label.find('_');
            if (us == std::string::npos || us == 0 || us + 1 >= rn.label.size())
                throw ParseError("gene leaf label must be SPECIES_INDEX: " + rn.label,
                                 rn.offset);
            nd.species = rn.label.substr(0, us);
            int copy = 0;
            auto res = std::from_chars(rn.label.data() + us + 1,
                                       rn.label.data() + rn.label.size(), copy);
            if (res.ec != std::errc() || res.ptr != rn.label.data() + rn.label.size())
                throw ParseError("non-numeric copy index in label " + rn.label,
                                 rn.offset);
            nd.copy = copy;
            maxd = std::max(maxd, dist[v]);
        } else if (rn.children.size() == 2) {
            nd.left = rn.children[0];
            nd.right = rn.children[1];
        } else {
            throw ParseError("gene tree node is not binary", rn.offset);
        }
    }
    for (std::size_t v = 0; v < nodes.size(); ++v) nodes[v].time = maxd - dist[v];
    return build(std::move(nodes), raw.root);
}

std::vector<int> GeneTree::copies_of(std::string_view species) const {
    std::vector<int> out;
    for (int leaf : leaves_)
        if (nodes_[leaf].species == species) out.push_back(leaf);
    return out;
}

int GeneTree::find_leaf(std::string_view species, int copy) const {
    for (int leaf : leaves_)
        if (nodes_[leaf].species == species && nodes_[leaf].copy == copy) return leaf;
    return -1;
}

int GeneTree::mrca(int u, int v) const {
    while (u != v) {
        if (nodes_[u].depth >= nodes_[v].depth)
            u = nodes_[u].parent;
        else
            v = nodes_[v].parent;
    }
    return u;
}

QuartetTopology GeneTree::quartet_topology(int a, int b, int c, int d) const {
    const int leaf[4] = {a, b, c, d};
    return quartet_from_mrcas(*this, leaf);
}

std::string GeneTree::to_newick() const {
    std::vector<std::string> labels(nodes_.size());
    std::vector<double> lengths(nodes_.size());
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
        const Node& nd = nodes_[v];
        if (nd.is_leaf())
            labels[v] = nd.species + "_" + std::to_string(nd.copy);
        if (nd.parent >= 0) lengths[v] = nodes_[nd.parent].time - nd.time;
    }
    return newick_canonical(*this, labels, lengths);
}

QuartetTopology restrict_to_quartet(const GeneTree& gene, std::string_view la,
                                    std::string_view lb, std::string_view lc,
                                    std::string_view ld) {
    auto lookup = [&](std::string_view label) {
        auto us = label.find('_');
        if (us == std::string_view::npos)
            throw DataError("gene leaf label must be SPECIES_INDEX: " +
                            std::string(label));
        int copy = 0;
        std::from_chars(label.data() + us + 1, label.data() + label.size(), copy);
        int id = gene.find_leaf(label.substr(0, us), copy);
        if (id < 0) throw DataError("label not in gene tree: " + std::string(label));
        return id;
    };
    int a = lookup(la), b = lookup(lb), c = lookup(lc), d = lookup(ld);
    const std::string* sp[4] = {&gene.nodes()[a].species, &gene.nodes()[b].species,
                                &gene.nodes()[c].species, &gene.nodes()[d].species};
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (*sp[i] == *sp[j]) throw DataError("quartet species must be distinct");
    return gene.quartet_topology(a, b, c, d);
}

// ---------------------------------------------------------------------------
// Topology enumeration

std::uint64_t unrooted_topology_count(int n) {
    std::uint64_t c = 1;
    for (int k = 3; k < n; ++k) c *= static_cast<std::uint64_t>(2 * k - 3);
    return c;
}

namespace {

// Edge-list scaffold for leaf-insertion enumeration. Node ids: 0..n-1 are
// leaves (sorted species order), n.. are internal.
struct Scaffold {
    std::vector<std::pair<int, int>> edges;
    int next_internal;
};

SpeciesTree scaffold_to_tree(const Scaffold& sc, const std::vector<std::string>& sp) {
    const int n = static_cast<int>(sp.size());
    // Root on the edge incident to leaf 0.
    std::vector<std::vector<int>> adj(sc.next_internal);
    for (auto [u, v] : sc.edges) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    int total = sc.next_internal + 1;  // +1 for the root
    std::vector<int> parents(total, -1);
    std::vector<double> lengths(total, 1.0);
    std::vector<std::string> names(total);
    // ids remapped so parents precede children
    std::vector<int> remap(sc.next_internal, -1);
    int next_id = 0;
    int root_id = next_id++;  // synthetic root
    auto rec = [&](auto&& self, int v, int from, int parent_new) -> void {
        int id = next_id++;
        remap[v] = id;
        parents[id] = parent_new;
        if (v < n) names[id] = sp[v];
        for (int w : adj[v])
            if (w != from) self(self, w, v, id);
    };
    int hub = adj[0][0];
    rec(rec, 0, hub, root_id);
    rec(rec, hub, 0, root_id);
    return SpeciesTree::build(parents, lengths, names);
}

void enumerate_rec(Scaffold& sc, int next_leaf, int n,
                   const std::vector<std::string>& sp,
                   std::vector<SpeciesTree>& out) {
    if (next_leaf == n) {
        out.push_back(scaffold_to_tree(sc, sp));
        return;
    }
    const std::size_t m = sc.edges.size();
    for (std::size_t e = 0; e < m; ++e) {
        auto [u, v] = sc.edges[e];
        int w = sc.next_internal++;
        sc.edges[e] = {u, w};
        sc.edges.push_back({w, v});
        sc.edges.push_back({w, next_leaf});
        enumerate_rec(sc, next_leaf + 1, n, sp, out);
        sc.edges.pop_back();
        sc.edges.pop_back();
        sc.edges[e] = {u, v};
        --sc.next_internal;
    }
}

}  // namespace

std::vector<SpeciesTree> enumerate_unrooted_topologies(std::vector<std::string> species,
                                                       int cap) {
    std::sort(species.begin(), species.end());
    const int n = static_cast<int>(species.size());
    if (n < 4) throw DataError("need at least 4 species to enumerate topologies");
    if (n > cap)
        throw DataError("species count " + std::to_string(n) +
                        " exceeds enumeration cap " + std::to_string(cap));
    Scaffold sc;
    sc.next_internal = n + 1;
    sc.edges = {{0, n}, {1, n}, {2, n}};
    std::vector<SpeciesTree> out;
    out.reserve(unrooted_topology_count(n));
    enumerate_rec(sc, 3, n, species, out);
    return out;
}

std::vector<std::uint64_t> internal_bipartitions(const SpeciesTree& t) {
    auto sp = t.species();
    const int n = static_cast<int>(sp.size());
    if (n > 64) throw DataError("bipartition masks support at most 64 species");
    std::unordered_map<std::string, int> bit;
    for (int i = 0; i < n; ++i) bit[sp[i]] = i;
    std::vector<std::uint64_t> below(t.nodes().size(), 0);
    std::vector<std::uint64_t> out;
    const std::uint64_t full = (n == 64) ? ~0ULL : ((1ULL << n) - 1);
    // children have larger indices than parents in our storage order only for
    // built trees; do an explicit post-order to stay general.
    auto rec = [&](auto&& self, int v) -> std::uint64_t {
        const auto& nd = t.nodes()[v];
        std::uint64_t m;
        if (nd.is_leaf())
            m = 1ULL << bit[nd.name];
        else
            m = self(self, nd.left) | self(self, nd.right);
        below[v] = m;
        return m;
    };
    rec(rec, t.root());
    for (std::size_t v = 0; v < t.nodes().size(); ++v) {
        if (static_cast<int>(v) == t.root()) continue;
        std::uint64_t m = below[v];
        if (m & 1ULL) m = full & ~m;
        int pc = std::popcount(m);
        if (pc >= 2 && n - pc >= 2) out.push_back(m);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool unrooted_equal(const SpeciesTree& t1, const SpeciesTree& t2) {
    if (t1.species() != t2.species())
        throw DataError("unrooted_equal requires identical leaf sets");
    return internal_bipartitions(t1) == internal_bipartitions(t2);
}

}  // namespace dlcq
