#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dlcq {

// Thrown on malformed Newick input; carries the character offset.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : std::runtime_error(msg + " (at offset " + std::to_string(offset) + ")"),
          offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

// Thrown on semantically invalid data (duplicate leaves, bad leaf sets, ...).
class DataError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class QuartetTopology { AB_CD, AC_BD, AD_BC, Unresolved };

const char* to_string(QuartetTopology q);

// Rooted binary species tree with branch lengths in coalescent units.
// Node times are distances before the present: the root carries the
// largest time and the deepest leaves sit at time 0. Immutable after
// construction.
class SpeciesTree {
public:
    struct Node {
        int parent = -1;
        int left = -1;   // -1 on leaves
        int right = -1;
        double length = 0.0;  // branch to parent; 0 on the root
        double time = 0.0;
        int depth = 0;  // edges from root
        std::string name;  // leaves only
        bool is_leaf() const { return left < 0; }
    };

    static SpeciesTree from_newick(std::string_view text);

    // Builds a tree from explicit structure; validates the same invariants
    // as parsing. children[i] == {-1,-1} marks a leaf named names[i].
    static SpeciesTree build(const std::vector<int>& parents,
                             const std::vector<double>& lengths,
                             const std::vector<std::string>& names);

    const std::vector<Node>& nodes() const { return nodes_; }
    int root() const { return root_; }
    int leaf_count() const { return static_cast<int>(leaves_.size()); }
    const std::vector<int>& leaves() const { return leaves_; }

    // Leaf node id for a species name, or -1.
    int find_leaf(std::string_view name) const;

    // Sorted species names.
    std::vector<std::string> species() const;

    double min_internal_branch() const;  // f
    double depth() const;                // Delta = root time

    std::string to_newick() const;  // canonical form

    QuartetTopology quartet_topology(int leaf_a, int leaf_b, int leaf_c,
                                     int leaf_d) const;

private:
    std::vector<Node> nodes_;
    std::vector<int> leaves_;
    int root_ = -1;
    void finalize();  // times, depths, validation
    friend class TreeBuilder;
};

// Multi-labeled binary gene tree. Leaves carry (species, copy-index);
// internal nodes carry coalescence times (before present).
class GeneTree {
public:
    struct Node {
        int parent = -1;
        int left = -1;
        int right = -1;
        double time = 0.0;
        int depth = 0;
        std::string species;  // leaves only
        int copy = -1;        // leaves only
        bool is_leaf() const { return left < 0; }
    };

    // Leaf labels follow the "SPECIES_INDEX" convention; species names
    // must not contain underscores.
    static GeneTree from_newick(std::string_view text);

    static GeneTree build(std::vector<Node> nodes, int root);

    const std::vector<Node>& nodes() const { return nodes_; }
    int root() const { return root_; }
    int leaf_count() const { return static_cast<int>(leaves_.size()); }
    const std::vector<int>& leaves() const { return leaves_; }

    // Leaf ids of every copy of a species, in copy-index order.
    std::vector<int> copies_of(std::string_view species) const;
    int find_leaf(std::string_view species, int copy) const;

    std::string to_newick() const;

    int mrca(int u, int v) const;

    QuartetTopology quartet_topology(int leaf_a, int leaf_b, int leaf_c,
                                     int leaf_d) const;

private:
    std::vector<Node> nodes_;
    std::vector<int> leaves_;
    int root_ = -1;
};

// Induced unrooted topology of four gene copies mapped to roles A,B,C,D.
QuartetTopology restrict_to_quartet(const GeneTree& gene,
                                    std::string_view label_a,
                                    std::string_view label_b,
                                    std::string_view label_c,
                                    std::string_view label_d);

// All (2n-5)!! pairwise non-isomorphic unrooted binary topologies on the
// given species, in deterministic order, as rooted representatives with
// unit branch lengths. Refuses n outside [4, cap].
std::vector<SpeciesTree> enumerate_unrooted_topologies(
    std::vector<std::string> species, int cap = 9);

// Number of unrooted binary topologies, (2n-5)!!.
std::uint64_t unrooted_topology_count(int n);

// True iff same unrooted topology (identical internal bipartition sets).
// Throws DataError on differing leaf sets.
bool unrooted_equal(const SpeciesTree& t1, const SpeciesTree& t2);

// Normalized internal bipartitions over the sorted species list (bitmask
// per bipartition, side not containing species 0). Sorted.
std::vector<std::uint64_t> internal_bipartitions(const SpeciesTree& t);

std::string format_double(double x);  // shortest round-trip decimal

}  // namespace dlcq
