#pragma once

#include <map>
#include <string>
#include <vector>

#include "dlcq/rng.hpp"
#include "dlcq/trees.hpp"

namespace dlcq {

// Duplication/loss rates per gene copy per coalescent time unit. The
// simulator accepts lambda == mu; the bound evaluators reject it.
struct BDParams {
    double lambda = 0.0;
    double mu = 0.0;
};

enum class LocusEvent { Speciation, Duplication, Leaf, Loss };

// Gene-family tree embedded in the species tree. After pruning, nodes with
// a single surviving child are kept as degree-2 nodes (right == -1) so that
// duplication times, and with them bounded-coalescent edge tops, survive.
class LocusTree {
public:
    struct Node {
        int parent = -1;
        int left = -1;
        int right = -1;
        LocusEvent event = LocusEvent::Leaf;
        double time = 0.0;
        int species_node = -1;  // species vertex (speciation/leaf) or edge-bottom vertex
        bool daughter = false;  // edge to parent is a daughter edge
        int copy = -1;          // extant leaves, assigned by in-order traversal
        bool is_leaf() const { return left < 0 && right < 0; }
        bool unary() const { return left >= 0 && right < 0; }
    };

    std::vector<Node> nodes;
    int root = -1;

    bool empty() const { return nodes.empty(); }

    // Extant leaf ids in in-order (left-to-right) traversal order.
    std::vector<int> extant_leaves() const;

    std::string species_of(int leaf, const SpeciesTree& species) const;

    // Newick with bracketed metadata: label[&event=...,daughter=0|1]:length.
    std::string to_newick(const SpeciesTree& species) const;
};

struct CopyCensus {
    std::map<std::string, int> per_species;  // extant copies per species
    int lineages_at_vertex = 0;              // I at the queried vertex

    bool all_at_least_one(const std::vector<std::string>& sp) const {
        for (const auto& s : sp) {
            auto it = per_species.find(s);
            if (it == per_species.end() || it->second < 1) return false;
        }
        return true;
    }
};

// Top-down birth-death process within the species tree, starting from a
// single copy at the root vertex. Loss tips are retained (event Loss).
LocusTree simulate_full_locus_tree(const SpeciesTree& species, const BDParams& bd,
                                   RngStream& rng);

// Removes loss tips and dead paths; retains degree-2 duplication (and
// speciation) nodes on surviving paths. Assigns extant copy indices.
// Returns an empty tree when nothing survives.
LocusTree prune_losses(const LocusTree& full);

// Copy counts per species and the lineage count I at the given species
// vertex of the observed tree (lineages crossing the vertex time, counted
// just below it). Throws DataError on an invalid vertex id.
CopyCensus census(const LocusTree& observed, const SpeciesTree& species, int vertex);

// Structural invariants of a simulated locus tree; throws DataError with a
// description on the first violation. Used by tests and by simulation in
// checked mode.
void validate_locus_tree(const LocusTree& t, const SpeciesTree& species,
                         bool pruned);

}  // namespace dlcq
