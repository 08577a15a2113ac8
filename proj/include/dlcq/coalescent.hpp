#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlcq/gdl.hpp"
#include "dlcq/rng.hpp"
#include "dlcq/trees.hpp"

namespace dlcq {

struct CoalescentConfig {
    // Max resampling attempts when conditioning a daughter edge on full
    // coalescence.
    long rejection_cap = 1'000'000;
};

// Raised when a daughter edge cannot be conditioned within the cap; names
// the locus edge so the failure is diagnosable rather than silently biased.
class RejectionCapExhausted : public std::runtime_error {
public:
    RejectionCapExhausted(int locus_edge_bottom, long cap)
        : std::runtime_error("rejection cap " + std::to_string(cap) +
                             " exhausted on daughter edge above locus node " +
                             std::to_string(locus_edge_bottom)),
          locus_edge_bottom_(locus_edge_bottom) {}
    int locus_edge_bottom() const { return locus_edge_bottom_; }

private:
    int locus_edge_bottom_;
};

// Gene tree plus the embedding needed to recover latent lineage structure:
// origin[g] is the locus node above which gene node g was created (its own
// locus leaf for sampled leaves, the edge's bottom node for coalescences,
// the locus root for stem coalescences).
struct GeneSimResult {
    GeneTree gene;
    std::vector<int> origin;
};

// One b-MSC sample on a non-empty observed locus tree: Kingman coalescence
// at rate 1 per pair inside every locus edge, daughter edges conditioned on
// full coalescence below the edge top via per-edge rejection, and an
// unbounded stem above the locus root.
GeneSimResult simulate_gene_tree(const LocusTree& locus, const SpeciesTree& species,
                                 const CoalescentConfig& cfg, RngStream& rng);

// Root-configuration taxonomy for the lineages of the chosen copies at a
// designated species vertex. The E3/G3/K3 variants cover three-copy traces
// (caterpillar quartets, where the vertex is ancestral to three of the four
// species).
enum class RootEvent {
    E, F_ab, F_ac, F_ad, F_bc, F_bd, F_cd,
    G_ab, G_ac, G_ad,
    H_abc, H_abd, H_acd, H_bcd,
    K,
    E3, G3_ab, G3_ac, G3_bc, K3,
};

const char* to_string(RootEvent e);

struct LatentTrace {
    int vertex = -1;  // species vertex R
    int lineages = 0;  // I at R
    int ncopies = 0;   // 3 or 4 chosen copies
    std::array<int, 4> lineage_id{-1, -1, -1, -1};  // i_a..i_d (locus node ids)
    RootEvent event = RootEvent::K;
    bool nc = false;    // no coalescence among chosen lineages below R
    bool c_ab = false;  // chosen a,b coalesce below R
};

// Classifies the latent configuration of the chosen gene-tree leaves at
// species vertex R. Pass -1 as the fourth leaf for a three-copy trace.
// Throws DataError when R is not ancestral to some chosen copy.
LatentTrace extract_trace(const LocusTree& locus, const GeneSimResult& sim,
                          const SpeciesTree& species, int vertex,
                          const std::array<int, 4>& gene_leaves);

// Asserts the bounded-edge postcondition on a simulated gene tree: the
// leaves below every daughter edge have their common ancestor strictly
// below the edge top. Throws DataError on violation.
void check_bounded_postcondition(const LocusTree& locus, const GeneSimResult& sim);

}  // namespace dlcq
