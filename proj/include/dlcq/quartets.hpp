#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dlcq/rng.hpp"
#include "dlcq/trees.hpp"

namespace dlcq {

// Counts of the three resolved topologies for an ordered species quartet.
// Counts are reals: integers under ASTRAL-one, tuple counts (possibly
// subsample-scaled) under ASTRAL-multi.
struct QuartetTally {
    std::array<std::string, 4> species;
    double n1 = 0;  // AB|CD
    double n2 = 0;  // AC|BD
    double n3 = 0;  // AD|BC
    long usable = 0;
    long skipped = 0;
    bool sampled = false;  // some gene tree was tuple-subsampled

    double count(QuartetTopology q) const {
        switch (q) {
            case QuartetTopology::AB_CD: return n1;
            case QuartetTopology::AC_BD: return n2;
            case QuartetTopology::AD_BC: return n3;
            default: return 0;
        }
    }
    void add(QuartetTopology q, double w) {
        switch (q) {
            case QuartetTopology::AB_CD: n1 += w; break;
            case QuartetTopology::AC_BD: n2 += w; break;
            case QuartetTopology::AD_BC: n3 += w; break;
            default: break;
        }
    }
};

constexpr std::uint64_t kDefaultTupleCap = 1'000'000;

// One uniformly drawn copy per species per gene tree; gene trees missing a
// species copy are skipped. The selection is redrawn per quartet here; the
// inference path reuses one selection per gene tree instead.
QuartetTally tally_one(const std::vector<GeneTree>& genes,
                       const std::array<std::string, 4>& quartet, RngStream& rng);

// All one-copy-per-species 4-tuples, enumerated exactly up to `tuple_cap`
// tuples per gene tree and uniformly subsampled (estimate rescaled to the
// tuple count) beyond it. `rng` is only touched when subsampling happens.
QuartetTally tally_multi(const std::vector<GeneTree>& genes,
                         const std::array<std::string, 4>& quartet,
                         std::uint64_t tuple_cap = kDefaultTupleCap,
                         RngStream* rng = nullptr);

struct DominantResult {
    QuartetTopology topology = QuartetTopology::Unresolved;
    std::vector<QuartetTopology> tied;  // nonempty only on ties
    double margin = 0;                  // (n_max - n_second) / usable
    double ci_halfwidth = 0;            // normal approx on the margin
};

// Argmax counter; ties surface as Unresolved plus the tied set.
// Throws DataError when usable == 0.
DominantResult dominant(const QuartetTally& tally, double confidence = 0.95);

// Per-gene-tree copy selection shared across quartets (the inference path).
// selection[s] is the chosen leaf id for sorted-species index s, or -1.
std::vector<std::vector<int>> select_one_copy_per_species(
    const std::vector<GeneTree>& genes, const std::vector<std::string>& species,
    RngStream& rng);

// Topology of one 4-tuple of gene leaves under the role order (A,B,C,D).
QuartetTopology tuple_topology(const GeneTree& gene, int a, int b, int c, int d);

}  // namespace dlcq
