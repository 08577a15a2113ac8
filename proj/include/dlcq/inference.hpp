#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dlcq/quartets.hpp"
#include "dlcq/rng.hpp"
#include "dlcq/trees.hpp"

namespace dlcq {

enum class ScoreMode { One, Multi };

struct InferenceResult {
    SpeciesTree best;             // canonical-order representative of the argmax
    double best_score = 0;
    std::vector<SpeciesTree> tied;  // every optimum, including best
    std::vector<QuartetTally> tallies;  // C(n,4) rows, sorted-species order
    ScoreMode mode = ScoreMode::One;

    bool is_tie() const { return tied.size() > 1; }
};

struct InferenceOptions {
    int enumeration_cap = 9;
    std::uint64_t tuple_cap = kDefaultTupleCap;
};

// Exact-mode search: every candidate unrooted topology scored against the
// quartet tally table, argmax returned (ties broken by canonical Newick
// order and all reported).
InferenceResult astral_one_exact(const std::vector<GeneTree>& genes,
                                 std::vector<std::string> species, RngStream& rng,
                                 const InferenceOptions& opt = {});

InferenceResult astral_multi_exact(const std::vector<GeneTree>& genes,
                                   std::vector<std::string> species,
                                   const InferenceOptions& opt = {},
                                   RngStream* subsample_rng = nullptr);

// Quartet score of a candidate against a full C(n,4) tally table in
// sorted-species order.
double score_candidate(const SpeciesTree& candidate,
                       const std::vector<std::string>& species,
                       const std::vector<QuartetTally>& table);

// All 4-subsets of {0..n-1} in lexicographic order (tally table order).
std::vector<std::array<int, 4>> quartet_index_sets(int n);

}  // namespace dlcq
