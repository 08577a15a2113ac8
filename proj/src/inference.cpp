#include "dlcq/inference.hpp"

#include <algorithm>

namespace dlcq {

std::vector<std::array<int, 4>> quartet_index_sets(int n) {
    std::vector<std::array<int, 4>> out;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k)
                for (int l = k + 1; l < n; ++l) out.push_back({i, j, k, l});
    return out;
}

double score_candidate(const SpeciesTree& candidate,
                       const std::vector<std::string>& species,
                       const std::vector<QuartetTally>& table) {
    std::vector<int> leaf(species.size());
    for (std::size_t s = 0; s < species.size(); ++s) {
        leaf[s] = candidate.find_leaf(species[s]);
        if (leaf[s] < 0) throw DataError("candidate missing species " + species[s]);
    }
    const auto sets = quartet_index_sets(static_cast<int>(species.size()));
    if (sets.size() != table.size()) throw DataError("tally table size mismatch");
    double score = 0;
    for (std::size_t q = 0; q < sets.size(); ++q) {
        const auto& ix = sets[q];
        QuartetTopology topo = candidate.quartet_topology(leaf[ix[0]], leaf[ix[1]],
                                                          leaf[ix[2]], leaf[ix[3]]);
        score += table[q].count(topo);
    }
    return score;
}

namespace {

InferenceResult search(const std::vector<std::string>& species,
                       std::vector<QuartetTally> table, ScoreMode mode,
                       const InferenceOptions& opt) {
    long usable_total = 0;
    for (const auto& t : table) usable_total += t.usable;
    if (usable_total == 0) throw DataError("no usable gene tree for any quartet");

    auto candidates = enumerate_unrooted_topologies(species, opt.enumeration_cap);
    double best = -1;
    std::vector<std::size_t> argmax;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        double s = score_candidate(candidates[i], species, table);
        if (s > best) {
            best = s;
            argmax.assign(1, i);
        } else if (s == best) {
            argmax.push_back(i);
        }
    }
    // tie break by canonical Newick order
    std::sort(argmax.begin(), argmax.end(), [&](std::size_t a, std::size_t b) {
        return candidates[a].to_newick() < candidates[b].to_newick();
    });
    InferenceResult out{candidates[argmax[0]], best, {}, std::move(table), mode};
    for (std::size_t i : argmax) out.tied.push_back(candidates[i]);
    return out;
}

}  // namespace

InferenceResult astral_one_exact(const std::vector<GeneTree>& genes,
                                 std::vector<std::string> species, RngStream& rng,
                                 const InferenceOptions& opt) {
    std::sort(species.begin(), species.end());
    const int n = static_cast<int>(species.size());
    if (n < 4 || n > opt.enumeration_cap)
        throw DataError("species count out of range for exact search");
    // One copy selection per gene tree, reused across all quartets.
    auto sel = select_one_copy_per_species(genes, species, rng);
    std::vector<QuartetTally> table;
    for (const auto& ix : quartet_index_sets(n)) {
        QuartetTally tally;
        tally.species = {species[ix[0]], species[ix[1]], species[ix[2]],
                         species[ix[3]]};
        for (std::size_t i = 0; i < genes.size(); ++i) {
            const int a = sel[i][ix[0]], b = sel[i][ix[1]], c = sel[i][ix[2]],
                      d = sel[i][ix[3]];
            if (a < 0 || b < 0 || c < 0 || d < 0) {
                ++tally.skipped;
                continue;
            }
            ++tally.usable;
            tally.add(genes[i].quartet_topology(a, b, c, d), 1.0);
        }
        table.push_back(std::move(tally));
    }
    return search(species, std::move(table), ScoreMode::One, opt);
}

InferenceResult astral_multi_exact(const std::vector<GeneTree>& genes,
                                   std::vector<std::string> species,
                                   const InferenceOptions& opt,
                                   RngStream* subsample_rng) {
    std::sort(species.begin(), species.end());
    const int n = static_cast<int>(species.size());
    if (n < 4 || n > opt.enumeration_cap)
        throw DataError("species count out of range for exact search");
    std::vector<QuartetTally> table;
    for (const auto& ix : quartet_index_sets(n)) {
        table.push_back(tally_multi(genes,
                                    {species[ix[0]], species[ix[1]], species[ix[2]],
                                     species[ix[3]]},
                                    opt.tuple_cap, subsample_rng));
    }
    return search(species, std::move(table), ScoreMode::Multi, opt);
}

}  // namespace dlcq
