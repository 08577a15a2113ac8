#include "dlcq/quartets.hpp"

#include <algorithm>
#include <cmath>

namespace dlcq {

QuartetTopology tuple_topology(const GeneTree& gene, int a, int b, int c, int d) {
    return gene.quartet_topology(a, b, c, d);
}

QuartetTally tally_one(const std::vector<GeneTree>& genes,
                       const std::array<std::string, 4>& quartet, RngStream& rng) {
    QuartetTally tally;
    tally.species = quartet;
    for (const GeneTree& g : genes) {
        std::array<int, 4> pick{};
        bool ok = true;
        for (int s = 0; s < 4; ++s) {
            auto copies = g.copies_of(quartet[s]);
            if (copies.empty()) {
                ok = false;
                break;
            }
            pick[s] = copies[rng.below(copies.size())];
        }
        if (!ok) {
            ++tally.skipped;
            continue;
        }
        ++tally.usable;
        tally.add(g.quartet_topology(pick[0], pick[1], pick[2], pick[3]), 1.0);
    }
    return tally;
}

QuartetTally tally_multi(const std::vector<GeneTree>& genes,
                         const std::array<std::string, 4>& quartet,
                         std::uint64_t tuple_cap, RngStream* rng) {
    QuartetTally tally;
    tally.species = quartet;
    for (const GeneTree& g : genes) {
        std::array<std::vector<int>, 4> copies;
        bool ok = true;
        for (int s = 0; s < 4; ++s) {
            copies[s] = g.copies_of(quartet[s]);
            if (copies[s].empty()) ok = false;
        }
        if (!ok) {
            ++tally.skipped;
            continue;
        }
        ++tally.usable;
        const std::uint64_t m = static_cast<std::uint64_t>(copies[0].size()) *
                                copies[1].size() * copies[2].size() *
                                copies[3].size();
        if (m <= tuple_cap) {
            for (int a : copies[0])
                for (int b : copies[1])
                    for (int c : copies[2])
                        for (int d : copies[3])
                            tally.add(g.quartet_topology(a, b, c, d), 1.0);
        } else {
            if (!rng)
                throw DataError("tally_multi needs a seeded stream to subsample " +
                                std::to_string(m) + " tuples");
            tally.sampled = true;
            const double scale =
                static_cast<double>(m) / static_cast<double>(tuple_cap);
            for (std::uint64_t s = 0; s < tuple_cap; ++s) {
                int a = copies[0][rng->below(copies[0].size())];
                int b = copies[1][rng->below(copies[1].size())];
                int c = copies[2][rng->below(copies[2].size())];
                int d = copies[3][rng->below(copies[3].size())];
                tally.add(g.quartet_topology(a, b, c, d), scale);
            }
        }
    }
    return tally;
}

DominantResult dominant(const QuartetTally& tally, double confidence) {
    if (tally.usable < 1) throw DataError("dominant: no usable gene trees");
    const std::array<std::pair<QuartetTopology, double>, 3> counts = {{
        {QuartetTopology::AB_CD, tally.n1},
        {QuartetTopology::AC_BD, tally.n2},
        {QuartetTopology::AD_BC, tally.n3},
    }};
    int best = 0;
    for (int i = 1; i < 3; ++i)
        if (counts[i].second > counts[best].second) best = i;
    DominantResult out;
    for (int i = 0; i < 3; ++i)
        if (counts[i].second == counts[best].second) out.tied.push_back(counts[i].first);
    double second = -1;
    for (int i = 0; i < 3; ++i)
        if (i != best) second = std::max(second, counts[i].second);
    const double total = static_cast<double>(tally.usable);
    out.margin = (counts[best].second - second) / total;
    // normal approximation for the difference of two multinomial proportions
    const double p1 = counts[best].second / total;
    const double p2 = second / total;
    const double var = (p1 + p2 - (p1 - p2) * (p1 - p2)) / total;
    // two-sided z for the configured confidence (0.95 -> 1.959964)
    const double z = confidence >= 0.99 ? 2.575829 : (confidence >= 0.95 ? 1.959964 : 1.644854);
    out.ci_halfwidth = z * std::sqrt(std::max(var, 0.0));
    if (out.tied.size() == 1) {
        out.topology = out.tied[0];
        out.tied.clear();
    } else {
        out.topology = QuartetTopology::Unresolved;
    }
    return out;
}

std::vector<std::vector<int>> select_one_copy_per_species(
    const std::vector<GeneTree>& genes, const std::vector<std::string>& species,
    RngStream& rng) {
    std::vector<std::vector<int>> sel(genes.size());
    for (std::size_t i = 0; i < genes.size(); ++i) {
        sel[i].assign(species.size(), -1);
        for (std::size_t s = 0; s < species.size(); ++s) {
            auto copies = genes[i].copies_of(species[s]);
            if (!copies.empty()) sel[i][s] = copies[rng.below(copies.size())];
        }
    }
    return sel;
}

}  // namespace dlcq
