#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dlcq/bounds.hpp"
#include "dlcq/gdl.hpp"
#include "dlcq/rng.hpp"
#include "dlcq/trees.hpp"

using namespace dlcq;

namespace {
const char* kQuartet = "((A:1,B:1):0.5,(C:1,D:1):0.5);";
}

TEST_CASE("zero rates reproduce the species tree") {
    auto sp = SpeciesTree::from_newick(kQuartet);
    RngStream rng(1);
    for (int rep = 0; rep < 20; ++rep) {
        auto full = simulate_full_locus_tree(sp, {0.0, 0.0}, rng);
        validate_locus_tree(full, sp, false);
        auto obs = prune_losses(full);
        validate_locus_tree(obs, sp, true);
        CHECK(obs.extant_leaves().size() == 4);
        auto c = census(obs, sp, sp.root());
        CHECK(c.lineages_at_vertex == 1);
        for (const auto& name : sp.species()) CHECK(c.per_species.at(name) == 1);
        // structure mirrors the species tree exactly
        CHECK(obs.nodes.size() == sp.nodes().size());
        for (const auto& nd : obs.nodes) CHECK(!nd.daughter);
    }
}

TEST_CASE("mean copy count matches the branching-process expectation") {
    // single copy evolving down a length-1 pendant edge
    auto sp = SpeciesTree::from_newick("(A:1,B:1);");
    const double lambda = 0.3, mu = 0.1;
    const long reps = 30000;
    double sum = 0, sumsq = 0;
    for (long r = 0; r < reps; ++r) {
        RngStream rng = RngStream::derived(21, "bdmean", r);
        auto obs = prune_losses(simulate_full_locus_tree(sp, {lambda, mu}, rng));
        double c = obs.empty() ? 0 : census(obs, sp, sp.root()).per_species.at("A");
        sum += c;
        sumsq += c * c;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sumsq / reps - mean * mean) / reps);
    CHECK(std::abs(mean - std::exp(0.2)) <= 3 * se);
}

TEST_CASE("per-species extinction fraction matches (mu/lambda) q(t)") {
    auto sp = SpeciesTree::from_newick("(A:2,B:2);");
    const double lambda = 0.2, mu = 0.1;
    const long reps = 30000;
    long extinct = 0;
    for (long r = 0; r < reps; ++r) {
        RngStream rng = RngStream::derived(22, "bdext", r);
        auto obs = prune_losses(simulate_full_locus_tree(sp, {lambda, mu}, rng));
        if (obs.empty() || census(obs, sp, sp.root()).per_species.at("A") == 0)
            ++extinct;
    }
    const double p = static_cast<double>(extinct) / reps;
    const double oracle = extinction_prob(2.0, lambda, mu);
    const double se = std::sqrt(oracle * (1 - oracle) / reps);
    CHECK(oracle == doctest::Approx(0.15345).epsilon(1e-3));
    CHECK(std::abs(p - oracle) <= 3 * se);
}

TEST_CASE("pure loss can drive the family extinct") {
    auto sp = SpeciesTree::from_newick(kQuartet);
    long empty = 0;
    const long reps = 2000;
    for (long r = 0; r < reps; ++r) {
        RngStream rng = RngStream::derived(23, "pureloss", r);
        auto obs = prune_losses(simulate_full_locus_tree(sp, {0.0, 2.0}, rng));
        if (obs.empty()) ++empty;
        else validate_locus_tree(obs, sp, true);
    }
    CHECK(empty > reps / 2);
}

TEST_CASE("pruning removes losses and keeps duplication times") {
    auto sp = SpeciesTree::from_newick(kQuartet);
    RngStream rng(7);
    int saw_unary_dup = 0, saw_daughter = 0;
    for (int rep = 0; rep < 400; ++rep) {
        auto full = simulate_full_locus_tree(sp, {0.4, 0.3}, rng);
        validate_locus_tree(full, sp, false);
        auto obs = prune_losses(full);
        if (obs.empty()) continue;
        validate_locus_tree(obs, sp, true);
        for (const auto& nd : obs.nodes) {
            CHECK(nd.event != LocusEvent::Loss);
            if (nd.unary() && nd.event == LocusEvent::Duplication) ++saw_unary_dup;
            if (nd.daughter) ++saw_daughter;
            if (nd.parent >= 0) CHECK(obs.nodes[nd.parent].time > nd.time);
        }
        // copy indices are contiguous per species in traversal order
        auto leaves = obs.extant_leaves();
        std::map<std::string, int> next;
        for (int l : leaves) {
            const auto& name = obs.species_of(l, sp);
            CHECK(obs.nodes[l].copy == next[name]++);
        }
    }
    CHECK(saw_unary_dup > 0);   // a duplication whose other side died
    CHECK(saw_daughter > 0);
}

TEST_CASE("pruning is idempotent in structure") {
    auto sp = SpeciesTree::from_newick(kQuartet);
    RngStream rng(99);
    auto full = simulate_full_locus_tree(sp, {0.5, 0.2}, rng);
    auto once = prune_losses(full);
    auto twice = prune_losses(once);
    CHECK(once.nodes.size() == twice.nodes.size());
    CHECK(once.to_newick(sp) == twice.to_newick(sp));
}

TEST_CASE("census lineage counts at an internal vertex") {
    auto sp = SpeciesTree::from_newick("(((A:1,B:1):0.5,C:1.5):0.5,D:2);");
    // R = mrca(A,B,C)
    int R = sp.nodes()[sp.find_leaf("A")].parent;
    R = sp.nodes()[R].parent;
    RngStream rng(3);
    bool saw_multi = false;
    for (int rep = 0; rep < 3000; ++rep) {
        auto obs = prune_losses(simulate_full_locus_tree(sp, {0.3, 0.1}, rng));
        if (obs.empty()) continue;
        auto c = census(obs, sp, R);
        CHECK(c.lineages_at_vertex >= 0);
        if (c.lineages_at_vertex >= 2) saw_multi = true;
        int total = 0;
        for (auto& [name, k] : c.per_species) total += k;
        CHECK(total == static_cast<int>(obs.extant_leaves().size()));
    }
    CHECK(saw_multi);
    CHECK_THROWS_AS(census(prune_losses(simulate_full_locus_tree(sp, {0, 0}, rng)),
                           sp, 999),
                    DataError);
}

TEST_CASE("locus newick annotates events and daughters") {
    auto sp = SpeciesTree::from_newick(kQuartet);
    RngStream rng(12);
    std::string all;
    for (int rep = 0; rep < 50; ++rep) {
        auto obs = prune_losses(simulate_full_locus_tree(sp, {0.5, 0.1}, rng));
        if (obs.empty()) continue;
        auto s = obs.to_newick(sp);
        CHECK(s.find("[&event=") != std::string::npos);
        all += s;
    }
    CHECK(all.find("[&event=dup") != std::string::npos);
    CHECK(all.find("daughter=1") != std::string::npos);
}

TEST_CASE("all_at_least_one follows the census") {
    CopyCensus c;
    c.per_species = {{"A", 2}, {"B", 1}, {"C", 1}};
    CHECK(c.all_at_least_one({"A", "B"}));
    CHECK(!c.all_at_least_one({"A", "D"}));
}

TEST_CASE("simulation is deterministic given the seed") {
    auto sp = SpeciesTree::from_newick(kQuartet);
    auto run = [&] {
        RngStream rng = RngStream::derived(77, "det", 5);
        auto obs = prune_losses(simulate_full_locus_tree(sp, {0.3, 0.2}, rng));
        return obs.empty() ? std::string("-") : obs.to_newick(sp);
    };
    CHECK(run() == run());
}
