#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "dlcq/quartets.hpp"
#include "dlcq/rng.hpp"
#include "dlcq/trees.hpp"

using namespace dlcq;

namespace {
const std::array<std::string, 4> kQ = {"A", "B", "C", "D"};
}

TEST_CASE("tally_multi enumerates every one-copy-per-species tuple") {
    // Two copies each of A and B, matched as (A_0,B_0) and (A_1,B_1) cherries;
    // all four tuples resolve to AB|CD.
    GeneTree g = GeneTree::from_newick(
        "(((A_0:1,B_0:1):1,(A_1:1,B_1:1):1):1,(C_0:1,D_0:1):2);");
    auto t = tally_multi({g}, kQ);
    CHECK(t.n1 == doctest::Approx(4.0));
    CHECK(t.n2 == doctest::Approx(0.0));
    CHECK(t.n3 == doctest::Approx(0.0));
    CHECK(t.usable == 1);
    CHECK(t.skipped == 0);
    CHECK_FALSE(t.sampled);
}

TEST_CASE("tally_multi mixes topologies across tuples") {
    // (A_0,B_0) cherry gives AB|CD; A_1 groups with C_0 giving AC|BD when
    // paired with B_0... enumerate by hand: tuples are (A_0,B_0) and (A_1,B_0).
    GeneTree g = GeneTree::from_newick(
        "(((A_0:1,B_0:1):1,(A_1:1,C_0:1):1):1,D_0:3);");
    auto t = tally_multi({g}, kQ);
    // (A_0,B_0,C_0,D_0): AB cherry -> AB|CD. (A_1,B_0,C_0,D_0): AC cherry -> AC|BD.
    CHECK(t.n1 == doctest::Approx(1.0));
    CHECK(t.n2 == doctest::Approx(1.0));
    CHECK(t.n3 == doctest::Approx(0.0));
}

TEST_CASE("single-copy gene trees tally identically in both modes") {
    std::vector<GeneTree> genes;
    RngStream sim(7);
    for (int r = 0; r < 40; ++r) {
        // Random binary topologies over one copy per species.
        const char* shapes[3] = {
            "((A_0:1,B_0:1):1,(C_0:1,D_0:1):1);",
            "((A_0:1,C_0:1):1,(B_0:1,D_0:1):1);",
            "((A_0:1,D_0:1):1,(B_0:1,C_0:1):1);",
        };
        genes.push_back(GeneTree::from_newick(shapes[sim.below(3)]));
    }
    RngStream rng(11);
    auto one = tally_one(genes, kQ, rng);
    auto multi = tally_multi(genes, kQ);
    CHECK(one.n1 == doctest::Approx(multi.n1));
    CHECK(one.n2 == doctest::Approx(multi.n2));
    CHECK(one.n3 == doctest::Approx(multi.n3));
    CHECK(one.usable == multi.usable);
    CHECK(one.usable == 40);
    CHECK(one.n1 + one.n2 + one.n3 == doctest::Approx(40.0));
}

TEST_CASE("gene trees missing a quartet species are skipped, not used") {
    GeneTree full = GeneTree::from_newick("((A_0:1,B_0:1):1,(C_0:1,D_0:1):1);");
    GeneTree noD = GeneTree::from_newick("((A_0:1,B_0:1):1,C_0:2);");
    RngStream rng(3);
    auto one = tally_one({full, noD, noD}, kQ, rng);
    CHECK(one.usable == 1);
    CHECK(one.skipped == 2);
    CHECK(one.n1 == doctest::Approx(1.0));
    auto multi = tally_multi({full, noD}, kQ);
    CHECK(multi.usable == 1);
    CHECK(multi.skipped == 1);
}

TEST_CASE("dominant reports the argmax with a margin") {
    QuartetTally t;
    t.species = kQ;
    t.n1 = 60;
    t.n2 = 25;
    t.n3 = 15;
    t.usable = 100;
    auto d = dominant(t);
    CHECK(d.topology == QuartetTopology::AB_CD);
    CHECK(d.tied.empty());
    CHECK(d.margin == doctest::Approx(0.35));
    CHECK(d.ci_halfwidth > 0);
}

TEST_CASE("dominant surfaces ties as Unresolved plus the tied set") {
    QuartetTally t;
    t.species = kQ;
    t.n1 = 40;
    t.n2 = 40;
    t.n3 = 20;
    t.usable = 100;
    auto d = dominant(t);
    CHECK(d.topology == QuartetTopology::Unresolved);
    REQUIRE(d.tied.size() == 2);
    std::set<QuartetTopology> tied(d.tied.begin(), d.tied.end());
    CHECK(tied.count(QuartetTopology::AB_CD) == 1);
    CHECK(tied.count(QuartetTopology::AC_BD) == 1);
    CHECK(d.margin == doctest::Approx(0.0));
}

TEST_CASE("dominant with zero usable gene trees is a data error") {
    QuartetTally t;
    t.species = kQ;
    CHECK_THROWS_AS(dominant(t), DataError);
}

TEST_CASE("tuple_cap forces unbiased subsampling with rescaled counts") {
    // 3 copies of A and of B: 9 tuples total; cap at 2 forces subsampling.
    GeneTree g = GeneTree::from_newick(
        "((((A_0:1,B_0:1):1,(A_1:1,B_1:1):1):1,(A_2:1,B_2:1):2):1,"
        "(C_0:1,D_0:1):3);");
    {
        auto exact = tally_multi({g}, kQ);
        CHECK_FALSE(exact.sampled);
        CHECK(exact.n1 + exact.n2 + exact.n3 == doctest::Approx(9.0));
    }
    RngStream rng(5);
    auto sub = tally_multi({g}, kQ, 2, &rng);
    CHECK(sub.sampled);
    // Scaled back to the full tuple count.
    CHECK(sub.n1 + sub.n2 + sub.n3 == doctest::Approx(9.0));
    CHECK(sub.usable == 1);
    // Subsampling without an rng is a data error.
    CHECK_THROWS_AS(tally_multi({g}, kQ, 2, nullptr), DataError);
}

TEST_CASE("tuple_topology honours the role order, not the label order") {
    GeneTree g = GeneTree::from_newick("((A_0:1,B_0:1):1,(C_0:1,D_0:1):1);");
    int a = g.find_leaf("A", 0), b = g.find_leaf("B", 0);
    int c = g.find_leaf("C", 0), d = g.find_leaf("D", 0);
    CHECK(tuple_topology(g, a, b, c, d) == QuartetTopology::AB_CD);
    // Swap roles: the pair (a,c) now holds roles A,B -> AD|BC for (a,c,b,d)?
    // Roles (A=a, B=c, C=b, D=d): cherries are {a,b}={A,C} -> AC|BD.
    CHECK(tuple_topology(g, a, c, b, d) == QuartetTopology::AC_BD);
    CHECK(tuple_topology(g, a, c, d, b) == QuartetTopology::AD_BC);
}

TEST_CASE("select_one_copy_per_species picks uniformly and marks absences") {
    GeneTree g = GeneTree::from_newick(
        "(((A_0:1,A_1:1):1,B_0:2):1,C_0:3);");
    std::vector<std::string> species = {"A", "B", "C", "D"};
    std::sort(species.begin(), species.end());
    int saw0 = 0, saw1 = 0;
    for (int r = 0; r < 2000; ++r) {
        RngStream rng = RngStream::derived(17, "sel", r);
        auto sel = select_one_copy_per_species({g}, species, rng);
        REQUIRE(sel.size() == 1);
        REQUIRE(sel[0].size() == 4);
        // Species sorted: A,B,C,D -> D absent.
        CHECK(sel[0][3] == -1);
        CHECK(sel[0][1] == g.find_leaf("B", 0));
        int a = sel[0][0];
        if (a == g.find_leaf("A", 0)) ++saw0;
        if (a == g.find_leaf("A", 1)) ++saw1;
    }
    CHECK(saw0 + saw1 == 2000);
    // Both copies drawn with roughly equal frequency (5 sigma band).
    CHECK(std::abs(saw0 - 1000) < 5 * 23);
}
