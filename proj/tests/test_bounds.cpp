#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dlcq/bounds.hpp"

using namespace dlcq;

// Reference values were computed independently with 30-digit arbitrary
// precision arithmetic and frozen here.
namespace {
constexpr double kRel = 1e-12;
}

TEST_CASE("gamma_coalesce matches the frozen reference") {
    CHECK(gamma_coalesce(0.5) ==
          doctest::Approx(0.393469340287366576).epsilon(kRel));
    CHECK_THROWS_AS(gamma_coalesce(0.0), std::invalid_argument);
    // Small-argument accuracy: 1 - e^{-x} ~ x for tiny x.
    CHECK(gamma_coalesce(1e-14) == doctest::Approx(1e-14).epsilon(1e-6));
    CHECK(gamma_coalesce(50.0) == doctest::Approx(1.0).epsilon(kRel));
}

TEST_CASE("q_func and extinction_prob match the frozen references") {
    CHECK(q_func(2.0, 0.2, 0.1) ==
          doctest::Approx(0.306905893629828302).epsilon(kRel));
    CHECK(extinction_prob(2.0, 0.2, 0.1) ==
          doctest::Approx(0.153452946814914151).epsilon(kRel));
    CHECK(q_func(0.0, 0.2, 0.1) == doctest::Approx(0.0));
    // Pure-loss limit: extinction approaches 1 - e^{-mu t} as lambda -> 0.
    CHECK(extinction_prob(2.0, 1e-9, 0.3) ==
          doctest::Approx(1.0 - std::exp(-0.6)).epsilon(1e-6));
    CHECK_THROWS_AS(extinction_prob(2.0, 0.0, 0.3), std::invalid_argument);
}

TEST_CASE("q_func is increasing in t and rejects equal rates") {
    double prev = -1;
    for (double t = 0.1; t <= 5.0; t += 0.1) {
        double q = q_func(t, 0.25, 0.15);
        CHECK(q > prev);
        CHECK(q >= 0.0);
        CHECK(q <= 1.0);
        prev = q;
    }
    prev = -1;
    for (double t = 0.1; t <= 5.0; t += 0.1) {
        double q = q_func(t, 0.1, 0.4);  // subcritical regime
        CHECK(q > prev);
        prev = q;
    }
    CHECK_THROWS_AS(q_func(1.0, 0.2, 0.2), RatesEqualError);
    CHECK_THROWS_AS(sigma_lower_bound(0.2, 0.2, 1.0), RatesEqualError);
    // alpha's formula is continuous through lambda == mu.
    CHECK(alpha_upper_bound(0.2, 0.2, 1.0) == doctest::Approx(1.0));
    BoundInputs in{0.5, 1.5, 0.2, 0.2, 5, 0.05};
    CHECK_THROWS_AS(sample_size_bound(in), RatesEqualError);
}

TEST_CASE("sigma lower bound covers both rate regimes") {
    // Subcritical (mu > lambda): [e^{-(mu-lambda) delta} (1 - lambda/mu)]^4.
    CHECK(sigma_lower_bound(0.1, 0.3, 1.0) ==
          doctest::Approx(0.0887563385910561168).epsilon(kRel));
    // Supercritical (lambda > mu): (1 - mu/lambda)^4, depth-independent.
    CHECK(sigma_lower_bound(0.2, 0.1, 1.0) ==
          doctest::Approx(0.0625).epsilon(kRel));
    CHECK(sigma_lower_bound(0.2, 0.1, 7.0) ==
          doctest::Approx(0.0625).epsilon(kRel));
    // No losses: every copy survives.
    CHECK(sigma_lower_bound(0.2, 0.0, 3.0) == doctest::Approx(1.0));
}

TEST_CASE("alpha upper bound matches the frozen reference") {
    CHECK(alpha_upper_bound(0.3, 0.1, 2.0) ==
          doctest::Approx(1.49182469764127032).epsilon(kRel));
    // Subcritical mean shrinks, so the bound clamps at 1.
    CHECK(alpha_upper_bound(0.1, 0.3, 2.0) == doctest::Approx(1.0));
}

TEST_CASE("delta_prime lower bound matches the frozen reference") {
    CHECK(delta_prime_lower_bound(0.2, 0.0625, 1.5) ==
          doctest::Approx(6.02816358024691358e-6).epsilon(kRel));
    // The gamma term saturates at 1/8.
    CHECK(delta_prime_lower_bound(0.9, 1.0, 1.0) ==
          doctest::Approx(2.0 / 3.0 * 0.125).epsilon(kRel));
}

TEST_CASE("full chain matches the frozen composed reference") {
    BoundInputs in{0.5, 1.5, 0.2, 0.1, 5, 0.05};
    auto out = sample_size_bound(in);
    CHECK_FALSE(out.degenerate);
    CHECK(out.gamma == doctest::Approx(0.393469340287366576).epsilon(kRel));
    CHECK(out.sigma_lb == doctest::Approx(0.0625).epsilon(kRel));
    CHECK(out.alpha_ub == doctest::Approx(1.16183424272828312).epsilon(kRel));
    CHECK(out.delta_prime_lb ==
          doctest::Approx(1.29725779545445413e-5).epsilon(kRel));
    CHECK(out.kstar_req == doctest::Approx(218918817239.797579).epsilon(kRel));
    CHECK(out.k_req == doctest::Approx(7005402151673.52252).epsilon(kRel));
    CHECK(out.k_closed_form ==
          doctest::Approx(45249238736786.1824).epsilon(kRel));
}

TEST_CASE("degenerate log clamps the requirements to zero") {
    // eps >= n makes log(n/eps) <= 0: no samples needed at that confidence.
    BoundInputs in{0.5, 1.5, 0.2, 0.1, 5, 0.99};
    in.eps = 5.0;  // log(1) = 0 boundary; anything >= n degenerates
    auto out = sample_size_bound(in);
    CHECK(out.degenerate);
    CHECK(out.kstar_req == doctest::Approx(0.0));
    CHECK(out.k_req == doctest::Approx(0.0));
    CHECK(out.k_closed_form == doctest::Approx(0.0));
    CHECK_THROWS_AS(kstar_requirement(5, 5.0, 0.01), std::invalid_argument);
    CHECK_THROWS_AS(kstar_requirement(3, 0.05, 0.01), std::invalid_argument);
}

TEST_CASE("max-form requirement never exceeds the closed form") {
    for (double lam : {0.05, 0.15, 0.3}) {
        for (double mu : {0.07, 0.18, 0.33}) {
            for (double f : {0.1, 0.5, 1.0}) {
                for (double delta : {1.0, 2.5}) {
                    BoundInputs in{f, delta, lam, mu, 6, 0.05};
                    auto out = sample_size_bound(in);
                    CHECK(out.k_req <= out.k_closed_form * (1 + 1e-12));
                    CHECK(out.k_req >= out.kstar_req);
                    CHECK(out.sigma_lb > 0.0);
                    CHECK(out.sigma_lb <= 1.0);
                    CHECK(out.alpha_ub >= 1.0);
                }
            }
        }
    }
}
