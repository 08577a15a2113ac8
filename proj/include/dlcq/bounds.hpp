#pragma once

#include <stdexcept>

namespace dlcq {

// Thrown when an evaluator is called with lambda == mu, which the bounds
// assume away.
class RatesEqualError : public std::invalid_argument {
public:
    RatesEqualError()
        : std::invalid_argument(
              "duplication and loss rates must differ (the bounds assume "
              "lambda != mu)") {}
};

struct BoundInputs {
    double f;       // minimum internal branch length
    double delta;   // species tree depth
    double lambda;  // duplication rate
    double mu;      // loss rate
    int n;          // species count
    double eps;     // failure probability in (0,1)
};

struct BoundOutputs {
    double gamma;
    double sigma_lb;
    double alpha_ub;
    double delta_prime_lb;
    double kstar_req;
    double k_req;          // max{2 k*/sigma, (8/sigma^2) log(n/eps)}
    double k_closed_form;  // 2304 alpha^6 / (sigma^7 gamma^2) * log(n/eps)
    bool degenerate = false;  // log(n/eps) <= 0, requirements clamped to 0
};

// Probability that a lineage pair coalesces within time f: 1 - e^{-f}.
double gamma_coalesce(double f);

// q(t) = lambda (1 - e^{-(lambda-mu) t}) / (lambda - mu e^{-(lambda-mu) t}),
// evaluated in expm1 form to stay stable near lambda == mu (which is still
// rejected).
double q_func(double t, double lambda, double mu);

// Extinction probability of a single copy by time t: (mu/lambda) q(t).
double extinction_prob(double t, double lambda, double mu);

// Lower bound on the minimum quartet survival probability sigma.
double sigma_lower_bound(double lambda, double mu, double delta);

// Upper bound on the maximum expected lineage count alpha.
double alpha_upper_bound(double lambda, double mu, double delta);

// delta' >= (2/3) min(gamma, 1/8) sigma^3 / alpha^3.
double delta_prime_lower_bound(double gamma, double sigma, double alpha);

// k* > 8 log(n/eps) / delta'^2; clamped to 0 when log(n/eps) <= 0.
double kstar_requirement(int n, double eps, double delta_prime);

// Assembles the full chain. Verifies internally that the max-form never
// exceeds the closed form.
BoundOutputs sample_size_bound(const BoundInputs& in);

}  // namespace dlcq
