#include "dlcq/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dlcq {

double gamma_coalesce(double f) {
    if (!(f > 0.0)) throw std::invalid_argument("gamma requires f > 0");
    return -std::expm1(-f);
}

double q_func(double t, double lambda, double mu) {
    if (lambda == mu) throw RatesEqualError();
    if (t < 0.0) throw std::invalid_argument("q_func requires t >= 0");
    const double r = lambda - mu;
    const double em1 = std::expm1(-r * t);  // e^{-(l-u)t} - 1
    // numerator: lambda (1 - e^{-rt}) = -lambda em1
    // denominator: lambda - mu e^{-rt} = (lambda - mu) - mu em1
    return -lambda * em1 / (r - mu * em1);
}

double extinction_prob(double t, double lambda, double mu) {
    if (lambda <= 0.0)
        throw std::invalid_argument("extinction_prob requires lambda > 0");
    return mu / lambda * q_func(t, lambda, mu);
}

double sigma_lower_bound(double lambda, double mu, double delta) {
    if (lambda == mu) throw RatesEqualError();
    if (!(delta > 0.0)) throw std::invalid_argument("sigma bound requires delta > 0");
    double base;
    if (mu > lambda)
        base = std::exp(-(mu - lambda) * delta) * (1.0 - lambda / mu);
    else
        base = 1.0 - mu / lambda;
    return base * base * base * base;
}

double alpha_upper_bound(double lambda, double mu, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("alpha bound requires delta > 0");
    return std::max(1.0, std::exp((lambda - mu) * delta));
}

double delta_prime_lower_bound(double gamma, double sigma, double alpha) {
    if (!(gamma > 0.0 && gamma < 1.0) || !(sigma > 0.0 && sigma <= 1.0) ||
        !(alpha >= 1.0))
        throw std::invalid_argument("delta' bound inputs out of range");
    const double s3 = sigma * sigma * sigma;
    const double a3 = alpha * alpha * alpha;
    return (2.0 / 3.0) * std::min(gamma, 0.125) * s3 / a3;
}

double kstar_requirement(int n, double eps, double delta_prime) {
    if (n < 4) throw std::invalid_argument("n must be at least 4");
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("eps must lie in (0,1)");
    const double lg = std::log(n / eps);
    if (lg <= 0.0) return 0.0;  // degenerate n/eps <= 1
    return 8.0 * lg / (delta_prime * delta_prime);
}

BoundOutputs sample_size_bound(const BoundInputs& in) {
    if (!(in.f > 0.0)) throw std::invalid_argument("f must be positive");
    if (!(in.delta >= in.f)) throw std::invalid_argument("delta must be >= f");
    if (in.lambda < 0.0 || in.mu < 0.0)
        throw std::invalid_argument("rates must be nonnegative");
    BoundOutputs out;
    out.gamma = gamma_coalesce(in.f);
    out.sigma_lb = sigma_lower_bound(in.lambda, in.mu, in.delta);
    out.alpha_ub = alpha_upper_bound(in.lambda, in.mu, in.delta);
    out.delta_prime_lb = delta_prime_lower_bound(out.gamma, out.sigma_lb, out.alpha_ub);
    const double lg = std::log(in.n / in.eps);
    if (lg <= 0.0) {
        out.degenerate = true;
        out.kstar_req = out.k_req = out.k_closed_form = 0.0;
        return out;
    }
    out.kstar_req = kstar_requirement(in.n, in.eps, out.delta_prime_lb);
    out.k_req = std::max(2.0 * out.kstar_req / out.sigma_lb,
                         8.0 / (out.sigma_lb * out.sigma_lb) * lg);
    const double a6 = std::pow(out.alpha_ub, 6);
    const double s7 = std::pow(out.sigma_lb, 7);
    out.k_closed_form = 2304.0 * a6 / (s7 * out.gamma * out.gamma) * lg;
    if (out.k_req > out.k_closed_form * (1.0 + 1e-12))
        throw std::logic_error("internal consistency: max-form exceeded closed form");
    return out;
}

}  // namespace dlcq
