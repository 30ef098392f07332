#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>

namespace lca::stats {

// Generalized extreme value parameters (shape xi, location mu, scale sigma).
// Support is {x : 1 + xi*(x-mu)/sigma > 0}; all reals when xi == 0. The
// Gumbel branch is taken for |xi| < kGumbelEps so the xi -> 0 limit is
// continuous.
struct GevParams {
    double shape = 0;  // xi
    double loc = 0;    // mu
    double scale = 1;  // sigma, > 0
};

inline constexpr double kGumbelEps = 1e-12;

double gev_pdf(double x, const GevParams& p);
double gev_cdf(double x, const GevParams& p);
double gev_quantile(double prob, const GevParams& p);

double gev_loglik(std::span<const double> xs, const GevParams& p);

// Probability-weighted-moments estimate; used to start the MLE search and
// exposed for tests.
GevParams gev_fit_pwm(std::span<const double> xs);

// Maximum-likelihood fit: Nelder-Mead simplex from the PWM start, off-support
// parameter points rejected by penalty. Throws on fewer than min_samples or
// zero-variance input.
GevParams gev_fit_mle(std::span<const double> xs, std::size_t min_samples = 20);

enum class MwwMethod { exact, normal_approx };

struct MwwResult {
    double u = 0;           // rank-sum statistic for the first sample, from midranks
    double p_two_sided = 1;
    MwwMethod method = MwwMethod::normal_approx;
    std::size_t n1 = 0, n2 = 0;
};

// Mann-Whitney-Wilcoxon rank-sum test, two-sided. Exact distribution (by
// dynamic-programming count) when n1 + n2 <= 40 and the pooled data is
// tie-free; otherwise normal approximation with tie-corrected variance and
// continuity correction.
MwwResult mww_test(std::span<const double> a, std::span<const double> b);

// sup |F_empirical - cdf| over the sample points, both one-sided parts.
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);

// Sample quantile critical value for the KS statistic at alpha = 0.01.
inline double ks_critical_01(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

}  // namespace lca::stats
