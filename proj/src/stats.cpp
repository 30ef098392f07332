#include "lca/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "lca/error.hpp"

namespace lca::stats {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_params(const GevParams& p) {
    if (!(p.scale > 0) || !std::isfinite(p.scale) || !std::isfinite(p.shape) || !std::isfinite(p.loc)) {
        throw Error(Error::Kind::data, "invalid GEV parameters (scale must be positive and finite)");
    }
}

}  // namespace

double gev_pdf(double x, const GevParams& p) {
    check_params(p);
    const double z = (x - p.loc) / p.scale;
    if (std::abs(p.shape) < kGumbelEps) {
        const double t = std::exp(-z);
        return t * std::exp(-t) / p.scale;
    }
    const double q = p.shape * z;
    if (!(q > -1.0)) return 0.0;
    // t = (1 + xi z)^(-1/xi); f = t^(xi+1) * exp(-t) / sigma. log1p keeps the
    // small-shape limit accurate.
    const double log_t = -std::log1p(q) / p.shape;
    const double t = std::exp(log_t);
    return std::exp((p.shape + 1.0) * log_t - t) / p.scale;
}

double gev_cdf(double x, const GevParams& p) {
    check_params(p);
    const double z = (x - p.loc) / p.scale;
    if (std::abs(p.shape) < kGumbelEps) {
        return std::exp(-std::exp(-z));
    }
    const double q = p.shape * z;
    if (!(q > -1.0)) return p.shape > 0 ? 0.0 : 1.0;  // below support for xi>0, above for xi<0
    return std::exp(-std::exp(-std::log1p(q) / p.shape));
}

double gev_quantile(double prob, const GevParams& p) {
    check_params(p);
    if (!(prob > 0 && prob < 1)) {
        throw Error(Error::Kind::data, "gev_quantile: probability must lie in (0,1)");
    }
    const double w = -std::log(prob);  // t at the quantile
    if (std::abs(p.shape) < kGumbelEps) {
        return p.loc - p.scale * std::log(w);
    }
    return p.loc + p.scale * std::expm1(-p.shape * std::log(w)) / p.shape;
}

double gev_loglik(std::span<const double> xs, const GevParams& p) {
    if (!(p.scale > 0)) return -kInf;
    const double n = static_cast<double>(xs.size());
    if (std::abs(p.shape) < kGumbelEps) {
        double acc = 0;
        for (double x : xs) {
            const double z = (x - p.loc) / p.scale;
            acc += -z - std::exp(-z);
        }
        return acc - n * std::log(p.scale);
    }
    const double inv_shape = 1.0 / p.shape;
    double sum_log_u = 0, sum_t = 0;
    for (double x : xs) {
        const double q = p.shape * (x - p.loc) / p.scale;
        if (!(q > -1.0)) return -kInf;
        const double lu = std::log1p(q);
        sum_log_u += lu;
        sum_t += std::exp(-inv_shape * lu);
    }
    return -n * std::log(p.scale) - (1.0 + inv_shape) * sum_log_u - sum_t;
}

GevParams gev_fit_pwm(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n < 3) {
        throw Error(Error::Kind::data, "gev_fit_pwm: need at least 3 samples");
    }
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());

    double b0 = 0, b1 = 0, b2 = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double x = sorted[j];
        const double jj = static_cast<double>(j);  // 0-based; (j)/(n-1) etc. are the PWM plotting weights
        b0 += x;
        b1 += x * jj / static_cast<double>(n - 1);
        b2 += x * jj * (jj - 1.0) / (static_cast<double>(n - 1) * static_cast<double>(n - 2));
    }
    b0 /= static_cast<double>(n);
    b1 /= static_cast<double>(n);
    b2 /= static_cast<double>(n);

    const double log2 = std::log(2.0), log3 = std::log(3.0);
    const double denom = 3.0 * b2 - b0;
    GevParams out;
    if (std::abs(denom) < 1e-300 || std::abs(2.0 * b1 - b0) < 1e-300) {
        out = GevParams{0.0, b0, 1.0};
        return out;
    }
    const double c = (2.0 * b1 - b0) / denom - log2 / log3;
    const double k = 7.8590 * c + 2.9554 * c * c;  // Hosking's shape (k = -xi)
    if (std::abs(k) < 1e-8) {
        out.shape = 0.0;
        out.scale = (2.0 * b1 - b0) / log2;
        out.loc = b0 - 0.57721566490153286 * out.scale;
    } else {
        const double g = std::tgamma(1.0 + k);
        out.scale = (2.0 * b1 - b0) * k / (g * (1.0 - std::pow(2.0, -k)));
        out.loc = b0 + out.scale * (g - 1.0) / k;
        out.shape = -k;
    }
    if (!(out.scale > 0) || !std::isfinite(out.scale)) out.scale = 1.0;
    if (!std::isfinite(out.loc)) out.loc = b0;
    if (!std::isfinite(out.shape)) out.shape = 0.0;
    return out;
}

namespace {

// Nelder-Mead on (shape, loc, log scale). Minimizes f; stops when the simplex
// diameter falls below 1e-8 relative to the centroid scale.
template <typename F>
std::array<double, 3> nelder_mead(const F& f, std::array<double, 3> start, int max_iter) {
    constexpr int dim = 3;
    struct Vertex {
        std::array<double, 3> x;
        double fx;
    };
    std::array<Vertex, dim + 1> simplex;
    simplex[0] = {start, f(start)};
    for (int i = 0; i < dim; ++i) {
        std::array<double, 3> x = start;
        const double step = std::abs(x[i]) > 1e-3 ? 0.05 * std::abs(x[i]) : 0.02;
        x[i] += step;
        simplex[i + 1] = {x, f(x)};
    }

    auto order = [&] {
        std::sort(simplex.begin(), simplex.end(), [](const Vertex& a, const Vertex& b) { return a.fx < b.fx; });
    };
    order();

    for (int iter = 0; iter < max_iter; ++iter) {
        // convergence: max vertex distance relative to parameter scale
        double diam = 0, scale = 1e-12;
        for (int i = 0; i < dim; ++i) {
            scale = std::max(scale, std::abs(simplex[0].x[i]));
            for (int j = 1; j <= dim; ++j) diam = std::max(diam, std::abs(simplex[j].x[i] - simplex[0].x[i]));
        }
        if (diam / std::max(1.0, scale) < 1e-8) break;

        std::array<double, 3> centroid{};
        for (int j = 0; j < dim; ++j) {
            for (int i = 0; i < dim; ++i) centroid[i] += simplex[j].x[i] / dim;
        }
        const Vertex& worst = simplex[dim];
        auto blend = [&](double coef) {
            std::array<double, 3> x;
            for (int i = 0; i < dim; ++i) x[i] = centroid[i] + coef * (worst.x[i] - centroid[i]);
            return x;
        };

        std::array<double, 3> xr = blend(-1.0);
        const double fr = f(xr);
        if (fr < simplex[0].fx) {
            std::array<double, 3> xe = blend(-2.0);
            const double fe = f(xe);
            simplex[dim] = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
        } else if (fr < simplex[dim - 1].fx) {
            simplex[dim] = {xr, fr};
        } else {
            const bool outside = fr < worst.fx;
            std::array<double, 3> xc = blend(outside ? -0.5 : 0.5);
            const double fc = f(xc);
            if (fc < std::min(fr, worst.fx)) {
                simplex[dim] = {xc, fc};
            } else {
                for (int j = 1; j <= dim; ++j) {
                    for (int i = 0; i < dim; ++i) simplex[j].x[i] = simplex[0].x[i] + 0.5 * (simplex[j].x[i] - simplex[0].x[i]);
                    simplex[j].fx = f(simplex[j].x);
                }
            }
        }
        order();
    }
    return simplex[0].x;
}

}  // namespace

GevParams gev_fit_mle(std::span<const double> xs, std::size_t min_samples) {
    if (xs.size() < min_samples || xs.size() < 3) {
        throw Error(Error::Kind::data,
                    "gev_fit_mle: need at least " + std::to_string(min_samples) + " samples, got " + std::to_string(xs.size()));
    }
    const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
    if (!(*mx > *mn)) {
        throw Error(Error::Kind::data, "gev_fit_mle: degenerate sample (zero variance)");
    }

    GevParams start = gev_fit_pwm(xs);
    // Make sure the start is feasible: shrink the shape toward Gumbel until
    // every sample is inside the support.
    for (int tries = 0; tries < 60 && !std::isfinite(gev_loglik(xs, start)); ++tries) {
        start.shape *= 0.5;
        start.scale *= 1.25;
        if (std::abs(start.shape) < 1e-4) start.shape = 0.0;
    }
    if (!std::isfinite(gev_loglik(xs, start))) {
        start = GevParams{0.0, *mn + 0.5 * (*mx - *mn), std::max(1e-6, 0.25 * (*mx - *mn))};
    }

    auto objective = [&](const std::array<double, 3>& v) {
        const GevParams p{v[0], v[1], std::exp(v[2])};
        const double ll = gev_loglik(xs, p);
        return std::isfinite(ll) ? -ll : 1e100;
    };

    std::array<double, 3> v{start.shape, start.loc, std::log(start.scale)};
    v = nelder_mead(objective, v, 400);
    v = nelder_mead(objective, v, 400);  // restart with a fresh simplex around the optimum

    GevParams fit{v[0], v[1], std::exp(v[2])};
    if (gev_loglik(xs, fit) < gev_loglik(xs, start)) fit = start;
    return fit;
}

namespace {

// Midranks of the pooled sample; returns the rank sum of the first n1 entries
// and the tie correction term sum(t^3 - t).
struct RankSummary {
    double rank_sum_a = 0;
    double tie_term = 0;
    bool has_ties = false;
};

RankSummary midranks(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size() + b.size();
    std::vector<std::pair<double, int>> pooled;  // value, group (0 = a)
    pooled.reserve(n);
    for (double x : a) pooled.emplace_back(x, 0);
    for (double x : b) pooled.emplace_back(x, 1);
    std::sort(pooled.begin(), pooled.end(), [](const auto& p, const auto& q) { return p.first < q.first; });

    RankSummary out;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && pooled[j].first == pooled[i].first) ++j;
        const double tie = static_cast<double>(j - i);
        const double rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));  // midrank
        for (std::size_t k = i; k < j; ++k) {
            if (pooled[k].second == 0) out.rank_sum_a += rank;
        }
        if (tie > 1) {
            out.has_ties = true;
            out.tie_term += tie * tie * tie - tie;
        }
        i = j;
    }
    return out;
}

// Exact null distribution of the rank sum of a size-n1 subset of ranks
// 1..N, counted by dynamic programming. Counts fit a double exactly for
// N <= 40 (max count C(40,20) < 2^53).
std::vector<double> rank_sum_counts(std::size_t n1, std::size_t n) {
    const std::size_t max_sum = n1 * (2 * n - n1 + 1) / 2;
    std::vector<std::vector<double>> dp(n1 + 1, std::vector<double>(max_sum + 1, 0.0));
    dp[0][0] = 1.0;
    for (std::size_t r = 1; r <= n; ++r) {
        for (std::size_t k = std::min(n1, r); k >= 1; --k) {
            auto& row = dp[k];
            const auto& prev = dp[k - 1];
            for (std::size_t s = max_sum; s >= r; --s) {
                if (prev[s - r] != 0.0) row[s] += prev[s - r];
            }
            if (k == 1) break;
        }
    }
    return dp[n1];
}

double normal_sf(double z) {
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace

MwwResult mww_test(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) {
        throw Error(Error::Kind::data, "mww_test: both samples must be non-empty");
    }
    const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;
    const RankSummary ranks = midranks(a, b);
    const double u = ranks.rank_sum_a - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);

    MwwResult res;
    res.u = u;
    res.n1 = n1;
    res.n2 = n2;

    if (!ranks.has_ties && n <= 40) {
        res.method = MwwMethod::exact;
        const std::vector<double> counts = rank_sum_counts(n1, n);
        const double min_rank_sum = 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
        double total = 0;
        for (double c : counts) total += c;
        // tie-free: the rank sum is an integer
        const long w_obs = std::lround(ranks.rank_sum_a);
        double le = 0, ge = 0;
        for (std::size_t s = 0; s < counts.size(); ++s) {
            if (counts[s] == 0.0) continue;
            if (static_cast<long>(s) <= w_obs) le += counts[s];
            if (static_cast<long>(s) >= w_obs) ge += counts[s];
        }
        (void)min_rank_sum;
        res.p_two_sided = std::min(1.0, 2.0 * std::min(le / total, ge / total));
        return res;
    }

    res.method = MwwMethod::normal_approx;
    const double n1d = static_cast<double>(n1), n2d = static_cast<double>(n2), nd = static_cast<double>(n);
    const double mean_u = 0.5 * n1d * n2d;
    const double var_u = n1d * n2d / 12.0 * ((nd + 1.0) - ranks.tie_term / (nd * (nd - 1.0)));
    if (!(var_u > 0)) {
        res.p_two_sided = 1.0;  // everything tied
        return res;
    }
    const double z = std::max(0.0, std::abs(u - mean_u) - 0.5) / std::sqrt(var_u);
    res.p_two_sided = std::min(1.0, 2.0 * normal_sf(z));
    return res;
}

double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) {
        throw Error(Error::Kind::data, "ks_statistic: empty sample");
    }
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max(d, (static_cast<double>(i) + 1.0) / n - f);
        d = std::max(d, f - static_cast<double>(i) / n);
    }
    return d;
}

}  // namespace lca::stats
