#pragma once

// Test-only oracles and utilities. Everything here is deliberately
// independent of the library implementation paths it checks: brute-force
// normal equations in extended precision, adaptive quadrature, and full
// enumeration of rank assignments.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace testutil {

struct BruteAffine {
    double intercept = 0;
    double slope = 0;
};

// Weighted affine fit via Cramer's rule in long double.
inline BruteAffine brute_affine_fit(std::span<const double> x, std::span<const double> y,
                                    std::span<const double> w) {
    long double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const long double wi = w[i], xi = x[i], yi = y[i];
        sw += wi;
        swx += wi * xi;
        swy += wi * yi;
        swxx += wi * xi * xi;
        swxy += wi * xi * yi;
    }
    const long double det = sw * swxx - swx * swx;
    BruteAffine out;
    out.slope = static_cast<double>((sw * swxy - swx * swy) / det);
    out.intercept = static_cast<double>((swxx * swy - swx * swxy) / det);
    return out;
}

// Through-origin weighted coefficient (F^T W F)^{-1} F^T W R in long double.
inline double brute_origin_coefficient(std::span<const double> x, std::span<const double> y,
                                       std::span<const double> w) {
    long double num = 0, den = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += static_cast<long double>(x[i]) * w[i] * y[i];
        den += static_cast<long double>(x[i]) * w[i] * x[i];
    }
    return static_cast<double>(num / den);
}

// Adaptive Simpson quadrature.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                               int depth = 28) {
    const double c = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fc = f(c);
    std::function<double(double, double, double, double, double, double, double, int)> rec =
        [&](double a1, double b1, double fa1, double fb1, double fc1, double whole, double tol1,
            int depth1) -> double {
        const double c1 = 0.5 * (a1 + b1);
        const double d = 0.5 * (a1 + c1), e = 0.5 * (c1 + b1);
        const double fd = f(d), fe = f(e);
        const double left = (c1 - a1) / 6.0 * (fa1 + 4.0 * fd + fc1);
        const double right = (b1 - c1) / 6.0 * (fc1 + 4.0 * fe + fb1);
        if (depth1 <= 0 || std::abs(left + right - whole) <= 15.0 * tol1) {
            return left + right + (left + right - whole) / 15.0;
        }
        return rec(a1, c1, fa1, fc1, fd, left, 0.5 * tol1, depth1 - 1) +
               rec(c1, b1, fc1, fb1, fe, right, 0.5 * tol1, depth1 - 1);
    };
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    return rec(a, b, fa, fb, fc, whole, tol, depth);
}

// Two-sided Mann-Whitney p by full enumeration of all rank subsets
// (tie-free data only).
inline double mww_enumeration_p(std::span<const double> a, std::span<const double> b) {
    const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
    long w_obs = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (idx[r] < n1) w_obs += static_cast<long>(r + 1);
    }
    const long u_obs = w_obs - static_cast<long>(n1 * (n1 + 1) / 2);

    // iterate all n1-subsets of {1..n} via a selection mask
    std::vector<int> mask(n, 0);
    std::fill(mask.begin(), mask.begin() + static_cast<long>(n1), 1);
    std::sort(mask.begin(), mask.end());
    long total = 0, le = 0, ge = 0;
    do {
        long w = 0;
        for (std::size_t r = 0; r < n; ++r) {
            if (mask[r]) w += static_cast<long>(r + 1);
        }
        const long u = w - static_cast<long>(n1 * (n1 + 1) / 2);
        ++total;
        if (u <= u_obs) ++le;
        if (u >= u_obs) ++ge;
    } while (std::next_permutation(mask.begin(), mask.end()));
    const double p = 2.0 * std::min(static_cast<double>(le) / static_cast<double>(total),
                                    static_cast<double>(ge) / static_cast<double>(total));
    return std::min(1.0, p);
}

// Normal approximation with tie correction and continuity correction,
// written out independently of the library.
inline double mww_normal_p(std::span<const double> a, std::span<const double> b) {
    const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
    double w_sum = 0, tie_term = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && pooled[idx[j]] == pooled[idx[i]]) ++j;
        const double rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k) {
            if (idx[k] < n1) w_sum += rank;
        }
        const double t = static_cast<double>(j - i);
        if (t > 1) tie_term += t * t * t - t;
        i = j;
    }
    const double u = w_sum - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
    const double n1d = static_cast<double>(n1), n2d = static_cast<double>(n2), nd = static_cast<double>(n);
    const double mean = 0.5 * n1d * n2d;
    const double var = n1d * n2d / 12.0 * ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
    const double z = std::max(0.0, std::abs(u - mean) - 0.5) / std::sqrt(var);
    return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

// Jittered stratified sample from a quantile function: one draw per
// equal-probability stratum, shuffled. Empirical-CDF error is O(1/n) instead
// of O(1/sqrt(n)), which keeps null rank tests pinned at their expectation
// while every run still sees fresh data.
inline std::vector<double> stratified_quantile_sample(const std::function<double(double)>& quantile,
                                                      std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(1e-9, 1.0 - 1e-9);
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = (static_cast<double>(i) + jitter(rng)) / static_cast<double>(n);
        xs[i] = quantile(u);
    }
    std::shuffle(xs.begin(), xs.end(), rng);
    return xs;
}

// Scratch directory that cleans up after itself.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("lca_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

}  // namespace testutil
