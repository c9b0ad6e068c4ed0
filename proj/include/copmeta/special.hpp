#pragma once

// Scalar special functions shared by the copula, margin and likelihood code.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "copmeta/quadrature.hpp"

namespace copmeta {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Standard normal quantile; -inf / +inf at the endpoints.
inline double normal_quantile(double p) {
    if (p <= 0.0) return -kInf;
    if (p >= 1.0) return kInf;
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double inv_logit(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

/// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double log_gamma(double x) { return boost::math::lgamma(x); }

inline double log_beta(double a, double b) { return log_gamma(a) + log_gamma(b) - log_gamma(a + b); }

inline double log_choose(int n, int k) {
    return log_gamma(n + 1.0) - log_gamma(k + 1.0) - log_gamma(n - k + 1.0);
}

namespace detail {

struct HalfLegendre {
    std::vector<double> x;  // negative Legendre roots
    std::vector<double> w;
};

// 6-, 12- and 20-point rules (negative halves) used by the Drezner-Wesolowsky/Genz method.
inline const HalfLegendre& genz_rule(std::size_t which) {
    static const std::array<HalfLegendre, 3> table = [] {
        std::array<HalfLegendre, 3> out;
        const std::array<std::size_t, 3> sizes{6, 12, 20};
        for (std::size_t r = 0; r < 3; ++r) {
            std::vector<double> x;
            std::vector<double> w;
            legendre_roots(sizes[r], x, w);
            const auto half = static_cast<std::ptrdiff_t>(sizes[r] / 2);
            out[r].x.assign(x.begin(), x.begin() + half);
            out[r].w.assign(w.begin(), w.begin() + half);
        }
        return out;
    }();
    return table[which];
}

// P(X > h, Y > k) for a standard bivariate normal with correlation r (Genz, 2004).
inline double bvn_upper(double h, double k, double r) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const HalfLegendre& g = genz_rule(std::abs(r) < 0.3 ? 0 : (std::abs(r) < 0.75 ? 1 : 2));
    const std::size_t lg = g.x.size();
    double hk = h * k;
    double bvn = 0.0;
    if (std::abs(r) < 0.925) {
        const double hs = (h * h + k * k) / 2.0;
        const double asr = std::asin(r);
        for (std::size_t i = 0; i < lg; ++i) {
            double sn = std::sin(asr * (g.x[i] + 1.0) / 2.0);
            bvn += g.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
            sn = std::sin(asr * (-g.x[i] + 1.0) / 2.0);
            bvn += g.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
        return bvn * asr / (2.0 * two_pi) + normal_cdf(-h) * normal_cdf(-k);
    }
    if (r < 0.0) {
        k = -k;
        hk = -hk;
    }
    if (std::abs(r) < 1.0) {
        const double as = (1.0 - r) * (1.0 + r);
        double a = std::sqrt(as);
        const double bs = (h - k) * (h - k);
        const double c = (4.0 - hk) / 8.0;
        const double d = (12.0 - hk) / 16.0;
        bvn = a * std::exp(-(bs / as + hk) / 2.0) *
              (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
        if (hk > -160.0) {
            const double b = std::sqrt(bs);
            bvn -= std::exp(-hk / 2.0) * std::sqrt(two_pi) * normal_cdf(-b / a) * b *
                   (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (std::size_t i = 0; i < lg; ++i) {
            double xs = (a * (g.x[i] + 1.0)) * (a * (g.x[i] + 1.0));
            double rs = std::sqrt(1.0 - xs);
            bvn += a * g.w[i] *
                   (std::exp(-bs / (2.0 * xs) - hk / (1.0 + rs)) / rs -
                    std::exp(-(bs / xs + hk) / 2.0) * (1.0 + c * xs * (1.0 + d * xs)));
            xs = as * (-g.x[i] + 1.0) * (-g.x[i] + 1.0) / 4.0;
            rs = std::sqrt(1.0 - xs);
            bvn += a * g.w[i] * std::exp(-(bs / xs + hk) / 2.0) *
                   (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs - (1.0 + c * xs * (1.0 + d * xs)));
        }
        bvn = -bvn / two_pi;
    }
    if (r > 0.0) return bvn + normal_cdf(-std::max(h, k));
    bvn = -bvn;
    if (k > h) {
        bvn += h < 0.0 ? normal_cdf(k) - normal_cdf(h) : normal_cdf(-h) - normal_cdf(-k);
    }
    return bvn;
}

}  // namespace detail

/// Standard bivariate normal CDF P(X <= x, Y <= y) with correlation rho in [-1, 1].
inline double bvn_cdf(double x, double y, double rho) {
    if (x == -kInf || y == -kInf) return 0.0;
    if (x == kInf) return normal_cdf(y);
    if (y == kInf) return normal_cdf(x);
    const double p = detail::bvn_upper(-x, -y, rho);
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace copmeta
