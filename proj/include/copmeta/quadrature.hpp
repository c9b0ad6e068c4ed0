#pragma once

// Gauss-Legendre rules mapped to the unit interval.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "copmeta/error.hpp"

namespace copmeta {

/// Nodes in (0,1), strictly increasing, with positive weights summing to 1.
struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const noexcept { return nodes.size(); }
};

inline constexpr std::size_t kDefaultNq = 15;
inline constexpr std::size_t kMaxNq = 200;

namespace detail {

// Roots and weights of the degree-n Legendre polynomial on [-1, 1], roots ascending.
inline void legendre_roots(std::size_t n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        // Tricomi initial guess for the i-th largest root.
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = z;
            for (std::size_t k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = p2;
            }
            dp = static_cast<double>(n) * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) <= 1e-16) break;
        }
        // recompute derivative at the converged root
        double p0 = 1.0;
        double p1 = z;
        for (std::size_t k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / static_cast<double>(k);
            p0 = p1;
            p1 = p2;
        }
        dp = static_cast<double>(n) * (z * p1 - p0) / (z * z - 1.0);
        const double wt = 2.0 / ((1.0 - z * z) * dp * dp);
        x[n - 1 - i] = z;
        x[i] = -z;
        w[n - 1 - i] = wt;
        w[i] = wt;
    }
    if (n % 2 == 1) x[n / 2] = 0.0;
}

}  // namespace detail

/// Gauss-Legendre rule with nq points on (0,1); exact for polynomials of degree 2nq-1.
inline QuadRule gauss_legendre(std::size_t nq = kDefaultNq) {
    if (nq < 1 || nq > kMaxNq) {
        throw DomainError("gauss_legendre: nq must lie in [1, 200], got " + std::to_string(nq));
    }
    QuadRule rule;
    if (nq == 1) {
        rule.nodes = {0.5};
        rule.weights = {1.0};
        return rule;
    }
    std::vector<double> x;
    std::vector<double> w;
    detail::legendre_roots(nq, x, w);
    rule.nodes.resize(nq);
    rule.weights.resize(nq);
    for (std::size_t i = 0; i < nq; ++i) {
        rule.nodes[i] = 0.5 * (x[i] + 1.0);
        rule.weights[i] = 0.5 * w[i];
    }
    return rule;
}

/// Gauss-Legendre in t after the substitution u = t^p / (t^p + (1 - t)^p). The map flattens
/// algebraic endpoint singularities such as those of beta quantiles; p = 1 is plain Gauss-Legendre.
inline QuadRule graded_legendre(std::size_t nq, double p = 3.0) {
    if (!(p >= 1.0)) throw DomainError("graded_legendre: grading power must be at least 1");
    const QuadRule g = gauss_legendre(nq);
    QuadRule rule = g;
    for (std::size_t i = 0; i < nq; ++i) {
        const double t = g.nodes[i];
        const double a = std::pow(t, p), b = std::pow(1.0 - t, p);
        rule.nodes[i] = a / (a + b);
        rule.weights[i] = g.weights[i] * p * std::pow(t * (1.0 - t), p - 1.0) / ((a + b) * (a + b));
    }
    return rule;
}

/// Integrate f over [a, b] with a fixed rule.
template <class F>
double integrate(const QuadRule& rule, double a, double b, F&& f) {
    double sum = 0.0;
    const double len = b - a;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        sum += rule.weights[i] * f(a + len * rule.nodes[i]);
    }
    return sum * len;
}

}  // namespace copmeta
