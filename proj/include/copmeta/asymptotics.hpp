#pragma once

// Constant group-size limits: model-based outcome probabilities and the
// probability limits of the KHS and maximum-likelihood estimators under
// common marginal parameters (pi, gamma) for both components.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "copmeta/copulas.hpp"
#include "copmeta/dependent_nodes.hpp"
#include "copmeta/error.hpp"
#include "copmeta/likelihood.hpp"
#include "copmeta/margins.hpp"
#include "copmeta/optimize.hpp"
#include "copmeta/quadrature.hpp"

namespace copmeta {

inline constexpr int kMaxGroupSize = 200;

/// probs[y1 * (n + 1) + y2] for the (n + 1)^2 outcomes.
struct OutcomeTable {
    int n = 0;
    ModelSpec model;
    std::vector<double> probs;

    double at(int y1, int y2) const { return probs[static_cast<std::size_t>(y1 * (n + 1) + y2)]; }
    std::size_t cases() const { return probs.size(); }
    double total() const {
        double s = 0.0;
        for (double p : probs) s += p;
        return s;
    }
};

namespace detail {

// Binomial pmf over y = 0..n at latent probability x (carried with its complement).
inline void binomial_row(int n, const LatentValue& x, const std::vector<double>& lchoose, double* out) {
    const double lp = std::log(x.p);
    const double lq = std::log(x.q);
    for (int y = 0; y <= n; ++y) out[y] = std::exp(lchoose[static_cast<std::size_t>(y)] + binomial_kernel(y, n, lp, lq));
}

inline std::vector<double> log_choose_row(int n) {
    std::vector<double> c(static_cast<std::size_t>(n) + 1);
    for (int y = 0; y <= n; ++y) c[static_cast<std::size_t>(y)] = log_choose(n, y);
    return c;
}

}  // namespace detail

/// Outcome probabilities of the copula mixed model for groups of common size n.
/// No renormalisation is applied: the deviation of the total from 1 measures quadrature error.
inline OutcomeTable model_probabilities(int n, const ModelSpec& model, const QuadRule& rule) {
    if (n < 1) throw DomainError("model_probabilities: n must be at least 1");
    if (n > kMaxGroupSize) throw SizeError("model_probabilities: n=" + std::to_string(n) + " exceeds the budget of 200");
    if (model.variant != Variant::copula_mixed && model.variant != Variant::countermonotonic) {
        throw DomainError("model_probabilities: requires a copula mixed model");
    }
    validate(model.margin1);
    validate(model.margin2);
    const std::size_t nq = rule.size();
    const auto n1 = static_cast<std::size_t>(n) + 1;
    const std::vector<double> lchoose = detail::log_choose_row(n);

    std::vector<double> b1(nq * n1);
    std::vector<double> inner(nq * n1, 0.0);  // sum_j w_j g(y2 | x2(v_ij))
    std::vector<double> row(n1);
    if (model.variant == Variant::countermonotonic) {
        for (std::size_t i = 0; i < nq; ++i) {
            detail::binomial_row(n, latent_value(rule.nodes[i], model.margin1), lchoose, &b1[i * n1]);
            detail::binomial_row(n, latent_value(1.0 - rule.nodes[i], model.margin2), lchoose, &inner[i * n1]);
        }
    } else {
        const NodeGrid grid = dependent_nodes(rule, model.copula);
        for (std::size_t i = 0; i < nq; ++i) {
            detail::binomial_row(n, latent_value(grid.u[i], model.margin1), lchoose, &b1[i * n1]);
            for (std::size_t j = 0; j < nq; ++j) {
                detail::binomial_row(n, latent_value(grid.at(i, j), model.margin2), lchoose, row.data());
                for (std::size_t y = 0; y < n1; ++y) inner[i * n1 + y] += grid.weights[j] * row[y];
            }
        }
    }
    OutcomeTable t;
    t.n = n;
    t.model = model;
    t.probs.assign(n1 * n1, 0.0);
    for (std::size_t i = 0; i < nq; ++i) {
        const double w = rule.weights[i];
        for (std::size_t y1 = 0; y1 < n1; ++y1) {
            const double a = w * b1[i * n1 + y1];
            for (std::size_t y2 = 0; y2 < n1; ++y2) t.probs[y1 * n1 + y2] += a * inner[i * n1 + y2];
        }
    }
    return t;
}

struct LimitingEstimate {
    double pi = kNaN;
    double gamma = kNaN;
    double theta = kNaN;
    double tau = kNaN;
    double objective = kNaN;  // maximised p-weighted log-likelihood
    bool converged = false;
    int iterations = 0;
    std::string message;
};

struct LimitingOptions {
    std::size_t nq = 50;  // quadrature for the outcome table and the ML maximand
    double grading = 3.0;  // graded_legendre power; 1 gives plain Gauss-Legendre
    OptimOptions optim{1000, 1e-8, 1e-12, 2.0};
    LikelihoodOptions likelihood;
};

namespace detail {

inline void require_common(const OutcomeTable& t) {
    if (t.probs.empty()) throw DomainError("limiting estimator: empty outcome table");
    if (t.model.margin1 != t.model.margin2 || t.model.margin1.kind != MarginKind::beta) {
        throw DomainError("limiting estimator: requires common beta margins");
    }
}

struct CommonStart {
    double pi;
    double gamma;
    double theta;
};

// Moment-based start from the table alone.
inline CommonStart common_start(const OutcomeTable& t) {
    const int n = t.n;
    double m1 = 0.0, m2 = 0.0, s11 = 0.0, s22 = 0.0, s12 = 0.0;
    for (int a = 0; a <= n; ++a) {
        for (int b = 0; b <= n; ++b) {
            const double p = t.at(a, b);
            m1 += p * a;
            m2 += p * b;
            s11 += p * a * a;
            s22 += p * b * b;
            s12 += p * a * b;
        }
    }
    const double v1 = s11 - m1 * m1;
    const double v2 = s22 - m2 * m2;
    const double pi = std::clamp((m1 + m2) / (2.0 * n), 0.02, 0.98);
    const double binvar = n * pi * (1.0 - pi);
    double gamma = n > 1 ? (0.5 * (v1 + v2) / binvar - 1.0) / (n - 1.0) : 0.1;
    gamma = std::clamp(gamma, 0.02, 0.9);
    const double r = v1 > 0.0 && v2 > 0.0 ? (s12 - m1 * m2) / std::sqrt(v1 * v2) : 0.0;
    double tau = std::clamp(2.0 / std::numbers::pi * std::asin(r), -0.8, 0.8);
    const CopulaSpec& c = t.model.copula;
    if (c.family == Family::clayton) {
        const bool neg = negative_rotation(c);
        tau = (neg ? -1.0 : 1.0) * std::max(0.05, (neg == (tau < 0.0)) ? std::abs(tau) : 0.1);
    }
    return {pi, gamma, tau_to_theta(c.family, c.rotation, Tau{tau}).theta};
}

inline double theta_from_z(Family f, double z) {
    switch (f) {
        case Family::bvn: return std::tanh(z);
        case Family::frank: return z;
        case Family::clayton: return std::exp(z);
    }
    return z;
}

inline double theta_to_z(Family f, double th) {
    switch (f) {
        case Family::bvn: return std::atanh(th);
        case Family::frank: return th;
        case Family::clayton: return std::log(th);
    }
    return th;
}

inline bool z_inside(const Eigen::VectorXd& z, Family f) {
    if (std::abs(z[0]) > 25.0 || std::abs(z[1]) > 25.0) return false;
    switch (f) {
        case Family::bvn: return std::abs(z[2]) <= 18.0;
        case Family::frank: return std::abs(z[2]) <= 300.0;
        case Family::clayton: return z[2] <= std::log(kClaytonMax) && z[2] >= -20.0;
    }
    return true;
}

inline LimitingEstimate maximise_common(const OutcomeTable& t, const LimitingOptions& opts,
                                        const std::function<double(double, double, const CopulaSpec&)>& value) {
    const CopulaSpec tmpl = t.model.copula;
    const CommonStart s = common_start(t);
    Eigen::VectorXd z0(3);
    z0 << logit(s.pi), logit(s.gamma), theta_to_z(tmpl.family, s.theta);
    const Objective obj = [&](const Eigen::VectorXd& z) {
        if (!z_inside(z, tmpl.family)) return kInf;
        CopulaSpec c = tmpl;
        c.theta = theta_from_z(tmpl.family, z[2]);
        return -value(inv_logit(z[0]), inv_logit(z[1]), c);
    };
    const OptimResult r = minimize_bfgs(obj, z0, opts.optim);
    LimitingEstimate e;
    e.pi = inv_logit(r.x[0]);
    e.gamma = inv_logit(r.x[1]);
    e.theta = theta_from_z(tmpl.family, r.x[2]);
    CopulaSpec c = tmpl;
    c.theta = e.theta;
    e.tau = theta_to_tau(c).value;
    e.objective = -r.value;
    e.converged = r.converged;
    e.iterations = r.iterations;
    e.message = r.message;
    return e;
}

}  // namespace detail

/// Probability limit of the KHS estimator: maximiser over (pi, gamma, theta) of
/// sum_t p_t log[c(H(y1), H(y2)) h(y1) h(y2)] with clamped beta-binomial CDFs.
inline LimitingEstimate limiting_khs(const OutcomeTable& table, const LimitingOptions& opts = {}) {
    detail::require_common(table);
    const int n = table.n;
    const double lo = opts.likelihood.khs_clamp;
    const double hi = 1.0 - lo;
    const auto value = [&](double pi, double gamma, const CopulaSpec& c) {
        std::vector<double> cdf(static_cast<std::size_t>(n) + 1);
        std::vector<double> lpmf(cdf.size());
        for (int y = 0; y <= n; ++y) {
            cdf[static_cast<std::size_t>(y)] = std::clamp(betabinomial_cdf(y, n, pi, gamma), lo, hi);
            lpmf[static_cast<std::size_t>(y)] = betabinomial_logpmf(y, n, pi, gamma);
        }
        double s = 0.0;
        for (int a = 0; a <= n; ++a) {
            for (int b = 0; b <= n; ++b) {
                const double p = table.at(a, b);
                if (p == 0.0) continue;
                const auto ia = static_cast<std::size_t>(a);
                const auto ib = static_cast<std::size_t>(b);
                s += p * (copula_log_density(cdf[ia], cdf[ib], c) + lpmf[ia] + lpmf[ib]);
            }
        }
        return s;
    };
    return detail::maximise_common(table, opts, value);
}

/// Probability limit of the maximum-likelihood estimator of the copula mixed model.
inline LimitingEstimate limiting_mle(const OutcomeTable& table, const LimitingOptions& opts = {}) {
    detail::require_common(table);
    const QuadRule rule = graded_legendre(opts.nq, opts.grading);
    const auto value = [&](double pi, double gamma, const CopulaSpec& c) {
        ModelSpec m = table.model;
        m.variant = Variant::copula_mixed;
        m.margin1 = MarginSpec::beta(pi, gamma);
        m.margin2 = m.margin1;
        m.copula = c;
        const OutcomeTable fitted = model_probabilities(table.n, m, rule);
        double s = 0.0;
        for (std::size_t k = 0; k < table.probs.size(); ++k) {
            const double p = table.probs[k];
            if (p == 0.0) continue;
            s += p * std::log(fitted.probs[k]);
        }
        return s;
    };
    return detail::maximise_common(table, opts, value);
}

/// One row of the limiting-estimator table for a BVN copula mixed model with common beta margins.
struct AsymptoticRow {
    double rho_true;
    int n;
    double rho_khs;
    double pi_true;
    double pi_khs;
    double gamma_true;
    double gamma_khs;
    LimitingEstimate khs;
    LimitingEstimate mle;  // filled when requested
};

inline AsymptoticRow asymptotic_row(double rho, double pi, double gamma, int n, bool with_mle,
                                    const LimitingOptions& opts = {}) {
    const ModelSpec truth{MarginSpec::beta(pi, gamma), MarginSpec::beta(pi, gamma), CopulaSpec::bvn(rho),
                          Variant::copula_mixed};
    const OutcomeTable table = model_probabilities(n, truth, graded_legendre(opts.nq, opts.grading));
    AsymptoticRow row{rho, n, kNaN, pi, kNaN, gamma, kNaN, {}, {}};
    row.khs = limiting_khs(table, opts);
    row.rho_khs = row.khs.theta;
    row.pi_khs = row.khs.pi;
    row.gamma_khs = row.khs.gamma;
    if (with_mle) row.mle = limiting_mle(table, opts);
    return row;
}

}  // namespace copmeta
