#pragma once

// Log-likelihoods of the bivariate random-effects models: the copula mixed
// model (GLMM as its BVN + normal-logit special case), the countermonotonic
// boundary model, the KHS approximation and the Sarmanov closed form.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "copmeta/copulas.hpp"
#include "copmeta/dependent_nodes.hpp"
#include "copmeta/error.hpp"
#include "copmeta/margins.hpp"
#include "copmeta/quadrature.hpp"

namespace copmeta {

enum class Variant { copula_mixed, countermonotonic, khs, sarmanov };

/// Component 1 is sensitivity, component 2 specificity. For the Sarmanov
/// variant the dependence parameter is copula.theta and the family is unused;
/// the countermonotonic variant ignores copula.theta (the Frechet lower bound).
struct ModelSpec {
    MarginSpec margin1;
    MarginSpec margin2;
    CopulaSpec copula;
    Variant variant = Variant::copula_mixed;
};

struct LogLikResult {
    double total = 0.0;
    std::vector<double> per_study;
    std::size_t clamp_events = 0;  // KHS only
};

inline constexpr double kKhsClamp = 1e-10;

struct LikelihoodOptions {
    double khs_clamp = kKhsClamp;
};

namespace detail {

inline void require_data(std::span<const StudyRecord> data) {
    if (data.empty()) throw DomainError("likelihood: empty study list");
    for (const auto& s : data) validate(s);
}

struct LogLatent {
    double lp;
    double lq;
};

inline LogLatent log_latent(double u, const MarginSpec& m) {
    const LatentValue x = latent_value(u, m);
    return {std::log(x.p), std::log(x.q)};
}

inline double log_sum_exp(std::span<const double> terms) {
    const double m = *std::max_element(terms.begin(), terms.end());
    if (m == -kInf) return -kInf;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - m);
    return m + std::log(s);
}

inline LogLikResult finish(std::vector<double> per_study) {
    LogLikResult r;
    r.total = std::accumulate(per_study.begin(), per_study.end(), 0.0);
    r.per_study = std::move(per_study);
    return r;
}

inline void require_finite(double value, std::size_t study) {
    if (!std::isfinite(value)) {
        throw EvaluationError("likelihood contribution of study " + std::to_string(study + 1) + " is not finite",
                              study);
    }
}

}  // namespace detail

/// Copula mixed model: per study log sum_{q1,q2} w w g(y1; n1, x1(u_q1)) g(y2; n2, x2(v_q1q2)).
inline LogLikResult loglik_copula_mixed(std::span<const StudyRecord> data, const ModelSpec& model,
                                        const QuadRule& rule) {
    detail::require_data(data);
    validate(model.margin1);
    validate(model.margin2);
    const NodeGrid grid = dependent_nodes(rule, model.copula);
    const std::size_t nq = grid.nq;

    std::vector<detail::LogLatent> x1(nq);
    std::vector<detail::LogLatent> x2(nq * nq);
    std::vector<double> logw(nq);
    for (std::size_t i = 0; i < nq; ++i) {
        x1[i] = detail::log_latent(grid.u[i], model.margin1);
        logw[i] = std::log(grid.weights[i]);
    }
    for (std::size_t k = 0; k < nq * nq; ++k) x2[k] = detail::log_latent(grid.v[k], model.margin2);

    std::vector<double> per_study(data.size());
    std::vector<double> terms(nq * nq);
    for (std::size_t s = 0; s < data.size(); ++s) {
        const StudyRecord& d = data[s];
        const double c = log_choose(d.n1, d.y1) + log_choose(d.n2, d.y2);
        for (std::size_t i = 0; i < nq; ++i) {
            const double outer = logw[i] + detail::binomial_kernel(d.y1, d.n1, x1[i].lp, x1[i].lq);
            for (std::size_t j = 0; j < nq; ++j) {
                const auto& l2 = x2[i * nq + j];
                terms[i * nq + j] = outer + logw[j] + detail::binomial_kernel(d.y2, d.n2, l2.lp, l2.lq);
            }
        }
        per_study[s] = c + detail::log_sum_exp(terms);
        detail::require_finite(per_study[s], s);
    }
    return detail::finish(std::move(per_study));
}

/// Perfect negative dependence (v = 1 - u): per study log sum_q w_q g(y1; x1(u_q)) g(y2; x2(1 - u_q)).
inline LogLikResult loglik_countermonotonic(std::span<const StudyRecord> data, const MarginSpec& margin1,
                                            const MarginSpec& margin2, const QuadRule& rule) {
    detail::require_data(data);
    validate(margin1);
    validate(margin2);
    const std::size_t nq = rule.size();
    std::vector<detail::LogLatent> x1(nq);
    std::vector<detail::LogLatent> x2(nq);
    std::vector<double> logw(nq);
    for (std::size_t i = 0; i < nq; ++i) {
        x1[i] = detail::log_latent(rule.nodes[i], margin1);
        x2[i] = detail::log_latent(1.0 - rule.nodes[i], margin2);
        logw[i] = std::log(rule.weights[i]);
    }
    std::vector<double> per_study(data.size());
    std::vector<double> terms(nq);
    for (std::size_t s = 0; s < data.size(); ++s) {
        const StudyRecord& d = data[s];
        for (std::size_t i = 0; i < nq; ++i) {
            terms[i] = logw[i] + detail::binomial_kernel(d.y1, d.n1, x1[i].lp, x1[i].lq) +
                       detail::binomial_kernel(d.y2, d.n2, x2[i].lp, x2[i].lq);
        }
        per_study[s] = log_choose(d.n1, d.y1) + log_choose(d.n2, d.y2) + detail::log_sum_exp(terms);
        detail::require_finite(per_study[s], s);
    }
    return detail::finish(std::move(per_study));
}

/// The standard GLMM: bivariate normal random effects on the logit scale.
inline LogLikResult loglik_glmm(std::span<const StudyRecord> data, double pi1, double pi2, double sigma1,
                                double sigma2, double rho, const QuadRule& rule) {
    ModelSpec m{MarginSpec::normal(pi1, sigma1), MarginSpec::normal(pi2, sigma2), CopulaSpec::bvn(rho),
                Variant::copula_mixed};
    return loglik_copula_mixed(data, m, rule);
}

/// KHS approximation: copula density at the beta-binomial CDFs times the beta-binomial pmfs.
/// CDF values are clamped to [clamp, 1 - clamp]; clamping events are counted.
inline LogLikResult loglik_khs(std::span<const StudyRecord> data, const ModelSpec& model,
                               const LikelihoodOptions& opts = {}) {
    detail::require_data(data);
    if (model.margin1.kind != MarginKind::beta || model.margin2.kind != MarginKind::beta) {
        throw DomainError("loglik_khs: requires beta margins");
    }
    validate(model.margin1);
    validate(model.margin2);
    validate(model.copula);
    const double lo = opts.khs_clamp;
    const double hi = 1.0 - opts.khs_clamp;
    std::vector<double> per_study(data.size());
    std::size_t clamps = 0;
    for (std::size_t s = 0; s < data.size(); ++s) {
        const StudyRecord& d = data[s];
        const MarginSpec& m1 = model.margin1;
        const MarginSpec& m2 = model.margin2;
        double h1 = betabinomial_cdf(d.y1, d.n1, m1.pi, m1.scale);
        double h2 = betabinomial_cdf(d.y2, d.n2, m2.pi, m2.scale);
        if (h1 < lo || h1 > hi) {
            h1 = std::clamp(h1, lo, hi);
            ++clamps;
        }
        if (h2 < lo || h2 > hi) {
            h2 = std::clamp(h2, lo, hi);
            ++clamps;
        }
        per_study[s] = copula_log_density(h1, h2, model.copula) + betabinomial_logpmf(d.y1, d.n1, m1.pi, m1.scale) +
                       betabinomial_logpmf(d.y2, d.n2, m2.pi, m2.scale);
        detail::require_finite(per_study[s], s);
    }
    LogLikResult r = detail::finish(std::move(per_study));
    r.clamp_events = clamps;
    return r;
}

/// Sarmanov closed form with beta margins and kernels x_j - pi_j.
inline LogLikResult loglik_sarmanov(std::span<const StudyRecord> data, double pi1, double pi2, double gamma1,
                                    double gamma2, double theta) {
    detail::require_data(data);
    if (!std::isfinite(theta)) throw DomainError("loglik_sarmanov: non-finite theta");
    std::vector<double> per_study(data.size());
    for (std::size_t s = 0; s < data.size(); ++s) {
        const StudyRecord& d = data[s];
        const double k1 = (d.y1 - d.n1 * pi1) / (1.0 / gamma1 + d.n1 - 1.0);
        const double k2 = (d.y2 - d.n2 * pi2) / (1.0 / gamma2 + d.n2 - 1.0);
        const double bracket = 1.0 + theta * k1 * k2;
        if (!(bracket > 0.0)) {
            std::ostringstream os;
            os << "loglik_sarmanov: theta=" << theta << " outside the admissible range for study " << s + 1;
            throw DomainError(os.str());
        }
        per_study[s] = betabinomial_logpmf(d.y1, d.n1, pi1, gamma1) + betabinomial_logpmf(d.y2, d.n2, pi2, gamma2) +
                       std::log(bracket);
    }
    return detail::finish(std::move(per_study));
}

/// Dispatch on model.variant.
inline LogLikResult loglik(std::span<const StudyRecord> data, const ModelSpec& model, const QuadRule& rule,
                           const LikelihoodOptions& opts = {}) {
    switch (model.variant) {
        case Variant::copula_mixed: return loglik_copula_mixed(data, model, rule);
        case Variant::countermonotonic: return loglik_countermonotonic(data, model.margin1, model.margin2, rule);
        case Variant::khs: return loglik_khs(data, model, opts);
        case Variant::sarmanov:
            if (model.margin1.kind != MarginKind::beta || model.margin2.kind != MarginKind::beta) {
                throw DomainError("loglik_sarmanov: requires beta margins");
            }
            return loglik_sarmanov(data, model.margin1.pi, model.margin2.pi, model.margin1.scale,
                                   model.margin2.scale, model.copula.theta);
    }
    throw DomainError("loglik: unknown variant");
}

}  // namespace copmeta
