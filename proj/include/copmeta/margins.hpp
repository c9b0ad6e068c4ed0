#pragma once

// Random-effects margins for the latent sensitivity/specificity and the
// binomial / beta-binomial within-study distributions.

#include <cmath>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "copmeta/error.hpp"
#include "copmeta/special.hpp"

namespace copmeta {

enum class MarginKind { normal_logit, beta };

/// pi is the mean parameter; scale is sigma (normal on the logit scale) or gamma (beta dispersion).
struct MarginSpec {
    MarginKind kind = MarginKind::normal_logit;
    double pi = 0.5;
    double scale = 1.0;

    static MarginSpec normal(double pi, double sigma) { return {MarginKind::normal_logit, pi, sigma}; }
    static MarginSpec beta(double pi, double gamma) { return {MarginKind::beta, pi, gamma}; }

    friend bool operator==(const MarginSpec&, const MarginSpec&) = default;
};

inline std::string_view margin_label(MarginKind k) { return k == MarginKind::beta ? "beta" : "normal"; }

/// One study's 2x2 table: y1 true positives of n1 diseased, y2 true negatives of n2 non-diseased.
struct StudyRecord {
    int y1 = 0;
    int n1 = 1;
    int y2 = 0;
    int n2 = 1;

    friend bool operator==(const StudyRecord&, const StudyRecord&) = default;
};

inline void validate(const StudyRecord& s) {
    if (s.n1 < 1 || s.n2 < 1) throw ValidationError("study has an empty arm (n1 and n2 must be >= 1)");
    if (s.y1 < 0 || s.y2 < 0) throw ValidationError("negative count in study record");
    if (s.y1 > s.n1 || s.y2 > s.n2) throw ValidationError("count exceeds group size in study record");
}

inline void validate(const MarginSpec& m) {
    std::ostringstream os;
    if (!(m.pi > 0.0 && m.pi < 1.0)) {
        os << "margin mean pi=" << m.pi << " outside (0, 1)";
        throw DomainError(os.str());
    }
    if (m.kind == MarginKind::normal_logit && !(m.scale > 0.0 && std::isfinite(m.scale))) {
        os << "normal margin sigma=" << m.scale << " must be positive";
        throw DomainError(os.str());
    }
    if (m.kind == MarginKind::beta && !(m.scale > 0.0 && m.scale < 1.0)) {
        os << "beta margin gamma=" << m.scale << " outside (0, 1)";
        throw DomainError(os.str());
    }
}

inline constexpr double kDegenerateDispersion = 1e-8;

struct BetaShape {
    double alpha;
    double beta;
    bool degenerate;  // gamma below 1e-8: numerically a point mass at pi
};

/// Shape parameters of Beta(pi, gamma) with gamma = 1/(alpha + beta + 1).
inline BetaShape beta_shape(double pi, double gamma) {
    if (!(pi > 0.0 && pi < 1.0)) throw DomainError("beta_shape: pi outside (0, 1)");
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("beta_shape: gamma outside (0, 1)");
    const double total = 1.0 / gamma - 1.0;
    return {pi * total, (1.0 - pi) * total, gamma < kDegenerateDispersion};
}

/// Inverse of beta_shape.
inline std::pair<double, double> beta_mean_dispersion(double alpha, double beta) {
    return {alpha / (alpha + beta), 1.0 / (alpha + beta + 1.0)};
}

/// A latent probability together with its complement, each carried accurately.
struct LatentValue {
    double p;
    double q;  // 1 - p
};

inline LatentValue latent_value(double u, const MarginSpec& m) {
    if (m.kind == MarginKind::normal_logit) {
        const double z = logit(m.pi) + m.scale * normal_quantile(u);
        return {inv_logit(z), inv_logit(-z)};
    }
    const BetaShape shape = beta_shape(m.pi, m.scale);
    const double a = shape.alpha;
    const double b = shape.beta;
    // the long-double path of ibeta_inv can stall in the far lower tail (u ~ 1e-18)
    using Policy = boost::math::policies::policy<boost::math::policies::promote_double<false>,
                                                 boost::math::policies::max_root_iterations<1000>>;
    double q = 0.0;
    const double p = boost::math::ibeta_inv(a, b, u, &q, Policy());
    return {p, q};
}

/// Latent sensitivity/specificity at uniform score u: margin quantile at u.
inline double latent_probability(double u, const MarginSpec& m) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("latent_probability: u must lie in (0, 1)");
    validate(m);
    return latent_value(u, m).p;
}

/// Margin CDF of the latent probability (inverse of latent_probability).
inline double margin_cdf(double x, const MarginSpec& m) {
    validate(m);
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    if (m.kind == MarginKind::normal_logit) return normal_cdf((logit(x) - logit(m.pi)) / m.scale);
    const BetaShape shape = beta_shape(m.pi, m.scale);
    const double a = shape.alpha;
    const double b = shape.beta;
    return boost::math::ibeta(a, b, x);
}

/// Log density of the latent probability at x in (0, 1).
inline double margin_log_density(double x, const MarginSpec& m) {
    if (m.kind == MarginKind::normal_logit) {
        const double z = (logit(x) - logit(m.pi)) / m.scale;
        return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(m.scale) - std::log(x) -
               std::log1p(-x);
    }
    const BetaShape shape = beta_shape(m.pi, m.scale);
    const double a = shape.alpha;
    const double b = shape.beta;
    return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta(a, b);
}

namespace detail {

inline void require_count(int y, int n, const char* op) {
    if (n < 0 || y < 0 || y > n) {
        throw DomainError(std::string(op) + ": need 0 <= y <= n (y=" + std::to_string(y) +
                          ", n=" + std::to_string(n) + ")");
    }
}

// y log p + (n - y) log q with 0 log 0 = 0.
inline double binomial_kernel(int y, int n, double log_p, double log_q) {
    double s = 0.0;
    if (y > 0) s += y * log_p;
    if (n - y > 0) s += (n - y) * log_q;
    return s;
}

}  // namespace detail

inline double binomial_logpmf(int y, int n, double p) {
    detail::require_count(y, n, "binomial_logpmf");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binomial_logpmf: p outside [0, 1]");
    return log_choose(n, y) + detail::binomial_kernel(y, n, std::log(p), std::log1p(-p));
}

inline double betabinomial_logpmf(int y, int n, double pi, double gamma) {
    detail::require_count(y, n, "betabinomial_logpmf");
    const BetaShape shape = beta_shape(pi, gamma);
    const double a = shape.alpha;
    const double b = shape.beta;
    return log_choose(n, y) + log_beta(y + a, n - y + b) - log_beta(a, b);
}

/// Full beta-binomial pmf over y = 0..n by the log-ratio recurrence.
inline std::vector<double> betabinomial_pmf_all(int n, double pi, double gamma) {
    detail::require_count(0, n, "betabinomial_pmf_all");
    const BetaShape shape = beta_shape(pi, gamma);
    const double a = shape.alpha;
    const double b = shape.beta;
    std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
    double lp = log_beta(a, n + b) - log_beta(a, b);
    pmf[0] = std::exp(lp);
    for (int y = 0; y < n; ++y) {
        lp += std::log((n - y) * (y + a) / ((y + 1.0) * (n - y - 1.0 + b)));
        pmf[static_cast<std::size_t>(y) + 1] = std::exp(lp);
    }
    return pmf;
}

/// P(Y <= y) for Y ~ Beta-Binomial(n, pi, gamma); exactly 1 at y = n.
inline double betabinomial_cdf(int y, int n, double pi, double gamma) {
    detail::require_count(y, n, "betabinomial_cdf");
    if (y == n) return 1.0;
    const std::vector<double> pmf = betabinomial_pmf_all(n, pi, gamma);
    double lower = 0.0;
    for (int k = 0; k <= y; ++k) lower += pmf[static_cast<std::size_t>(k)];
    if (lower <= 0.5) return lower;
    // the complement sum is the more accurate one in the upper half
    double upper = 0.0;
    for (int k = y + 1; k <= n; ++k) upper += pmf[static_cast<std::size_t>(k)];
    return 1.0 - upper;
}

}  // namespace copmeta
