#pragma once

// Maximum-likelihood fitting of the copula mixed model and its competitors.
//
// Optimisation runs on unconstrained parameters: logit for pi and gamma, log
// for sigma, and for the dependence parameter atanh (BVN), identity (Frank,
// Sarmanov) or log (Clayton). Standard errors come from the central-difference
// Hessian of the log-likelihood in the original parameters at the optimum.

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "copmeta/copulas.hpp"
#include "copmeta/likelihood.hpp"
#include "copmeta/optimize.hpp"
#include "copmeta/quadrature.hpp"

namespace copmeta {

inline constexpr std::size_t kParams = 5;  // pi1, pi2, scale1, scale2, theta
using ParamVector = std::array<double, kParams>;

struct FitOptions {
    std::size_t nq = kDefaultNq;
    OptimOptions optim;
    LikelihoodOptions likelihood;
    double boundary_tau = 0.97;  // |tau| above this triggers the countermonotonic refit
    bool boundary_refit = true;
    bool compute_se = true;
    std::optional<ParamVector> start;  // original-scale starting values
};

struct FitResult {
    ModelSpec model;
    ParamVector estimates{};
    Tau tau_hat;
    ParamVector se{kNaN, kNaN, kNaN, kNaN, kNaN};
    double tau_se = kNaN;
    bool se_available = false;
    Eigen::MatrixXd covariance;  // inverse observed information, original scale (empty if unavailable)
    LogLikResult loglik;
    bool converged = false;
    bool boundary = false;  // countermonotonic refit applied
    int iterations = 0;
    double gradient_norm = kNaN;
    ParamVector start{};
    std::string diagnostics;
    std::shared_ptr<const FitResult> interior;  // unconstrained fit kept alongside a boundary refit
};

struct StandardErrors {
    std::vector<double> se;
    Eigen::MatrixXd covariance;
    bool ok = false;
    std::string message;
};

/// Observed-information standard errors from a log-likelihood in original parameters.
/// lower/upper are the open parameter bounds; finite-difference steps stay inside them.
inline StandardErrors standard_errors(const Objective& loglik_fn, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    StandardErrors out;
    const Eigen::Index n = x.size();
    Eigen::VectorXd steps(n);
    const double base = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
    for (Eigen::Index i = 0; i < n; ++i) {
        double h = base * std::max(1.0, std::abs(x[i]));
        const double room = std::min(x[i] - lower[i], upper[i] - x[i]);
        if (!(room > 0.0)) {
            out.message = "parameter on its bound";
            return out;
        }
        h = std::min(h, 0.5 * room);
        steps[i] = h;
    }
    const Objective negll = [&](const Eigen::VectorXd& p) {
        try {
            return -loglik_fn(p);
        } catch (const std::exception&) {
            return kInf;
        }
    };
    const Eigen::MatrixXd hess = numerical_hessian(negll, x, steps);
    if (!hess.allFinite()) {
        out.message = "non-finite Hessian";
        return out;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(hess);
    if (llt.info() != Eigen::Success) {
        out.message = "Hessian not positive definite (near-boundary or flat likelihood)";
        return out;
    }
    out.covariance = llt.solve(Eigen::MatrixXd::Identity(n, n));
    out.se.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) out.se[static_cast<std::size_t>(i)] = std::sqrt(out.covariance(i, i));
    out.ok = true;
    return out;
}

namespace detail {

// Box on the unconstrained scale; outside it the objective is +inf.
inline constexpr double kLogitBound = 25.0;
inline constexpr double kLogScaleLo = -12.0;
inline constexpr double kLogScaleHi = 6.0;
inline constexpr double kAtanhBound = 18.0;
inline constexpr double kFrankBound = 300.0;

class ParamCodec {
public:
    explicit ParamCodec(const ModelSpec& tmpl) : tmpl_(tmpl) {}

    std::size_t dim() const { return tmpl_.variant == Variant::countermonotonic ? 4 : 5; }

    ModelSpec model(const ParamVector& p) const {
        ModelSpec m = tmpl_;
        m.margin1.pi = p[0];
        m.margin2.pi = p[1];
        m.margin1.scale = p[2];
        m.margin2.scale = p[3];
        m.copula.theta = tmpl_.variant == Variant::countermonotonic ? tmpl_.copula.theta : p[4];
        return m;
    }

    ParamVector original(const Eigen::VectorXd& z) const {
        ParamVector p{};
        p[0] = inv_logit(z[0]);
        p[1] = inv_logit(z[1]);
        p[2] = scale_from(z[2], tmpl_.margin1.kind);
        p[3] = scale_from(z[3], tmpl_.margin2.kind);
        p[4] = dim() == 5 ? theta_from(z[4]) : tmpl_.copula.theta;
        return p;
    }

    Eigen::VectorXd unconstrained(const ParamVector& p) const {
        Eigen::VectorXd z(static_cast<Eigen::Index>(dim()));
        z[0] = logit(p[0]);
        z[1] = logit(p[1]);
        z[2] = scale_to(p[2], tmpl_.margin1.kind);
        z[3] = scale_to(p[3], tmpl_.margin2.kind);
        if (dim() == 5) z[4] = theta_to(p[4]);
        return z;
    }

    bool inside(const Eigen::VectorXd& z) const {
        for (int i = 0; i < 2; ++i) {
            if (std::abs(z[i]) > kLogitBound) return false;
        }
        for (int i = 2; i < 4; ++i) {
            const MarginKind k = i == 2 ? tmpl_.margin1.kind : tmpl_.margin2.kind;
            if (k == MarginKind::beta ? std::abs(z[i]) > kLogitBound : (z[i] < kLogScaleLo || z[i] > kLogScaleHi)) {
                return false;
            }
        }
        if (dim() == 5) {
            const double t = z[4];
            switch (dependence()) {
                case Dep::atanh: return std::abs(t) <= kAtanhBound;
                case Dep::identity: return std::abs(t) <= kFrankBound;
                case Dep::log: return t <= std::log(kClaytonMax) && t >= std::log(kClaytonIndependence) + 1.0;
            }
        }
        return true;
    }

    // Margin parameters pinned near the box edge signal a degenerate fit.
    bool margins_at_bound(const Eigen::VectorXd& z) const {
        for (int i = 0; i < 4; ++i) {
            const bool scale_normal = (i == 2 && tmpl_.margin1.kind == MarginKind::normal_logit) ||
                                      (i == 3 && tmpl_.margin2.kind == MarginKind::normal_logit);
            if (scale_normal) {
                if (z[i] < kLogScaleLo + 1.0 || z[i] > kLogScaleHi - 1.0) return true;
            } else if (std::abs(z[i]) > kLogitBound - 2.0) {
                return true;
            }
        }
        return false;
    }

    Eigen::VectorXd lower() const {
        Eigen::VectorXd lo = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim()));
        if (dim() == 5) lo[4] = theta_lower();
        return lo;
    }

    Eigen::VectorXd upper() const {
        Eigen::VectorXd hi(static_cast<Eigen::Index>(dim()));
        hi[0] = 1.0;
        hi[1] = 1.0;
        hi[2] = tmpl_.margin1.kind == MarginKind::beta ? 1.0 : kInf;
        hi[3] = tmpl_.margin2.kind == MarginKind::beta ? 1.0 : kInf;
        if (dim() == 5) hi[4] = theta_upper();
        return hi;
    }

private:
    enum class Dep { atanh, identity, log };

    Dep dependence() const {
        if (tmpl_.variant == Variant::sarmanov) return Dep::identity;
        switch (tmpl_.copula.family) {
            case Family::bvn: return Dep::atanh;
            case Family::frank: return Dep::identity;
            case Family::clayton: return Dep::log;
        }
        return Dep::identity;
    }

    double theta_from(double z) const {
        switch (dependence()) {
            case Dep::atanh: return std::tanh(z);
            case Dep::identity: return z;
            case Dep::log: return std::exp(z);
        }
        return z;
    }

    double theta_to(double t) const {
        switch (dependence()) {
            case Dep::atanh: return std::atanh(std::clamp(t, -1.0 + 1e-15, 1.0 - 1e-15));
            case Dep::identity: return t;
            case Dep::log: return std::log(std::max(t, 1e-8));
        }
        return t;
    }

    double theta_lower() const {
        switch (dependence()) {
            case Dep::atanh: return -1.0;
            case Dep::identity: return -kInf;
            case Dep::log: return 0.0;
        }
        return -kInf;
    }

    double theta_upper() const {
        switch (dependence()) {
            case Dep::atanh: return 1.0;
            case Dep::identity: return kInf;
            case Dep::log: return kClaytonMax;
        }
        return kInf;
    }

    static double scale_from(double z, MarginKind k) { return k == MarginKind::beta ? inv_logit(z) : std::exp(z); }
    static double scale_to(double s, MarginKind k) { return k == MarginKind::beta ? logit(s) : std::log(s); }

    ModelSpec tmpl_;
};

// Kendall's tau-b.
inline double kendall_tau(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double concordant = 0.0;
    double discordant = 0.0;
    double ties_x = 0.0;
    double ties_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0) continue;
            if (dx == 0.0) {
                ties_x += 1.0;
            } else if (dy == 0.0) {
                ties_y += 1.0;
            } else if (dx * dy > 0.0) {
                concordant += 1.0;
            } else {
                discordant += 1.0;
            }
        }
    }
    const double denom = std::sqrt((concordant + discordant + ties_x) * (concordant + discordant + ties_y));
    return denom > 0.0 ? (concordant - discordant) / denom : 0.0;
}

}  // namespace detail

/// Default starting values: pooled proportions, sigma = 1 or gamma = 0.1, and the
/// dependence parameter from Kendall's tau of the continuity-corrected empirical logits.
inline ParamVector starting_values(std::span<const StudyRecord> data, const ModelSpec& tmpl) {
    double sy1 = 0.0, sn1 = 0.0, sy2 = 0.0, sn2 = 0.0;
    std::vector<double> l1;
    std::vector<double> l2;
    for (const auto& s : data) {
        sy1 += s.y1;
        sn1 += s.n1;
        sy2 += s.y2;
        sn2 += s.n2;
        l1.push_back(logit((s.y1 + 0.5) / (s.n1 + 1.0)));
        l2.push_back(logit((s.y2 + 0.5) / (s.n2 + 1.0)));
    }
    ParamVector p{};
    p[0] = std::clamp(sy1 / sn1, 1e-3, 1.0 - 1e-3);
    p[1] = std::clamp(sy2 / sn2, 1e-3, 1.0 - 1e-3);
    p[2] = tmpl.margin1.kind == MarginKind::beta ? 0.1 : 1.0;
    p[3] = tmpl.margin2.kind == MarginKind::beta ? 0.1 : 1.0;
    if (tmpl.variant == Variant::sarmanov) {
        p[4] = 0.0;
    } else if (tmpl.variant == Variant::countermonotonic) {
        p[4] = tmpl.copula.theta;
    } else {
        double tau = std::clamp(detail::kendall_tau(l1, l2), -0.8, 0.8);
        if (tmpl.copula.family == Family::clayton) {
            const bool neg = negative_rotation(tmpl.copula);
            const double mag = std::max(std::abs(tau), 0.05);
            tau = (neg ? -1.0 : 1.0) * ((neg == (tau < 0.0)) ? mag : 0.1);
        }
        p[4] = tau_to_theta(tmpl.copula.family, tmpl.copula.rotation, Tau{tau}).theta;
    }
    return p;
}

namespace detail {

inline FitResult fit_impl(std::span<const StudyRecord> data, const ModelSpec& tmpl, const FitOptions& opts) {
    if (data.size() < 2) throw DomainError("fit: at least two studies are required");
    for (const auto& s : data) validate(s);
    const QuadRule rule = gauss_legendre(opts.nq);
    const ParamCodec codec(tmpl);

    FitResult res;
    res.start = opts.start.value_or(starting_values(data, tmpl));
    if (data.size() < 5) res.diagnostics = "fewer than 5 studies; estimates may be unstable. ";

    const Objective objective = [&](const Eigen::VectorXd& z) {
        if (!codec.inside(z)) return kInf;
        return -loglik(data, codec.model(codec.original(z)), rule, opts.likelihood).total;
    };
    const Eigen::VectorXd z0 = codec.unconstrained(res.start);
    const OptimResult opt = minimize_bfgs(objective, z0, opts.optim);

    const ParamVector est = codec.original(opt.x);
    res.model = codec.model(est);
    res.estimates = est;
    res.iterations = opt.iterations;
    res.gradient_norm = opt.gradient.size() > 0 ? opt.gradient.lpNorm<Eigen::Infinity>() : kNaN;
    res.converged = opt.converged && std::isfinite(opt.value);
    res.diagnostics += opt.message;
    if (!std::isfinite(opt.value)) {
        res.loglik.total = -kInf;
        return res;
    }
    res.loglik = loglik(data, res.model, rule, opts.likelihood);
    if (codec.margins_at_bound(opt.x)) {
        res.converged = false;
        res.diagnostics += "; margin parameter at its transform bound (degenerate data)";
    }

    if (tmpl.variant == Variant::countermonotonic) {
        res.tau_hat = Tau{-1.0};
        res.estimates[4] = kNaN;
    } else if (tmpl.variant == Variant::sarmanov) {
        res.tau_hat = Tau{kNaN};
    } else {
        res.tau_hat = theta_to_tau(res.model.copula);
    }

    if (opts.compute_se && res.converged) {
        const std::size_t dim = codec.dim();
        Eigen::VectorXd x(static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < dim; ++i) x[static_cast<Eigen::Index>(i)] = est[i];
        const Objective ll = [&](const Eigen::VectorXd& p) {
            ParamVector full = est;
            for (std::size_t i = 0; i < dim; ++i) full[i] = p[static_cast<Eigen::Index>(i)];
            return loglik(data, codec.model(full), rule, opts.likelihood).total;
        };
        const StandardErrors se = standard_errors(ll, x, codec.lower(), codec.upper());
        if (se.ok) {
            res.se_available = true;
            res.covariance = se.covariance;
            for (std::size_t i = 0; i < dim; ++i) res.se[i] = se.se[i];
            if (dim == 5 && tmpl.variant != Variant::sarmanov) {
                const double th = est[4];
                const double h = 1e-6 * std::max(1.0, std::abs(th));
                CopulaSpec lo = res.model.copula;
                CopulaSpec hi = res.model.copula;
                lo.theta = th - h;
                hi.theta = th + h;
                try {
                    const double dtau = (theta_to_tau(hi).value - theta_to_tau(lo).value) / (2.0 * h);
                    res.tau_se = std::abs(dtau) * res.se[4];
                } catch (const DomainError&) {
                    res.tau_se = kNaN;
                }
            }
        } else {
            res.diagnostics += "; standard errors omitted: " + se.message;
        }
    }
    return res;
}

}  // namespace detail

/// Fit the countermonotonic (Frechet lower bound) model: only the four margin
/// parameters are estimated and tau is reported as -1 without a standard error.
inline FitResult fit_countermonotonic(std::span<const StudyRecord> data, const ModelSpec& margins,
                                      const FitOptions& opts = {}) {
    ModelSpec tmpl = margins;
    tmpl.variant = Variant::countermonotonic;
    FitOptions o = opts;
    if (o.start) (*o.start)[4] = tmpl.copula.theta;
    FitResult r = detail::fit_impl(data, tmpl, o);
    r.boundary = true;
    return r;
}

/// Maximum-likelihood fit of the model described by the template (parameter values in
/// the template are ignored; starting values come from options or starting_values()).
inline FitResult fit(std::span<const StudyRecord> data, const ModelSpec& tmpl, const FitOptions& opts = {}) {
    FitResult res = detail::fit_impl(data, tmpl, opts);
    if (tmpl.variant != Variant::copula_mixed || !opts.boundary_refit || !std::isfinite(res.loglik.total)) {
        return res;
    }
    const double tau = res.tau_hat.value;
    const bool near_bound = tau < -opts.boundary_tau || (!res.se_available && tau < -0.9);
    if (!near_bound) {
        if (tau > opts.boundary_tau) res.diagnostics += "; tau near the comonotonic bound";
        return res;
    }
    FitOptions o = opts;
    ParamVector start = res.estimates;
    o.start = start;
    FitResult refit = fit_countermonotonic(data, tmpl, o);
    refit.model.copula = tmpl.copula;  // keep the family label for reporting
    refit.model.variant = Variant::countermonotonic;
    if (refit.loglik.total >= res.loglik.total - 1e-6) {
        refit.interior = std::make_shared<const FitResult>(res);
        refit.diagnostics = "countermonotonic refit applied (interior tau=" + std::to_string(tau) + "); " +
                            refit.diagnostics;
        return refit;
    }
    res.diagnostics += "; countermonotonic refit attempted but had lower log-likelihood";
    res.interior = nullptr;
    return res;
}

}  // namespace copmeta
