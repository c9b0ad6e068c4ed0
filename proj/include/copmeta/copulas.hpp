#pragma once

// Bivariate copula families (BVN, Frank, Clayton with rotations) used for the
// random-effects distribution of (sensitivity, specificity).
//
// Rotation convention, for a base copula C with density c:
//   0   : c(u1, u2)
//   90  : c(1 - u1, u2)        negative dependence
//   180 : c(1 - u1, 1 - u2)    survival copula
//   270 : c(u1, 1 - u2)        negative dependence
// Conditional functions are always C(v | u) = dC(u, v)/du, i.e. the second
// argument given the first.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <string_view>

#include <boost/math/tools/roots.hpp>

#include "copmeta/error.hpp"
#include "copmeta/quadrature.hpp"
#include "copmeta/special.hpp"

namespace copmeta {

enum class Family { bvn, frank, clayton };

/// Kendall's tau, |value| <= 1.
struct Tau {
    double value = 0.0;
};

struct CopulaSpec {
    Family family = Family::bvn;
    int rotation = 0;  // degrees: 0, 90, 180, 270 (Clayton only)
    double theta = 0.0;

    static CopulaSpec bvn(double rho) { return {Family::bvn, 0, rho}; }
    static CopulaSpec frank(double theta) { return {Family::frank, 0, theta}; }
    static CopulaSpec clayton(double theta, int rotation = 0) { return {Family::clayton, rotation, theta}; }

    friend bool operator==(const CopulaSpec&, const CopulaSpec&) = default;
};

inline constexpr double kFrankIndependence = 1e-5;
inline constexpr double kFrankTauSeries = 1e-3;
inline constexpr double kClaytonIndependence = 1e-10;
inline constexpr double kClaytonMax = 1e4;
inline constexpr double kFrankBracket = 300.0;

inline std::string_view family_name(Family f) {
    switch (f) {
        case Family::bvn: return "bvn";
        case Family::frank: return "frank";
        case Family::clayton: return "clayton";
    }
    return "?";
}

/// Short identifier used in reports and on the command line, e.g. "clayton270".
inline std::string copula_label(const CopulaSpec& spec) {
    std::string s(family_name(spec.family));
    if (spec.family == Family::clayton) s += std::to_string(spec.rotation);
    return s;
}

/// True when the rotation models negative dependence (tau <= 0).
inline bool negative_rotation(const CopulaSpec& spec) {
    return spec.family == Family::clayton && (spec.rotation == 90 || spec.rotation == 270);
}

inline void validate(const CopulaSpec& spec) {
    auto fail = [&](const std::string& msg) {
        std::ostringstream os;
        os << copula_label(spec) << ": " << msg << " (theta=" << spec.theta << ")";
        throw DomainError(os.str());
    };
    if (!std::isfinite(spec.theta)) fail("non-finite dependence parameter");
    switch (spec.family) {
        case Family::bvn:
            if (spec.rotation != 0) fail("rotation only applies to Clayton");
            if (spec.theta < -1.0 || spec.theta > 1.0) fail("correlation outside [-1, 1]");
            break;
        case Family::frank:
            if (spec.rotation != 0) fail("rotation only applies to Clayton");
            break;
        case Family::clayton:
            if (spec.rotation != 0 && spec.rotation != 90 && spec.rotation != 180 && spec.rotation != 270) {
                fail("rotation must be 0, 90, 180 or 270");
            }
            if (spec.theta < 0.0) fail("Clayton parameter must be nonnegative");
            if (spec.theta > kClaytonMax) fail("Clayton parameter above 1e4 guard");
            break;
    }
}

/// Independence (product copula) for this parameter value.
inline bool is_independence(const CopulaSpec& spec) {
    switch (spec.family) {
        case Family::bvn: return spec.theta == 0.0;
        case Family::frank: return std::abs(spec.theta) < kFrankIndependence;
        case Family::clayton: return spec.theta < kClaytonIndependence;
    }
    return false;
}

/// The copula of (U2, U1) when (U1, U2) ~ spec.
inline CopulaSpec transposed(const CopulaSpec& spec) {
    CopulaSpec t = spec;
    if (spec.family == Family::clayton) {
        if (spec.rotation == 90) t.rotation = 270;
        else if (spec.rotation == 270) t.rotation = 90;
    }
    return t;
}

namespace detail {

inline void require_unit(double u, const char* op) {
    if (!(u >= 0.0 && u <= 1.0)) {
        throw DomainError(std::string(op) + ": argument outside [0, 1]");
    }
}

inline void require_open_unit(double u, const char* op) {
    if (!(u > 0.0 && u < 1.0)) {
        throw DomainError(std::string(op) + ": argument must lie in the open interval (0, 1)");
    }
}

// ---- BVN ----------------------------------------------------------------

inline double bvn_cdf_u(double u, double v, double rho) {
    if (rho == -1.0) return std::max(u + v - 1.0, 0.0);
    if (rho == 1.0) return std::min(u, v);
    return bvn_cdf(normal_quantile(u), normal_quantile(v), rho);
}

inline double bvn_log_density(double u, double v, double rho) {
    if (std::abs(rho) >= 1.0) throw DomainError("bvn: density undefined at |rho| = 1");
    const double x = normal_quantile(u);
    const double y = normal_quantile(v);
    const double r2 = 1.0 - rho * rho;
    return -0.5 * std::log(r2) - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * r2);
}

inline double bvn_cond(double v, double u, double rho) {
    if (std::abs(rho) == 1.0) {
        const double target = rho > 0.0 ? u : 1.0 - u;
        return v >= target ? 1.0 : 0.0;
    }
    return normal_cdf((normal_quantile(v) - rho * normal_quantile(u)) / std::sqrt(1.0 - rho * rho));
}

inline double bvn_inv_cond(double q, double u, double rho) {
    if (rho == -1.0) return 1.0 - u;
    if (rho == 1.0) return u;
    return normal_cdf(std::sqrt(1.0 - rho * rho) * normal_quantile(q) + rho * normal_quantile(u));
}

// ---- Frank, theta > 0 (negative theta handled by reflection) ------------

inline double frank_cdf_pos(double u, double v, double th) {
    return -std::log1p(std::expm1(-th * u) * std::expm1(-th * v) / std::expm1(-th)) / th;
}

inline double frank_log_density_pos(double u, double v, double th) {
    const double a = std::exp(-th);
    const double b = std::exp(-th * u);
    const double c = std::exp(-th * v);
    const double d = b + c - b * c - a;
    return std::log(th) + std::log(-std::expm1(-th)) - th * (u + v) - 2.0 * std::log(d);
}

inline double frank_cond_pos(double v, double u, double th) {
    const double a = std::exp(-th);
    const double b = std::exp(-th * u);
    const double c = std::exp(-th * v);
    return b * (-std::expm1(-th * v)) / (b + c - b * c - a);
}

inline double frank_inv_cond_pos(double q, double u, double th) {
    // v = -log{ [(1/q - 1) e^{-th u} + e^{-th}] / [(1/q - 1) e^{-th u} + 1] } / th
    const double lr = std::log1p(-q) - std::log(q) - th * u;
    return -(log_add_exp(lr, -th) - log_add_exp(lr, 0.0)) / th;
}

// ---- Clayton, base (unrotated) copula -----------------------------------

// log(u^-th + v^-th - 1)
inline double clayton_log_s(double lu, double lv, double th) {
    const double a = -th * lu;
    const double b = -th * lv;
    const double m = std::max(a, b);
    if (m < 1.0) return std::log1p(std::expm1(a) + std::expm1(b));
    return m + std::log(std::exp(a - m) + std::exp(b - m) - std::exp(-m));
}

inline double clayton_cdf_base(double u, double v, double th) {
    if (u == 0.0 || v == 0.0) return 0.0;
    return std::exp(-clayton_log_s(std::log(u), std::log(v), th) / th);
}

inline double clayton_log_density_base(double u, double v, double th) {
    const double lu = std::log(u);
    const double lv = std::log(v);
    return std::log1p(th) - (th + 1.0) * (lu + lv) - (2.0 + 1.0 / th) * clayton_log_s(lu, lv, th);
}

inline double clayton_cond_base(double v, double u, double th) {
    if (v == 0.0) return 0.0;
    const double lu = std::log(u);
    return std::exp(-(th + 1.0) * lu - (1.0 + 1.0 / th) * clayton_log_s(lu, std::log(v), th));
}

inline double clayton_inv_cond_base(double q, double u, double th) {
    const double lx = std::log(std::expm1(-th / (1.0 + th) * std::log(q))) - th * std::log(u);
    const double l1 = lx < 30.0 ? std::log1p(std::exp(lx)) : lx + std::log1p(std::exp(-lx));
    return std::exp(-l1 / th);
}

inline void check_finite(double value, const CopulaSpec& spec, double a, double b, const char* op) {
    if (!std::isfinite(value)) {
        std::ostringstream os;
        os << op << ": non-finite result for " << copula_label(spec) << " theta=" << spec.theta
           << " at (" << a << ", " << b << ")";
        throw NumericOverflowError(os.str());
    }
}

}  // namespace detail

/// Copula CDF C(u1, u2; theta); satisfies the Frechet bounds and uniform margins.
inline double copula_cdf(double u1, double u2, const CopulaSpec& spec) {
    validate(spec);
    detail::require_unit(u1, "copula_cdf");
    detail::require_unit(u2, "copula_cdf");
    if (u1 == 0.0 || u2 == 0.0) return 0.0;
    if (u1 == 1.0) return u2;
    if (u2 == 1.0) return u1;
    if (is_independence(spec)) return u1 * u2;
    double c = 0.0;
    switch (spec.family) {
        case Family::bvn: c = detail::bvn_cdf_u(u1, u2, spec.theta); break;
        case Family::frank:
            c = spec.theta > 0.0 ? detail::frank_cdf_pos(u1, u2, spec.theta)
                                 : u1 - detail::frank_cdf_pos(u1, 1.0 - u2, -spec.theta);
            break;
        case Family::clayton: {
            const double th = spec.theta;
            switch (spec.rotation) {
                case 0: c = detail::clayton_cdf_base(u1, u2, th); break;
                case 90: c = u2 - detail::clayton_cdf_base(1.0 - u1, u2, th); break;
                case 180: c = u1 + u2 - 1.0 + detail::clayton_cdf_base(1.0 - u1, 1.0 - u2, th); break;
                case 270: c = u1 - detail::clayton_cdf_base(u1, 1.0 - u2, th); break;
            }
            break;
        }
    }
    detail::check_finite(c, spec, u1, u2, "copula_cdf");
    return std::clamp(c, std::max(u1 + u2 - 1.0, 0.0), std::min(u1, u2));
}

/// log c(u1, u2; theta) on the open unit square.
inline double copula_log_density(double u1, double u2, const CopulaSpec& spec) {
    validate(spec);
    detail::require_open_unit(u1, "copula_density");
    detail::require_open_unit(u2, "copula_density");
    if (is_independence(spec)) return 0.0;
    double lc = 0.0;
    switch (spec.family) {
        case Family::bvn: lc = detail::bvn_log_density(u1, u2, spec.theta); break;
        case Family::frank:
            lc = spec.theta > 0.0 ? detail::frank_log_density_pos(u1, u2, spec.theta)
                                  : detail::frank_log_density_pos(u1, 1.0 - u2, -spec.theta);
            break;
        case Family::clayton: {
            const double a = (spec.rotation == 90 || spec.rotation == 180) ? 1.0 - u1 : u1;
            const double b = (spec.rotation == 180 || spec.rotation == 270) ? 1.0 - u2 : u2;
            lc = detail::clayton_log_density_base(a, b, spec.theta);
            break;
        }
    }
    if (std::isnan(lc)) detail::check_finite(lc, spec, u1, u2, "copula_density");
    return lc;
}

inline double copula_density(double u1, double u2, const CopulaSpec& spec) {
    return std::exp(copula_log_density(u1, u2, spec));
}

/// C(v | u) = dC(u, v)/du.
inline double cond_cdf(double v, double u, const CopulaSpec& spec) {
    validate(spec);
    detail::require_unit(v, "cond_cdf");
    detail::require_open_unit(u, "cond_cdf");
    if (v == 0.0) return 0.0;
    if (v == 1.0) return 1.0;
    if (is_independence(spec)) return v;
    double c = 0.0;
    switch (spec.family) {
        case Family::bvn: c = detail::bvn_cond(v, u, spec.theta); break;
        case Family::frank:
            c = spec.theta > 0.0 ? detail::frank_cond_pos(v, u, spec.theta)
                                 : 1.0 - detail::frank_cond_pos(1.0 - v, u, -spec.theta);
            break;
        case Family::clayton: {
            const double th = spec.theta;
            switch (spec.rotation) {
                case 0: c = detail::clayton_cond_base(v, u, th); break;
                case 90: c = detail::clayton_cond_base(v, 1.0 - u, th); break;
                case 180: c = 1.0 - detail::clayton_cond_base(1.0 - v, 1.0 - u, th); break;
                case 270: c = 1.0 - detail::clayton_cond_base(1.0 - v, u, th); break;
            }
            break;
        }
    }
    detail::check_finite(c, spec, v, u, "cond_cdf");
    return std::clamp(c, 0.0, 1.0);
}

/// Inverse of v -> C(v | u): the v with C(v | u) = q.
inline double inv_cond_cdf(double q, double u, const CopulaSpec& spec) {
    validate(spec);
    detail::require_open_unit(q, "inv_cond_cdf");
    detail::require_open_unit(u, "inv_cond_cdf");
    if (is_independence(spec)) return q;
    double v = 0.0;
    switch (spec.family) {
        case Family::bvn: v = detail::bvn_inv_cond(q, u, spec.theta); break;
        case Family::frank:
            v = spec.theta > 0.0 ? detail::frank_inv_cond_pos(q, u, spec.theta)
                                 : 1.0 - detail::frank_inv_cond_pos(1.0 - q, u, -spec.theta);
            break;
        case Family::clayton: {
            const double th = spec.theta;
            switch (spec.rotation) {
                case 0: v = detail::clayton_inv_cond_base(q, u, th); break;
                case 90: v = detail::clayton_inv_cond_base(q, 1.0 - u, th); break;
                case 180: v = 1.0 - detail::clayton_inv_cond_base(1.0 - q, 1.0 - u, th); break;
                case 270: v = 1.0 - detail::clayton_inv_cond_base(1.0 - q, u, th); break;
            }
            break;
        }
    }
    detail::check_finite(v, spec, q, u, "inv_cond_cdf");
    return v;
}

namespace detail {

// Debye function D1(x) = x^-1 int_0^x t/(e^t - 1) dt for x > 0.
inline double debye1(double x) {
    if (x < 2.0) {
        static const QuadRule rule = gauss_legendre(40);
        return integrate(rule, 0.0, x, [](double t) { return t == 0.0 ? 1.0 : t / std::expm1(t); }) / x;
    }
    // int_x^inf t/(e^t - 1) dt = sum_k e^{-kx} (x/k + 1/k^2)
    double tail = 0.0;
    for (int k = 1; k <= 60; ++k) {
        const double term = std::exp(-k * x) * (x / k + 1.0 / (double(k) * k));
        tail += term;
        if (term < 1e-18 * tail) break;
    }
    return (std::numbers::pi * std::numbers::pi / 6.0 - tail) / x;
}

inline double frank_tau(double th) {
    if (std::abs(th) < kFrankTauSeries) return th / 9.0 - th * th * th / 900.0;
    const double a = std::abs(th);
    const double t = 1.0 - 4.0 / a * (1.0 - debye1(a));
    return th > 0.0 ? t : -t;
}

}  // namespace detail

/// Kendall's tau implied by the copula parameter.
inline Tau theta_to_tau(const CopulaSpec& spec) {
    validate(spec);
    switch (spec.family) {
        case Family::bvn: return {2.0 / std::numbers::pi * std::asin(spec.theta)};
        case Family::frank: return {detail::frank_tau(spec.theta)};
        case Family::clayton: {
            const double t = spec.theta / (spec.theta + 2.0);
            return {negative_rotation(spec) ? -t : t};
        }
    }
    return {};
}

/// Copula parameter for a family/rotation matching Kendall's tau.
inline CopulaSpec tau_to_theta(Family family, int rotation, Tau tau) {
    const double t = tau.value;
    if (!(t >= -1.0 && t <= 1.0)) throw DomainError("tau_to_theta: |tau| must not exceed 1");
    CopulaSpec spec{family, rotation, 0.0};
    switch (family) {
        case Family::bvn:
            if (rotation != 0) throw DomainError("tau_to_theta: rotation only applies to Clayton");
            spec.theta = std::sin(std::numbers::pi * t / 2.0);
            break;
        case Family::frank: {
            if (rotation != 0) throw DomainError("tau_to_theta: rotation only applies to Clayton");
            if (t == 0.0) break;  // independence limit
            const double lo_tau = detail::frank_tau(-kFrankBracket);
            const double hi_tau = detail::frank_tau(kFrankBracket);
            if (t <= lo_tau || t >= hi_tau) {
                throw DomainError("tau_to_theta: Frank tau outside the supported range |tau| < " +
                                  std::to_string(hi_tau));
            }
            if (std::abs(t) < kFrankTauSeries / 9.0) {
                spec.theta = 9.0 * t;
                break;
            }
            auto f = [t](double th) { return detail::frank_tau(th) - t; };
            boost::math::tools::eps_tolerance<double> tol(40);
            std::uintmax_t iters = 200;
            const auto [a, b] = boost::math::tools::toms748_solve(f, -kFrankBracket, kFrankBracket,
                                                                  lo_tau - t, hi_tau - t, tol, iters);
            spec.theta = 0.5 * (a + b);
            break;
        }
        case Family::clayton: {
            const bool neg = rotation == 90 || rotation == 270;
            if (rotation != 0 && rotation != 90 && rotation != 180 && rotation != 270) {
                throw DomainError("tau_to_theta: rotation must be 0, 90, 180 or 270");
            }
            if ((neg && t > 0.0) || (!neg && t < 0.0)) {
                throw DomainError("tau_to_theta: sign of tau incompatible with Clayton rotation " +
                                  std::to_string(rotation));
            }
            const double a = std::abs(t);
            if (a >= 1.0) throw DomainError("tau_to_theta: Clayton cannot attain |tau| = 1");
            spec.theta = 2.0 * a / (1.0 - a);
            if (spec.theta > kClaytonMax) throw DomainError("tau_to_theta: Clayton parameter above 1e4 guard");
            break;
        }
    }
    return spec;
}

}  // namespace copmeta
