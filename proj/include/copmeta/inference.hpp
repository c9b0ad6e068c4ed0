#pragma once

// SROC output: quantile-regression curves, the GLMM mean line, the summary
// point with a Wald confidence ellipse, predictive density contours, and
// Vuong's test for non-nested model comparison.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "copmeta/copulas.hpp"
#include "copmeta/error.hpp"
#include "copmeta/estimation.hpp"
#include "copmeta/likelihood.hpp"
#include "copmeta/margins.hpp"

namespace copmeta {

/// A point in ROC space: (1 - specificity, sensitivity).
struct RocPoint {
    double fpr;
    double sens;

    friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

using Loop = std::vector<RocPoint>;

enum class CurveDirection { x1_on_x2, x2_on_x1 };

struct QuantileCurve {
    double q = 0.5;
    CurveDirection direction = CurveDirection::x1_on_x2;
    std::vector<RocPoint> points;  // in grid order of the conditioning variable
    bool boundary = false;         // countermonotonic: the curve does not depend on q
};

inline constexpr std::size_t kDefaultGridSize = 200;

/// n equally spaced values on [lo, hi].
inline std::vector<double> linear_grid(std::size_t n = kDefaultGridSize, double lo = 0.005, double hi = 0.995) {
    if (n < 2) throw DomainError("linear_grid: need at least two points");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

inline const std::vector<double>& default_quantiles() {
    static const std::vector<double> q{0.01, 0.5, 0.99};
    return q;
}

inline const std::vector<double>& default_levels() {
    static const std::vector<double> l{0.5, 0.95};
    return l;
}

namespace detail {

inline void require_copula_model(const ModelSpec& m, const char* op) {
    if (m.variant == Variant::sarmanov) throw DomainError(std::string(op) + ": not defined for the Sarmanov model");
}

}  // namespace detail

/// q-th conditional quantile curve. For x1_on_x2 the grid holds specificities x2 and
/// u1 = C^{-1}(q | u2); for x2_on_x1 the grid holds sensitivities x1 and u2 = C^{-1}(q | u1).
inline QuantileCurve quantile_curve(const ModelSpec& model, double q, const std::vector<double>& grid,
                                    CurveDirection direction = CurveDirection::x1_on_x2) {
    detail::require_copula_model(model, "quantile_curve");
    if (!(q > 0.0 && q < 1.0)) throw DomainError("quantile_curve: q must lie in (0, 1)");
    validate(model.margin1);
    validate(model.margin2);
    QuantileCurve c;
    c.q = q;
    c.direction = direction;
    c.boundary = model.variant == Variant::countermonotonic;
    c.points.reserve(grid.size());
    for (double x : grid) {
        if (!(x > 0.0 && x < 1.0)) throw DomainError("quantile_curve: grid values must lie in (0, 1)");
        if (direction == CurveDirection::x1_on_x2) {
            const double u2 = margin_cdf(x, model.margin2);
            const double u1 = c.boundary ? 1.0 - u2 : inv_cond_cdf(q, u2, transposed(model.copula));
            c.points.push_back({1.0 - x, latent_probability(u1, model.margin1)});
        } else {
            const double u1 = margin_cdf(x, model.margin1);
            const double u2 = c.boundary ? 1.0 - u1 : inv_cond_cdf(q, u1, model.copula);
            c.points.push_back({1.0 - latent_probability(u2, model.margin2), x});
        }
    }
    return c;
}

inline QuantileCurve quantile_curve(const FitResult& fit, double q, const std::vector<double>& grid,
                                    CurveDirection direction = CurveDirection::x1_on_x2) {
    return quantile_curve(fit.model, q, grid, direction);
}

/// Conditional-mean line of the GLMM on the logit scale, mapped back to ROC space.
inline std::vector<RocPoint> glmm_sroc(double pi1, double pi2, double sigma1, double sigma2, double rho,
                                       const std::vector<double>& grid) {
    if (!(sigma2 > 0.0)) throw DomainError("glmm_sroc: sigma2 must be positive");
    if (!(pi1 > 0.0 && pi1 < 1.0 && pi2 > 0.0 && pi2 < 1.0)) throw DomainError("glmm_sroc: pi outside (0, 1)");
    if (!(rho >= -1.0 && rho <= 1.0)) throw DomainError("glmm_sroc: rho outside [-1, 1]");
    const double slope = rho * sigma1 / sigma2;
    const double intercept = logit(pi1) - slope * logit(pi2);
    std::vector<RocPoint> out;
    out.reserve(grid.size());
    for (double x2 : grid) {
        if (!(x2 > 0.0 && x2 < 1.0)) throw DomainError("glmm_sroc: grid values must lie in (0, 1)");
        out.push_back({1.0 - x2, inv_logit(intercept + slope * logit(x2))});
    }
    return out;
}

inline std::vector<RocPoint> glmm_sroc(const ModelSpec& model, const std::vector<double>& grid) {
    if (model.copula.family != Family::bvn || model.margin1.kind != MarginKind::normal_logit ||
        model.margin2.kind != MarginKind::normal_logit) {
        throw DomainError("glmm_sroc: requires a BVN copula with normal margins");
    }
    const double rho = model.variant == Variant::countermonotonic ? -1.0 : model.copula.theta;
    return glmm_sroc(model.margin1.pi, model.margin2.pi, model.margin1.scale, model.margin2.scale, rho, grid);
}

/// Log density of the latent pair (x1, x2) = (sensitivity, specificity).
inline double joint_log_density(double x1, double x2, const ModelSpec& model) {
    if (model.variant == Variant::countermonotonic) {
        throw DomainError("joint_log_density: the countermonotonic model has no density");
    }
    const double l1 = margin_log_density(x1, model.margin1);
    const double l2 = margin_log_density(x2, model.margin2);
    if (model.variant == Variant::sarmanov) {
        const double k = 1.0 + model.copula.theta * (x1 - model.margin1.pi) * (x2 - model.margin2.pi);
        return k > 0.0 ? l1 + l2 + std::log(k) : -kInf;
    }
    const double u1 = margin_cdf(x1, model.margin1);
    const double u2 = margin_cdf(x2, model.margin2);
    if (!(u1 > 0.0 && u1 < 1.0 && u2 > 0.0 && u2 < 1.0)) return -kInf;
    return copula_log_density(u1, u2, model.copula) + l1 + l2;
}

/// Density on the cell centres of a resolution x resolution grid over (0, 1)^2.
/// values[i * res + j] holds x1 = centre i, x2 = centre j.
struct DensityGrid {
    std::size_t resolution = 0;
    std::vector<double> centres;
    std::vector<double> values;

    double at(std::size_t i, std::size_t j) const { return values[i * resolution + j]; }
    double cell_area() const { return 1.0 / static_cast<double>(resolution * resolution); }
};

inline DensityGrid density_grid(const ModelSpec& model, std::size_t resolution = 400) {
    if (resolution < 4) throw DomainError("density_grid: resolution must be at least 4");
    DensityGrid g;
    g.resolution = resolution;
    g.centres.resize(resolution);
    for (std::size_t i = 0; i < resolution; ++i) g.centres[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(resolution);
    g.values.resize(resolution * resolution);
    for (std::size_t i = 0; i < resolution; ++i) {
        for (std::size_t j = 0; j < resolution; ++j) {
            double v;
            try {
                v = std::exp(joint_log_density(g.centres[i], g.centres[j], model));
            } catch (const NumericOverflowError&) {
                v = 0.0;
            }
            g.values[i * resolution + j] = std::isfinite(v) ? v : 0.0;
        }
    }
    return g;
}

struct Contour {
    double level = 0.0;      // requested probability mass
    double threshold = 0.0;  // density value on the contour
    double mass = 0.0;       // grid mass with density >= threshold (normalised)
    std::vector<Loop> loops; // closed: first point equals last point
};

namespace detail {

inline double mass_above(const DensityGrid& g, double t, double total) {
    double s = 0.0;
    for (double v : g.values) {
        if (v >= t) s += v;
    }
    return s / total;
}

// Marching squares on the grid padded with a zero border, so every loop closes.
inline std::vector<Loop> trace_loops(const DensityGrid& g, double t) {
    const std::size_t r = g.resolution;
    const std::size_t m = r + 2;
    auto coord = [&](std::size_t k) {
        if (k == 0) return 0.0;
        if (k == m - 1) return 1.0;
        return g.centres[k - 1];
    };
    auto value = [&](std::size_t i, std::size_t j) {
        if (i == 0 || j == 0 || i == m - 1 || j == m - 1) return 0.0;
        return g.at(i - 1, j - 1);
    };
    auto inside = [&](std::size_t i, std::size_t j) { return value(i, j) >= t; };
    // Edge ids: horizontal (i,j)-(i+1,j) -> 2*(j*m+i); vertical (i,j)-(i,j+1) -> 2*(j*m+i)+1.
    auto hid = [&](std::size_t i, std::size_t j) { return 2 * (j * m + i); };
    auto vid = [&](std::size_t i, std::size_t j) { return 2 * (j * m + i) + 1; };
    auto crossing = [&](std::size_t id) {
        const std::size_t base = id / 2;
        const std::size_t i = base % m;
        const std::size_t j = base / m;
        const bool horizontal = id % 2 == 0;
        const std::size_t i2 = horizontal ? i + 1 : i;
        const std::size_t j2 = horizontal ? j : j + 1;
        const double v1 = value(i, j);
        const double v2 = value(i2, j2);
        const double f = std::clamp((t - v1) / (v2 - v1), 0.0, 1.0);
        const double x1 = coord(i) + f * (coord(i2) - coord(i));
        const double x2 = coord(j) + f * (coord(j2) - coord(j));
        return RocPoint{1.0 - x2, x1};
    };

    std::vector<std::array<std::size_t, 2>> segs;
    for (std::size_t j = 0; j + 1 < m; ++j) {
        for (std::size_t i = 0; i + 1 < m; ++i) {
            const bool a = inside(i, j), b = inside(i + 1, j), c = inside(i + 1, j + 1), d = inside(i, j + 1);
            const std::size_t bottom = hid(i, j), right = vid(i + 1, j), top = hid(i, j + 1), left = vid(i, j);
            std::vector<std::size_t> cut;
            if (a != b) cut.push_back(bottom);
            if (b != c) cut.push_back(right);
            if (c != d) cut.push_back(top);
            if (d != a) cut.push_back(left);
            if (cut.size() == 2) {
                segs.push_back({cut[0], cut[1]});
            } else if (cut.size() == 4) {
                const double centre = 0.25 * (value(i, j) + value(i + 1, j) + value(i + 1, j + 1) + value(i, j + 1));
                if ((centre >= t) == a) {
                    segs.push_back({bottom, right});
                    segs.push_back({top, left});
                } else {
                    segs.push_back({left, bottom});
                    segs.push_back({right, top});
                }
            }
        }
    }
    std::map<std::size_t, std::vector<std::size_t>> by_edge;
    for (std::size_t s = 0; s < segs.size(); ++s) {
        by_edge[segs[s][0]].push_back(s);
        by_edge[segs[s][1]].push_back(s);
    }
    std::vector<bool> used(segs.size(), false);
    std::vector<Loop> loops;
    for (std::size_t s0 = 0; s0 < segs.size(); ++s0) {
        if (used[s0]) continue;
        used[s0] = true;
        Loop loop;
        const std::size_t start = segs[s0][0];
        loop.push_back(crossing(start));
        std::size_t edge = segs[s0][1];
        while (edge != start) {
            loop.push_back(crossing(edge));
            std::size_t next = segs.size();
            for (std::size_t cand : by_edge[edge]) {
                if (!used[cand]) {
                    next = cand;
                    break;
                }
            }
            if (next == segs.size()) break;
            used[next] = true;
            edge = segs[next][0] == edge ? segs[next][1] : segs[next][0];
        }
        loop.push_back(loop.front());
        loops.push_back(std::move(loop));
    }
    return loops;
}

}  // namespace detail

/// Highest-density contours enclosing the requested probability masses.
inline std::vector<Contour> predictive_contours(const ModelSpec& model, const std::vector<double>& levels,
                                                std::size_t resolution = 400) {
    if (model.variant == Variant::countermonotonic) {
        throw DomainError("predictive_contours: boundary (countermonotonic) fit has no density; use quantile_curve");
    }
    for (double p : levels) {
        if (!(p > 0.0 && p < 1.0)) throw DomainError("predictive_contours: levels must lie in (0, 1)");
    }
    const DensityGrid g = density_grid(model, resolution);
    double total = 0.0;
    double vmax = 0.0;
    for (double v : g.values) {
        total += v;
        vmax = std::max(vmax, v);
    }
    if (!(total > 0.0)) throw DomainError("predictive_contours: density vanishes on the grid");
    std::vector<Contour> out;
    for (double p : levels) {
        double lo = 0.0;  // mass_above(lo) >= p
        double hi = vmax; // mass_above(hi) < p, up to ties at the maximum
        for (int it = 0; it < 200 && hi - lo > 1e-14 * vmax; ++it) {
            const double mid = 0.5 * (lo + hi);
            (detail::mass_above(g, mid, total) >= p ? lo : hi) = mid;
        }
        Contour c;
        c.level = p;
        c.threshold = lo;
        c.mass = detail::mass_above(g, lo, total);
        c.loops = detail::trace_loops(g, lo);
        out.push_back(std::move(c));
    }
    return out;
}

inline std::vector<Contour> predictive_contours(const FitResult& fit, const std::vector<double>& levels,
                                                std::size_t resolution = 400) {
    if (fit.boundary) {
        throw DomainError("predictive_contours: boundary (countermonotonic) fit has no density; use quantile_curve");
    }
    return predictive_contours(fit.model, levels, resolution);
}

/// Covariance of (x1, x2) under the normalised grid density.
inline Eigen::Matrix2d grid_covariance(const DensityGrid& g) {
    double s = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < g.resolution; ++i) {
        for (std::size_t j = 0; j < g.resolution; ++j) {
            const double v = g.at(i, j);
            s += v;
            m1 += v * g.centres[i];
            m2 += v * g.centres[j];
        }
    }
    m1 /= s;
    m2 /= s;
    Eigen::Matrix2d c = Eigen::Matrix2d::Zero();
    for (std::size_t i = 0; i < g.resolution; ++i) {
        for (std::size_t j = 0; j < g.resolution; ++j) {
            const double v = g.at(i, j) / s;
            const double d1 = g.centres[i] - m1;
            const double d2 = g.centres[j] - m2;
            c(0, 0) += v * d1 * d1;
            c(0, 1) += v * d1 * d2;
            c(1, 1) += v * d2 * d2;
        }
    }
    c(1, 0) = c(0, 1);
    return c;
}

struct SummaryRegion {
    double sensitivity = kNaN;
    double specificity = kNaN;
    RocPoint point{kNaN, kNaN};
    Loop region;  // closed; empty when standard errors are unavailable
    bool region_available = false;
    std::string message;
};

/// Wald ellipse from a 2 x 2 covariance of (pi1, pi2) at the chi-square(2) quantile of the coverage.
inline SummaryRegion summary_point_region(double pi1, double pi2, const Eigen::Matrix2d& cov, double coverage,
                                          std::size_t points = 100) {
    if (!(coverage >= 0.0 && coverage < 1.0)) throw DomainError("summary_point_region: coverage outside [0, 1)");
    if (points < 3) throw DomainError("summary_point_region: need at least three points");
    SummaryRegion r;
    r.sensitivity = pi1;
    r.specificity = pi2;
    r.point = {1.0 - pi2, pi1};
    Eigen::LLT<Eigen::Matrix2d> llt(cov);
    if (!cov.allFinite() || llt.info() != Eigen::Success) {
        r.message = "covariance not positive definite; confidence region omitted";
        return r;
    }
    const Eigen::Matrix2d l = llt.matrixL();
    const double radius = std::sqrt(-2.0 * std::log1p(-coverage));
    for (std::size_t k = 0; k < points; ++k) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(points);
        const Eigen::Vector2d d = l * Eigen::Vector2d(std::cos(a), std::sin(a)) * radius;
        const double s1 = std::clamp(pi1 + d[0], 0.0, 1.0);
        const double s2 = std::clamp(pi2 + d[1], 0.0, 1.0);
        r.region.push_back({1.0 - s2, s1});
    }
    r.region.push_back(r.region.front());
    r.region_available = true;
    return r;
}

inline SummaryRegion summary_point_region(const FitResult& fit, double coverage, std::size_t points = 100) {
    const double pi1 = fit.estimates[0];
    const double pi2 = fit.estimates[1];
    if (!fit.se_available || fit.covariance.rows() < 2) {
        SummaryRegion r;
        r.sensitivity = pi1;
        r.specificity = pi2;
        r.point = {1.0 - pi2, pi1};
        r.message = "standard errors unavailable; confidence region omitted";
        return r;
    }
    const Eigen::Matrix2d cov = fit.covariance.topLeftCorner(2, 2);
    return summary_point_region(pi1, pi2, cov, coverage, points);
}

struct VuongResult {
    double statistic = 0.0;  // positive favours model 2
    double p_value = 1.0;    // two-sided
    double dbar = 0.0;
    double s = 0.0;
    std::size_t n = 0;
};

/// Vuong's test on per-study log-likelihood differences D_i = l2_i - l1_i.
inline VuongResult vuong_test(const LogLikResult& ll1, const LogLikResult& ll2) {
    const std::size_t n = ll1.per_study.size();
    if (n != ll2.per_study.size()) throw DomainError("vuong_test: models were evaluated on different study lists");
    if (n < 2) throw DomainError("vuong_test: need at least two studies");
    std::vector<double> d(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = ll2.per_study[i] - ll1.per_study[i];
        sum += d[i];
    }
    VuongResult r;
    r.n = n;
    r.dbar = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double x : d) ss += (x - r.dbar) * (x - r.dbar);
    r.s = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(r.s > 0.0)) throw DegenerateComparisonError("vuong_test: identical per-study contributions (s = 0)");
    r.statistic = std::sqrt(static_cast<double>(n)) * r.dbar / r.s;
    r.p_value = std::erfc(std::abs(r.statistic) / std::numbers::sqrt2);
    return r;
}

}  // namespace copmeta
