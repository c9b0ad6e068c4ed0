#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "copmeta/inference.hpp"
#include "copmeta/simulation.hpp"

using namespace copmeta;
using Catch::Matchers::WithinAbs;

namespace {

bool inside(const Loop& loop, RocPoint p) {
    bool in = false;
    for (std::size_t i = 0, j = loop.size() - 1; i < loop.size(); j = i++) {
        const RocPoint a = loop[i], b = loop[j];
        if ((a.sens > p.sens) != (b.sens > p.sens) &&
            p.fpr < (b.fpr - a.fpr) * (p.sens - a.sens) / (b.sens - a.sens) + a.fpr)
            in = !in;
    }
    return in;
}

ModelSpec glmm_model(double rho) {
    return {MarginSpec::normal(0.7, 2.0), MarginSpec::normal(0.9, 1.0), CopulaSpec::bvn(rho)};
}

}  // namespace

TEST_CASE("independence gives a flat median curve") {
    const ModelSpec m{MarginSpec::beta(0.7, 0.2), MarginSpec::beta(0.9, 0.1), CopulaSpec::bvn(0.0)};
    const auto grid = linear_grid();
    const QuantileCurve c = quantile_curve(m, 0.5, grid);
    const double median = latent_probability(0.5, m.margin1);
    REQUIRE(c.points.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK_THAT(c.points[i].sens, WithinAbs(median, 1e-12));
        CHECK_THAT(c.points[i].fpr, WithinAbs(1 - grid[i], 1e-15));
    }
}

TEST_CASE("countermonotonic curves do not depend on q") {
    const ModelSpec m{MarginSpec::normal(0.7, 1.0), MarginSpec::normal(0.9, 1.0), CopulaSpec::bvn(0.0),
                      Variant::countermonotonic};
    const auto grid = linear_grid(50);
    const QuantileCurve a = quantile_curve(m, 0.01, grid), b = quantile_curve(m, 0.99, grid);
    CHECK(a.boundary);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(a.points[i] == b.points[i]);
        const double u2 = margin_cdf(grid[i], m.margin2);
        CHECK_THAT(a.points[i].sens, WithinAbs(latent_probability(1 - u2, m.margin1), 1e-12));
    }
    // the interior model approaches the same curve as rho -> -1
    const QuantileCurve near = quantile_curve(glmm_model(-0.999999), 0.3, grid);
    const QuantileCurve bound = quantile_curve(
        ModelSpec{MarginSpec::normal(0.7, 2.0), MarginSpec::normal(0.9, 1.0), CopulaSpec::bvn(0), Variant::countermonotonic},
        0.3, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK_THAT(near.points[i].sens, WithinAbs(bound.points[i].sens, 1e-2));
}

TEST_CASE("GLMM line examples") {
    const auto grid = linear_grid(40);
    for (const auto& p : glmm_sroc(0.7, 0.9, 2.0, 1.0, 0.0, grid)) CHECK_THAT(p.sens, WithinAbs(0.7, 1e-15));
    const auto line = glmm_sroc(0.7, 0.9, 1.3, 1.3, -1.0, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
        CHECK_THAT(logit(line[i].sens), WithinAbs(logit(0.7) + logit(0.9) - logit(grid[i]), 1e-12));

    const std::vector<double> at{0.8};
    const double expect = inv_logit(logit(0.7) + (-0.5 * 2.0 / 1.0) * (logit(0.8) - logit(0.9)));
    CHECK_THAT(glmm_sroc(0.7, 0.9, 2.0, 1.0, -0.5, at)[0].sens, WithinAbs(expect, 1e-14));
    CHECK_THAT(quantile_curve(glmm_model(-0.5), 0.5, at).points[0].sens, WithinAbs(expect, 1e-8));
}

TEST_CASE("median quantile curve coincides with the GLMM line") {
    const auto grid = linear_grid();
    for (double rho : {-0.9, -0.5, 0.3}) {
        const auto line = glmm_sroc(glmm_model(rho), grid);
        const auto curve = quantile_curve(glmm_model(rho), 0.5, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) CHECK_THAT(curve.points[i].sens, WithinAbs(line[i].sens, 1e-8));
    }
}

TEST_CASE("property: quantile curves are ordered in q") {
    const auto grid = linear_grid(60);
    const std::vector<ModelSpec> models{
        glmm_model(-0.5),
        {MarginSpec::beta(0.7, 0.2), MarginSpec::beta(0.9, 0.1), CopulaSpec::clayton(2.0, 270)},
        {MarginSpec::beta(0.7, 0.2), MarginSpec::beta(0.9, 0.1), CopulaSpec::frank(-5.7)},
        {MarginSpec::normal(0.6, 1.0), MarginSpec::beta(0.8, 0.2), CopulaSpec::clayton(1.0, 90)}};
    for (const auto& m : models)
        for (auto dir : {CurveDirection::x1_on_x2, CurveDirection::x2_on_x1}) {
            const auto lo = quantile_curve(m, 0.01, grid, dir), mid = quantile_curve(m, 0.5, grid, dir),
                       hi = quantile_curve(m, 0.99, grid, dir);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                if (dir == CurveDirection::x1_on_x2) {
                    CHECK(lo.points[i].sens < mid.points[i].sens);
                    CHECK(mid.points[i].sens < hi.points[i].sens);
                } else {
                    // higher q gives larger specificity, i.e. smaller fpr
                    CHECK(lo.points[i].fpr > mid.points[i].fpr);
                    CHECK(mid.points[i].fpr > hi.points[i].fpr);
                }
            }
        }
}

TEST_CASE("Clayton-270 beta curves slope upward in ROC space") {
    const ModelSpec m{MarginSpec::beta(0.7, 0.2), MarginSpec::beta(0.9, 0.1),
                      tau_to_theta(Family::clayton, 270, Tau{-0.5})};
    const auto grid = linear_grid(100);
    for (double q : {0.01, 0.5, 0.99}) {
        const auto c = quantile_curve(m, q, grid);
        // fpr decreases along the grid, and sensitivity falls with it (negative x1-x2 dependence)
        for (std::size_t i = 1; i < grid.size(); ++i) CHECK(c.points[i].sens <= c.points[i - 1].sens + 1e-12);
    }
}

TEST_CASE("predictive contours are nested closed loops with the requested mass") {
    const ModelSpec m = glmm_model(std::sin(-0.25 * std::numbers::pi));
    const auto cs = predictive_contours(m, {0.5, 0.95}, 400);
    REQUIRE(cs.size() == 2);
    for (const auto& c : cs) {
        CHECK_THAT(c.mass, WithinAbs(c.level, 0.01));
        REQUIRE_FALSE(c.loops.empty());
        for (const auto& loop : c.loops) {
            REQUIRE(loop.size() > 3);
            CHECK(loop.front() == loop.back());
        }
    }
    CHECK(cs[0].threshold > cs[1].threshold);
    // every vertex of the inner contour lies inside the outer one
    std::size_t in = 0, total = 0;
    for (const auto& p : cs[0].loops[0]) {
        ++total;
        for (const auto& outer : cs[1].loops)
            if (inside(outer, p)) {
                ++in;
                break;
            }
    }
    CHECK(in == total);
}

TEST_CASE("GLMM density has negative orientation") {
    const DensityGrid g = density_grid(glmm_model(std::sin(-0.25 * std::numbers::pi)), 200);
    const Eigen::Matrix2d c = grid_covariance(g);
    CHECK(c(0, 1) < 0.0);
    CHECK(c(0, 0) > 0.0);
    CHECK(c(1, 1) > 0.0);
}

TEST_CASE("independence contours are mirror symmetric for symmetric margins") {
    const ModelSpec m{MarginSpec::beta(0.5, 0.1), MarginSpec::beta(0.5, 0.1), CopulaSpec::bvn(0.0)};
    const auto cs = predictive_contours(m, {0.5}, 200);
    REQUIRE(cs[0].loops.size() == 1);
    for (const auto& p : cs[0].loops[0]) {
        // (fpr, sens) -> (1 - fpr, sens) and (fpr, 1 - sens) stay on the contour
        const double a = std::exp(joint_log_density(p.sens, 1 - p.fpr, m));
        const double b = std::exp(joint_log_density(1 - p.sens, 1 - p.fpr, m));
        const double c = std::exp(joint_log_density(p.sens, p.fpr, m));
        CHECK_THAT(b, WithinAbs(a, 1e-9 * a));
        CHECK_THAT(c, WithinAbs(a, 1e-9 * a));
    }
}

TEST_CASE("boundary models have no contours") {
    const ModelSpec m{MarginSpec::normal(0.7, 1.0), MarginSpec::normal(0.9, 1.0), CopulaSpec::bvn(0.0),
                      Variant::countermonotonic};
    CHECK_THROWS_AS(predictive_contours(m, {0.5}), DomainError);
}

TEST_CASE("summary region from a diagonal covariance is an axis-aligned ellipse") {
    Eigen::Matrix2d cov;
    cov << 0.03 * 0.03, 0.0, 0.0, 0.02 * 0.02;
    const SummaryRegion r = summary_point_region(0.7, 0.9, cov, 0.95, 400);
    REQUIRE(r.region_available);
    CHECK(r.region.front() == r.region.back());
    const double radius = std::sqrt(-2 * std::log(0.05));  // chi-square(2) quantile, square root
    double max1 = 0, max2 = 0;
    for (const auto& p : r.region) {
        const double d1 = (p.sens - 0.7) / 0.03, d2 = ((1 - p.fpr) - 0.9) / 0.02;
        CHECK_THAT(d1 * d1 + d2 * d2, WithinAbs(radius * radius, 1e-9));
        max1 = std::max(max1, std::abs(p.sens - 0.7));
        max2 = std::max(max2, std::abs(1 - p.fpr - 0.9));
    }
    CHECK_THAT(max1, WithinAbs(radius * 0.03, 1e-12));
    CHECK_THAT(max2, WithinAbs(radius * 0.02, 1e-12));
    CHECK_THAT(r.point.fpr, WithinAbs(0.1, 1e-15));

    const SummaryRegion z = summary_point_region(0.7, 0.9, cov, 0.0, 20);
    for (const auto& p : z.region) {
        CHECK_THAT(p.sens, WithinAbs(0.7, 1e-15));
        CHECK_THAT(p.fpr, WithinAbs(0.1, 1e-15));
    }
}

TEST_CASE("Vuong test") {
    LogLikResult a, b;
    a.per_study = {-1.0, -2.0, -3.0, -1.5};
    b = a;
    CHECK_THROWS_AS(vuong_test(a, b), DegenerateComparisonError);

    b.per_study = {-0.5, -2.5, -2.5, -2.0};  // D = (+c, -c, +c, -c)
    const VuongResult v = vuong_test(a, b);
    CHECK_THAT(v.statistic, WithinAbs(0.0, 1e-15));
    CHECK_THAT(v.p_value, WithinAbs(1.0, 1e-15));

    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd(-3.0, 1.0);
    LogLikResult c, d;
    for (int i = 0; i < 30; ++i) {
        c.per_study.push_back(nd(rng));
        d.per_study.push_back(nd(rng) + 0.3);
    }
    const VuongResult x = vuong_test(c, d), y = vuong_test(d, c);
    CHECK_THAT(x.statistic, WithinAbs(-y.statistic, 1e-14));
    CHECK_THAT(x.p_value, WithinAbs(y.p_value, 1e-15));
    // direct recomputation
    double m = 0, s = 0;
    for (int i = 0; i < 30; ++i) m += d.per_study[i] - c.per_study[i];
    m /= 30;
    for (int i = 0; i < 30; ++i) s += std::pow(d.per_study[i] - c.per_study[i] - m, 2);
    s = std::sqrt(s / 29);
    CHECK_THAT(x.statistic, WithinAbs(std::sqrt(30.0) * m / s, 1e-12));
    CHECK_THAT(x.p_value, WithinAbs(2 * (1 - normal_cdf(std::abs(x.statistic))), 1e-12));

    d.per_study.pop_back();
    CHECK_THROWS_AS(vuong_test(c, d), DomainError);
}

TEST_CASE("summary region from a fit covers the truth at about the nominal rate") {
    const ModelSpec truth{MarginSpec::normal(0.8, 0.8), MarginSpec::normal(0.7, 0.6), CopulaSpec::bvn(-0.4)};
    const ModelSpec tmpl{MarginSpec::normal(0.5, 1.0), MarginSpec::normal(0.5, 1.0), CopulaSpec::bvn(0.0)};
    FitOptions opts;
    opts.boundary_refit = false;
    int covered = 0, used = 0;
    for (int rep = 0; rep < 100; ++rep) {
        auto rng = replication_rng(99, rep);
        const auto data = generate_meta_dataset(200, truth, rng);
        const FitResult f = fit(data, tmpl, opts);
        if (!f.se_available) continue;
        ++used;
        const Eigen::Matrix2d cov = f.covariance.topLeftCorner(2, 2);
        const Eigen::Vector2d d(0.8 - f.estimates[0], 0.7 - f.estimates[1]);
        if (d.dot(cov.inverse() * d) <= -2 * std::log(0.05)) ++covered;
    }
    REQUIRE(used >= 90);
    const double rate = double(covered) / used;
    INFO("coverage " << rate);
    CHECK(rate > 0.87);
    CHECK(rate < 1.0);
}
