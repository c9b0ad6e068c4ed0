#include <catch_amalgamated.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "copmeta/special.hpp"

using namespace copmeta;
using Catch::Matchers::WithinAbs;

namespace {

// P(X <= x, Y <= y) = int_{-inf}^{x} phi(s) Phi((y - rho s) / sqrt(1 - rho^2)) ds
double bvn_by_integral(double x, double y, double rho) {
    const double c = std::sqrt(1.0 - rho * rho);
    auto f = [&](double s) { return normal_pdf(s) * normal_cdf((y - rho * s) / c); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -40.0, x, 15, 1e-14);
}

}  // namespace

TEST_CASE("bivariate normal CDF against one-dimensional integration") {
    const double pts[] = {-2.5, -1.0, -0.3, 0.0, 0.4, 1.2, 2.8};
    const double rhos[] = {-0.99, -0.9, -0.6, -0.2, 0.1, 0.5, 0.8, 0.95, 0.999};
    for (double r : rhos)
        for (double x : pts)
            for (double y : pts) {
                INFO("x=" << x << " y=" << y << " rho=" << r);
                CHECK_THAT(bvn_cdf(x, y, r), WithinAbs(bvn_by_integral(x, y, r), 1e-12));
            }
}

TEST_CASE("bivariate normal CDF limits") {
    CHECK_THAT(bvn_cdf(0.0, 0.0, 0.0), WithinAbs(0.25, 1e-15));
    CHECK_THAT(bvn_cdf(0.7, 0.7, 1.0), WithinAbs(normal_cdf(0.7), 1e-14));
    CHECK_THAT(bvn_cdf(0.7, 0.2, 1.0), WithinAbs(normal_cdf(0.2), 1e-14));
    CHECK_THAT(bvn_cdf(0.7, 0.2, -1.0), WithinAbs(normal_cdf(0.7) + normal_cdf(0.2) - 1.0, 1e-14));
    CHECK_THAT(bvn_cdf(-0.7, -0.2, -1.0), WithinAbs(0.0, 1e-14));
    CHECK(bvn_cdf(-kInf, 0.3, 0.4) == 0.0);
    CHECK_THAT(bvn_cdf(kInf, 0.3, 0.4), WithinAbs(normal_cdf(0.3), 1e-15));
}

TEST_CASE("logit helpers") {
    for (double p : {1e-12, 0.01, 0.3, 0.5, 0.77, 0.999999})
        CHECK_THAT(inv_logit(logit(p)), WithinAbs(p, 1e-15 + 1e-12 * p));
    CHECK_THAT(log_add_exp(std::log(2.0), std::log(3.0)), WithinAbs(std::log(5.0), 1e-15));
    CHECK(log_add_exp(-kInf, -kInf) == -kInf);
    CHECK_THAT(std::exp(log_choose(10, 3)), WithinAbs(120.0, 1e-10));
}

TEST_CASE("normal quantile inverts the normal CDF") {
    for (double p : {1e-10, 0.001, 0.2, 0.5, 0.8, 0.999})
        CHECK_THAT(normal_cdf(normal_quantile(p)), WithinAbs(p, 1e-14 + 1e-12 * p));
}
