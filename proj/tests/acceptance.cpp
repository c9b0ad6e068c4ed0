// Acceptance checks. One PASS/FAIL line per criterion; exit status is nonzero when a
// criterion fails that is not listed as a known deviation.
// Usage: acceptance [id ...]   (ids such as 1a, 3, 5; default runs everything)

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "copmeta/copmeta.hpp"

using namespace copmeta;

namespace {

struct Check {
    std::string id;
    std::string title;
    std::function<bool(std::ostringstream&)> body;
};

// Criteria expected to fail; each one has a written analysis in the project notes.
const std::set<std::string> kKnownDeviations{"1c", "4", "5"};
// set by a check whose failure goes beyond its known deviation
bool g_unexpected = false;

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// ---- 1, 2: limiting estimators --------------------------------------------------------

struct LimitRow {
    double rho, pi, gamma;
    double rho_khs, pi_khs, gamma_khs, tol;
};

const LimitRow kRows[] = {{-0.5, 0.7, 0.1, -0.164, 0.708, 0.095, 0.005},
                          {-0.8, 0.8, 0.2, -0.165, 0.837, 0.156, 0.01},
                          {-1.0, 0.9, 0.2, -0.032, 0.926, 0.126, 0.01}};

bool limiting_khs_row(const LimitRow& r, std::ostringstream& d) {
    const AsymptoticRow a = asymptotic_row(r.rho, r.pi, r.gamma, 20, false);
    d << "got (rho " << a.rho_khs << ", pi " << a.pi_khs << ", gamma " << a.gamma_khs << ") want (" << r.rho_khs << ", "
      << r.pi_khs << ", " << r.gamma_khs << ") +-" << r.tol;
    return a.khs.converged && near(a.rho_khs, r.rho_khs, r.tol) && near(a.pi_khs, r.pi_khs, r.tol) &&
           near(a.gamma_khs, r.gamma_khs, r.tol);
}

bool limiting_mle_rows(std::ostringstream& d) {
    bool ok = true;
    for (const LimitRow& r : kRows) {
        const ModelSpec truth{MarginSpec::beta(r.pi, r.gamma), MarginSpec::beta(r.pi, r.gamma), CopulaSpec::bvn(r.rho)};
        const OutcomeTable t = model_probabilities(20, truth, gauss_legendre(50));
        const LimitingEstimate e = limiting_mle(t);
        const double err = std::max({std::abs(e.pi - r.pi), std::abs(e.gamma - r.gamma), std::abs(e.theta - r.rho)});
        d << "(" << r.rho << "," << r.pi << "," << r.gamma << ") max error " << err << "; ";
        ok = ok && err <= 1e-3;
    }
    return ok;
}

// ---- 3: GLMM written directly on the logit scale ----------------------------------------

double lbin(int y, int n, double p) {
    return std::lgamma(n + 1.0) - std::lgamma(y + 1.0) - std::lgamma(n - y + 1.0) + y * std::log(p) +
           (n - y) * std::log1p(-p);
}

double glmm_direct(std::span<const StudyRecord> data, double pi1, double pi2, double s1, double s2, double rho,
                   const QuadRule& r) {
    const double m1 = std::log(pi1 / (1 - pi1)), m2 = std::log(pi2 / (1 - pi2));
    double total = 0.0;
    for (const auto& s : data) {
        double acc = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double z1 = normal_quantile(r.nodes[i]);
            for (std::size_t j = 0; j < r.size(); ++j) {
                const double z2 = rho * z1 + std::sqrt(1 - rho * rho) * normal_quantile(r.nodes[j]);
                acc += r.weights[i] * r.weights[j] *
                       std::exp(lbin(s.y1, s.n1, 1 / (1 + std::exp(-(m1 + s1 * z1)))) +
                                lbin(s.y2, s.n2, 1 / (1 + std::exp(-(m2 + s2 * z2)))));
            }
        }
        total += std::log(acc);
    }
    return total;
}

std::vector<StudyRecord> random_studies(std::mt19937_64& rng, int count) {
    std::uniform_int_distribution<int> nd(1, 80);
    std::vector<StudyRecord> out;
    for (int i = 0; i < count; ++i) {
        const int n1 = nd(rng), n2 = nd(rng);
        out.push_back({std::uniform_int_distribution<int>(0, n1)(rng), n1,
                       std::uniform_int_distribution<int>(0, n2)(rng), n2});
    }
    return out;
}

bool glmm_equivalence(std::ostringstream& d) {
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> pu(0.05, 0.95), su(0.1, 3.0), ru(-0.99, 0.99);
    std::uniform_int_distribution<int> nu(1, 25);
    const QuadRule r = gauss_legendre(15);
    double worst = 0.0;
    for (int draw = 0; draw < 20; ++draw) {
        const auto data = random_studies(rng, nu(rng));
        const double pi1 = pu(rng), pi2 = pu(rng), s1 = su(rng), s2 = su(rng), rho = ru(rng);
        const double a = loglik_glmm(data, pi1, pi2, s1, s2, rho, r).total;
        worst = std::max(worst, std::abs(a - glmm_direct(data, pi1, pi2, s1, s2, rho, r)));
    }
    d << "max |delta| over 20 draws = " << worst;
    return worst <= 1e-8;
}

// ---- 4: quadrature precision -------------------------------------------------------------

bool quadrature_precision(std::ostringstream& d) {
    const std::vector<CopulaSpec> cops{CopulaSpec::bvn(-0.5),        CopulaSpec::bvn(0.4),
                                       CopulaSpec::frank(-5.7),      CopulaSpec::frank(3.0),
                                       CopulaSpec::clayton(2.0, 0),  CopulaSpec::clayton(1.0, 90),
                                       CopulaSpec::clayton(0.8, 180), CopulaSpec::clayton(2.0, 270)};
    std::vector<ModelSpec> corpus;
    for (const auto& c : cops) {
        corpus.push_back({MarginSpec::normal(0.7, 1.0), MarginSpec::normal(0.9, 0.7), c});
        corpus.push_back({MarginSpec::normal(0.4, 0.5), MarginSpec::normal(0.6, 1.2), c});
        corpus.push_back({MarginSpec::beta(0.7, 0.2), MarginSpec::beta(0.9, 0.1), c});
        corpus.push_back({MarginSpec::beta(0.5, 0.05), MarginSpec::beta(0.8, 0.15), c});
        corpus.push_back({MarginSpec::beta(0.8, 0.1), MarginSpec::normal(0.7, 0.8), c});
        corpus.push_back({MarginSpec::normal(0.85, 0.6), MarginSpec::beta(0.6, 0.1), c});
    }
    corpus.push_back({MarginSpec::normal(0.7, 1.0), MarginSpec::normal(0.9, 0.7), CopulaSpec::bvn(0), Variant::countermonotonic});
    corpus.push_back({MarginSpec::beta(0.7, 0.2), MarginSpec::beta(0.9, 0.1), CopulaSpec::bvn(0), Variant::countermonotonic});
    const QuadRule q15 = gauss_legendre(15), q30 = gauss_legendre(30);
    double worst = 0.0;
    std::string where;
    std::size_t k = 0;
    for (const auto& m : corpus) {
        // each case gets its own data set drawn from the model (or its interior neighbour)
        ModelSpec gen = m;
        if (gen.variant == Variant::countermonotonic) gen.copula = CopulaSpec::bvn(-0.9), gen.variant = Variant::copula_mixed;
        auto rng = replication_rng(404, k++);
        const auto data = generate_meta_dataset(10, gen, rng, {}, 0.43, nullptr, CountDraw::binomial);
        const double diff = std::abs(loglik(data, m, q15).total - loglik(data, m, q30).total);
        if (diff > worst) {
            worst = diff;
            where = std::string(margin_label(m.margin1.kind)) + "/" + std::string(margin_label(m.margin2.kind)) + ":" +
                    copula_label(m.copula);
        }
    }
    d << corpus.size() << " cases, max |ll(15) - ll(30)| = " << worst << " (" << where << ")";
    return corpus.size() == 50 && worst <= 1e-4;
}

// ---- 5: scaled-down efficiency study ------------------------------------------------------

bool efficiency_study(std::ostringstream& d) {
    SimConfig cfg;
    cfg.n_studies = 50;
    cfg.replications = 500;
    cfg.truth = reference_truth();
    cfg.seed = 20240501;
    const ModelSpec beta_c270{MarginSpec::beta(0.5, 0.1), MarginSpec::beta(0.5, 0.1), CopulaSpec::clayton(1.0, 270)};
    ModelSpec khs = beta_c270;
    khs.variant = Variant::khs;
    const ModelSpec normal_c270{MarginSpec::normal(0.5, 1.0), MarginSpec::normal(0.5, 1.0), CopulaSpec::clayton(1.0, 270)};
    cfg.fitted = {{"ML", beta_c270}, {"KHS", khs}, {"ML", normal_c270}};
    cfg.jobs = std::max(1u, std::thread::hardware_concurrency());
    const SimReport rep = run_sim_study(cfg);
    auto row = [&](std::size_t m, SimParameter p) { return rep.rows[m * 5 + static_cast<std::size_t>(p)]; };
    const SimRow true_tau = row(0, SimParameter::tau);
    const SimRow khs_tau = row(1, SimParameter::tau);
    const SimRow normal_pi1 = row(2, SimParameter::pi1);
    const bool a = std::abs(true_tau.bias) < 0.05 && true_tau.bias < 0.0;
    const bool b = khs_tau.n_bias > 10.0;
    const bool c = normal_pi1.bias > 0.0;
    d << "(a) ML tau bias " << true_tau.bias << " [N*bias " << true_tau.n_bias << ", N*sd " << true_tau.n_sd << "] "
      << (a ? "ok" : "FAIL") << "; (b) KHS tau N*bias " << khs_tau.n_bias << " " << (b ? "ok" : "FAIL")
      << "; (c) normal-margin pi1 bias " << normal_pi1.bias << " " << (c ? "ok" : "FAIL") << "; converged "
      << rep.tallies[0].converged << "/" << rep.tallies[1].converged << "/" << rep.tallies[2].converged << " of 500"
      << "; reference N*bias: ML tau -4.57 (bias -0.091, N*sd 4.54), KHS tau 20.09, normal pi1 1.89 (ours "
      << normal_pi1.n_bias << ")";
    // only (a) is a known deviation: the reference N*bias of -4.57 already exceeds 0.05 * N
    g_unexpected = !(b && c);
    return a && b && c;
}

// ---- 6: property suites ---------------------------------------------------------------------

bool property_suites(std::ostringstream& d) {
    std::vector<std::string> failed;
    auto note = [&](bool ok, const char* what) {
        if (!ok) failed.emplace_back(what);
    };
    const std::vector<CopulaSpec> cat{CopulaSpec::bvn(-0.7), CopulaSpec::bvn(0.5),         CopulaSpec::frank(-6.0),
                                      CopulaSpec::frank(4.0), CopulaSpec::clayton(2.0, 0),   CopulaSpec::clayton(1.0, 90),
                                      CopulaSpec::clayton(3.0, 180), CopulaSpec::clayton(2.0, 270)};
    {
        bool ok = true;
        for (const auto& c : cat)
            for (int i = 1; i < 50; ++i)
                for (int j = 1; j < 50; ++j) {
                    const double u = i / 50.0, v = j / 50.0, x = copula_cdf(u, v, c);
                    ok = ok && x >= std::max(u + v - 1, 0.0) - 1e-12 && x <= std::min(u, v) + 1e-12;
                }
        note(ok, "Frechet bounds");
    }
    {
        bool ok = true;
        const CopulaSpec c0 = CopulaSpec::clayton(1.7);
        for (int i = 1; i < 20; ++i)
            for (int j = 1; j < 20; ++j) {
                const double u = i / 20.0, v = j / 20.0, base = copula_density(1 - u, v, c0);
                ok = ok && std::abs(copula_density(u, v, CopulaSpec::clayton(1.7, 90)) - base) <= 1e-12 * base &&
                     std::abs(copula_density(u, v, CopulaSpec::clayton(1.7, 270)) - copula_density(u, 1 - v, c0)) <=
                         1e-12 * base + 1e-12 * copula_density(u, 1 - v, c0);
            }
        note(ok, "rotation identities");
    }
    {
        bool ok = true;
        std::mt19937_64 rng(6);
        std::uniform_real_distribution<double> unif(1e-6, 1 - 1e-6);
        for (const auto& c : cat)
            for (int k = 0; k < 1250; ++k) {
                const double q = unif(rng), u = unif(rng);
                ok = ok && std::abs(cond_cdf(inv_cond_cdf(q, u, c), u, c) - q) <= 1e-10;
            }
        note(ok, "conditional inverse roundtrip");
    }
    {
        bool ok = true;
        for (double t : {-0.9, -0.5, -0.1, 0.2, 0.6, 0.85}) {
            ok = ok && std::abs(theta_to_tau(tau_to_theta(Family::bvn, 0, Tau{t})).value - t) <= 1e-8;
            ok = ok && std::abs(theta_to_tau(tau_to_theta(Family::frank, 0, Tau{t})).value - t) <= 1e-8;
            ok = ok && std::abs(theta_to_tau(tau_to_theta(Family::clayton, t < 0 ? 270 : 0, Tau{t})).value - t) <= 1e-8;
        }
        note(ok, "tau roundtrip");
    }
    {
        bool ok = true;
        boost::math::quadrature::tanh_sinh<double> inner, outer;
        for (const auto& c : {CopulaSpec::bvn(-0.5), CopulaSpec::frank(3.0), CopulaSpec::clayton(0.6, 90),
                              CopulaSpec::clayton(0.7, 270)}) {
            const double s = outer.integrate(
                [&](double u) { return inner.integrate([&](double v) { return copula_density(u, v, c); }, 0.0, 1.0, 1e-10); },
                0.0, 1.0, 1e-9);
            ok = ok && std::abs(s - 1) <= 1e-6;
        }
        note(ok, "density integrates to one");
    }
    {
        bool ok = true;
        boost::math::quadrature::tanh_sinh<double> ts;
        for (double pi : {0.3, 0.7})
            for (double g : {0.05, 0.2})
                for (int y : {0, 4, 9}) {
                    const BetaShape s = beta_shape(pi, g);
                    const double lb = std::lgamma(s.alpha) + std::lgamma(s.beta) - std::lgamma(s.alpha + s.beta);
                    auto f = [&](double x) {
                        return std::exp(lbin(y, 9, x) + (s.alpha - 1) * std::log(x) + (s.beta - 1) * std::log1p(-x) - lb);
                    };
                    const double acc = ts.integrate(f, 0.0, 1.0, 1e-14);
                    ok = ok && std::abs(std::exp(betabinomial_logpmf(y, 9, pi, g)) - acc) <= 1e-10;
                }
        note(ok, "beta-binomial integral oracle");
    }
    {
        LogLikResult a, b;
        std::mt19937_64 rng(2);
        std::normal_distribution<double> nd(-2, 1);
        for (int i = 0; i < 25; ++i) a.per_study.push_back(nd(rng)), b.per_study.push_back(nd(rng));
        const VuongResult x = vuong_test(a, b), y = vuong_test(b, a);
        note(std::abs(x.statistic + y.statistic) <= 1e-14 && x.p_value == y.p_value, "Vuong antisymmetry");
    }
    {
        bool ok = true;
        const ModelSpec m{MarginSpec::beta(0.7, 0.2), MarginSpec::beta(0.9, 0.1), CopulaSpec::clayton(2.0, 270)};
        const auto grid = linear_grid(80);
        const auto lo = quantile_curve(m, 0.01, grid), mid = quantile_curve(m, 0.5, grid), hi = quantile_curve(m, 0.99, grid);
        for (std::size_t i = 0; i < grid.size(); ++i)
            ok = ok && lo.points[i].sens < mid.points[i].sens && mid.points[i].sens < hi.points[i].sens;
        note(ok, "quantile-curve monotonicity in q");
    }
    {
        const ModelSpec m{MarginSpec::normal(0.7, 2.0), MarginSpec::normal(0.9, 1.0), CopulaSpec::bvn(-0.7071)};
        const auto cs = predictive_contours(m, {0.5, 0.95}, 300);
        bool ok = cs[0].threshold > cs[1].threshold && std::abs(cs[0].mass - 0.5) < 0.01 && std::abs(cs[1].mass - 0.95) < 0.01;
        // inner vertices lie inside the outer loop (ray casting)
        for (const auto& p : cs[0].loops.at(0)) {
            bool in = false;
            const Loop& L = cs[1].loops.at(0);
            for (std::size_t i = 0, j = L.size() - 1; i < L.size(); j = i++)
                if ((L[i].sens > p.sens) != (L[j].sens > p.sens) &&
                    p.fpr < (L[j].fpr - L[i].fpr) * (p.sens - L[i].sens) / (L[j].sens - L[i].sens) + L[i].fpr)
                    in = !in;
            ok = ok && in;
        }
        note(ok, "contour nesting");
    }
    {
        std::mt19937_64 rng(9);
        const Dataset ds = make_dataset(generate_meta_dataset(25, reference_truth(), rng));
        std::stringstream ss;
        emit(ss, ds);
        const Dataset back = ingest(ss);
        note(back.studies == ds.studies && back.labels == ds.labels, "ingest/emit roundtrip");
    }
    d << (failed.empty() ? "10 suites ok" : "failed:");
    for (const auto& f : failed) d << " [" << f << "]";
    return failed.empty();
}

}  // namespace

int main(int argc, char** argv) {
    std::set<std::string> only;
    for (int i = 1; i < argc; ++i) only.insert(argv[i]);

    const std::vector<Check> checks{
        {"1a", "limiting KHS, rho=-0.5 pi=0.7 gamma=0.1 n=20", [](auto& d) { return limiting_khs_row(kRows[0], d); }},
        {"1b", "limiting KHS, rho=-0.8 pi=0.8 gamma=0.2 n=20", [](auto& d) { return limiting_khs_row(kRows[1], d); }},
        {"1c", "limiting KHS, rho=-1 pi=0.9 gamma=0.2 n=20", [](auto& d) { return limiting_khs_row(kRows[2], d); }},
        {"2", "limiting MLE recovers truth within 1e-3", limiting_mle_rows},
        {"3", "GLMM equals BVN copula mixed model within 1e-8", glmm_equivalence},
        {"4", "nq=15 vs nq=30 log-likelihood within 1e-4 on 50 cases", quadrature_precision},
        {"5", "efficiency study, 500 replications at N=50", efficiency_study},
        {"6", "property suites", property_suites},
    };

    int unexpected = 0;
    for (const Check& c : checks) {
        if (!only.empty() && !only.count(c.id)) continue;
        std::ostringstream detail;
        const auto t0 = std::chrono::steady_clock::now();
        bool ok = false;
        g_unexpected = false;
        try {
            ok = c.body(detail);
        } catch (const std::exception& e) {
            detail << "exception: " << e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool known = kKnownDeviations.count(c.id) > 0 && !g_unexpected;
        std::string status = ok ? "PASS" : (known ? "FAIL (known deviation)" : "FAIL");
        if (!ok && !known) ++unexpected;
        std::printf("%-24s [%s] %s: %s (%.1f s)\n", status.c_str(), c.id.c_str(), c.title.c_str(), detail.str().c_str(),
                    secs);
        std::fflush(stdout);
    }
    if (only.empty() || only.count("7"))
        std::printf("%-24s [7] study-level point estimates and Vuong p-values of the four real data sets: raw tables "
                    "unavailable; covered by 5 and 6\n",
                    "NOT DESK-REPRODUCIBLE");
    return unexpected == 0 ? 0 : 1;
}
