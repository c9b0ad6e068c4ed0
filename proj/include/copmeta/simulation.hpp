#pragma once

// Meta-analytic data generation with heterogeneous study sizes and the
// small-sample efficiency study built on it.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "copmeta/copulas.hpp"
#include "copmeta/error.hpp"
#include "copmeta/estimation.hpp"
#include "copmeta/likelihood.hpp"
#include "copmeta/margins.hpp"

namespace copmeta {

/// Shifted gamma study-size law; rate is the inverse scale.
struct StudySizeLaw {
    double shape = 1.2;
    double rate = 0.01;
    double lag = 30.0;
};

// rounded: y = round(n x) as in the reference simulation design.
// binomial: y ~ Binomial(n, x), the sampling model the likelihood assumes.
enum class CountDraw { rounded, binomial };

struct GenerationStats {
    std::size_t empty_arm_redraws = 0;
};

namespace detail {

inline double open_uniform(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u;
    do {
        u = unif(rng);
    } while (!(u > 0.0 && u < 1.0));
    return u;
}

// Round half to even and clamp into [0, n].
inline int round_count(double x, int n) {
    const double r = std::nearbyint(x);
    return static_cast<int>(std::clamp(r, 0.0, static_cast<double>(n)));
}

}  // namespace detail

/// Draw N studies from the model. (u1, u2) come from the copula by conditional
/// inversion; n1 ~ Binomial(n, prevalence) is redrawn when either arm would be empty.
inline std::vector<StudyRecord> generate_meta_dataset(std::size_t n_studies, const ModelSpec& truth,
                                                      std::mt19937_64& rng, const StudySizeLaw& size_law = {},
                                                      double prevalence = 0.43, GenerationStats* stats = nullptr,
                                                      CountDraw counts = CountDraw::rounded) {
    if (truth.variant != Variant::copula_mixed && truth.variant != Variant::countermonotonic) {
        throw DomainError("generate_meta_dataset: the true model must be a copula mixed model");
    }
    if (!(prevalence > 0.0 && prevalence < 1.0)) throw DomainError("generate_meta_dataset: prevalence outside (0, 1)");
    if (!(size_law.shape > 0.0 && size_law.rate > 0.0)) throw DomainError("generate_meta_dataset: invalid size law");
    validate(truth.margin1);
    validate(truth.margin2);
    if (truth.variant == Variant::copula_mixed) validate(truth.copula);

    std::gamma_distribution<double> size_dist(size_law.shape, 1.0 / size_law.rate);
    std::vector<StudyRecord> out;
    out.reserve(n_studies);
    for (std::size_t i = 0; i < n_studies; ++i) {
        const int n = static_cast<int>(std::nearbyint(size_law.lag + size_dist(rng)));
        if (n < 2) throw DomainError("generate_meta_dataset: study size below 2; raise the lag");
        const double u1 = detail::open_uniform(rng);
        const double w = detail::open_uniform(rng);
        const double u2 = truth.variant == Variant::countermonotonic ? 1.0 - u1 : inv_cond_cdf(w, u1, truth.copula);
        const double x1 = latent_value(u1, truth.margin1).p;
        const double x2 = latent_value(u2, truth.margin2).p;
        std::binomial_distribution<int> arm(n, prevalence);
        int n1 = arm(rng);
        while (n1 == 0 || n1 == n) {
            if (stats) ++stats->empty_arm_redraws;
            n1 = arm(rng);
        }
        const int n2 = n - n1;
        if (counts == CountDraw::binomial) {
            const int y1 = std::binomial_distribution<int>(n1, x1)(rng);
            const int y2 = std::binomial_distribution<int>(n2, x2)(rng);
            out.push_back({y1, n1, y2, n2});
        } else {
            out.push_back({detail::round_count(n1 * x1, n1), n1, detail::round_count(n2 * x2, n2), n2});
        }
    }
    return out;
}

struct FittedModel {
    std::string label;  // "ML" or "KHS" in reports
    ModelSpec model;
};

struct SimConfig {
    std::size_t n_studies = 50;
    std::size_t replications = 500;
    ModelSpec truth;
    StudySizeLaw size_law;
    double prevalence = 0.43;
    std::uint64_t seed = 1;
    std::vector<FittedModel> fitted;
    FitOptions fit_options;
    unsigned jobs = 1;
    double flag_fraction = 0.2;  // non-convergence share that flags a model
};

enum class SimParameter { pi1, pi2, scale1, scale2, tau };

inline std::string_view parameter_name(SimParameter p, const ModelSpec& fitted) {
    switch (p) {
        case SimParameter::pi1: return "pi1";
        case SimParameter::pi2: return "pi2";
        case SimParameter::scale1: return fitted.margin1.kind == MarginKind::beta ? "gamma1" : "sigma1";
        case SimParameter::scale2: return fitted.margin2.kind == MarginKind::beta ? "gamma2" : "sigma2";
        case SimParameter::tau: return "tau";
    }
    return "";
}

/// One report row. Raw moments are unscaled; the n_* fields are multiplied by N.
/// Rows whose truth is undefined (scale of a misspecified margin) carry NaN moments.
struct SimRow {
    std::string model;
    std::string margin;
    std::string copula;
    SimParameter parameter;
    std::string parameter_label;
    double truth = kNaN;
    double mean = kNaN;
    double bias = kNaN;
    double sd = kNaN;    // divisor = number of converged replications
    double rmse = kNaN;
    double vbar = kNaN;  // mean squared standard error over replications that had one
    double n_bias = kNaN;
    double n_sd = kNaN;
    double n_sqrt_vbar = kNaN;
    double n_rmse = kNaN;
};

struct ModelTally {
    std::string model;
    std::string margin;
    std::string copula;
    std::size_t converged = 0;
    std::size_t excluded = 0;
    bool flagged = false;
};

struct SimReport {
    std::size_t n_studies = 0;
    std::size_t replications = 0;
    std::vector<SimRow> rows;
    std::vector<ModelTally> tallies;
    std::size_t empty_arm_redraws = 0;
    bool flagged = false;
};

/// Per-replication RNG stream derived from (seed, replication index).
inline std::mt19937_64 replication_rng(std::uint64_t seed, std::size_t rep) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(rep & 0xffffffffu),
                      static_cast<std::uint32_t>(static_cast<std::uint64_t>(rep) >> 32)};
    return std::mt19937_64(seq);
}

namespace detail {

struct RepOutcome {
    bool ok = false;
    ParamVector est{};
    ParamVector se{};
    double tau = kNaN;
    double tau_se = kNaN;
};

inline ParamVector true_values(const ModelSpec& truth) {
    const double tau = truth.variant == Variant::countermonotonic ? -1.0 : theta_to_tau(truth.copula).value;
    return {truth.margin1.pi, truth.margin2.pi, truth.margin1.scale, truth.margin2.scale, tau};
}

// Pairwise summation keeps the result independent of how replications were scheduled.
inline double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t h = x.size() / 2;
    return pairwise_sum(x.subspan(0, h)) + pairwise_sum(x.subspan(h));
}

}  // namespace detail

/// Run the efficiency study: generate, fit every model, accumulate bias/SD/RMSE and
/// the average theoretical variance. Non-converged fits are excluded and counted.
inline SimReport run_sim_study(const SimConfig& cfg) {
    if (cfg.n_studies < 2) throw DomainError("run_sim_study: N must be at least 2");
    if (cfg.replications < 1) throw DomainError("run_sim_study: at least one replication is required");
    if (cfg.fitted.empty()) throw DomainError("run_sim_study: no fitted models");
    const std::size_t n_models = cfg.fitted.size();
    const std::size_t reps = cfg.replications;

    std::vector<detail::RepOutcome> outcomes(reps * n_models);
    std::vector<std::size_t> redraws(reps, 0);
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (std::size_t r = next++; r < reps; r = next++) {
            std::mt19937_64 rng = replication_rng(cfg.seed, r);
            GenerationStats gs;
            const std::vector<StudyRecord> data =
                generate_meta_dataset(cfg.n_studies, cfg.truth, rng, cfg.size_law, cfg.prevalence, &gs);
            redraws[r] = gs.empty_arm_redraws;
            for (std::size_t m = 0; m < n_models; ++m) {
                detail::RepOutcome& o = outcomes[r * n_models + m];
                try {
                    const FitResult f = fit(data, cfg.fitted[m].model, cfg.fit_options);
                    if (!f.converged) continue;
                    o.ok = true;
                    o.est = f.estimates;
                    o.se = f.se;
                    o.tau = f.tau_hat.value;
                    o.tau_se = f.boundary ? kNaN : f.tau_se;
                } catch (const std::exception&) {
                    o.ok = false;
                }
            }
        }
    };
    const unsigned jobs = std::max(1u, cfg.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    SimReport rep;
    rep.n_studies = cfg.n_studies;
    rep.replications = reps;
    for (std::size_t r : redraws) rep.empty_arm_redraws += r;
    const ParamVector truth = detail::true_values(cfg.truth);
    const double scale = static_cast<double>(cfg.n_studies);

    for (std::size_t m = 0; m < n_models; ++m) {
        const ModelSpec& fm = cfg.fitted[m].model;
        ModelTally tally{cfg.fitted[m].label, std::string(margin_label(fm.margin1.kind)),
                         fm.variant == Variant::sarmanov ? "sarmanov" : copula_label(fm.copula)};
        for (std::size_t r = 0; r < reps; ++r) (outcomes[r * n_models + m].ok ? tally.converged : tally.excluded)++;
        tally.flagged = static_cast<double>(tally.excluded) > cfg.flag_fraction * static_cast<double>(reps);
        rep.flagged = rep.flagged || tally.flagged;

        for (SimParameter p : {SimParameter::pi1, SimParameter::pi2, SimParameter::scale1, SimParameter::scale2,
                               SimParameter::tau}) {
            const auto k = static_cast<std::size_t>(p);
            if (p == SimParameter::tau && fm.variant == Variant::sarmanov) continue;
            SimRow row;
            row.model = tally.model;
            row.margin = tally.margin;
            row.copula = tally.copula;
            row.parameter = p;
            row.parameter_label = std::string(parameter_name(p, fm));
            const bool defined = !((p == SimParameter::scale1 && fm.margin1.kind != cfg.truth.margin1.kind) ||
                                   (p == SimParameter::scale2 && fm.margin2.kind != cfg.truth.margin2.kind));
            if (defined) row.truth = truth[k];
            std::vector<double> est;
            std::vector<double> var;
            for (std::size_t r = 0; r < reps; ++r) {
                const auto& o = outcomes[r * n_models + m];
                if (!o.ok) continue;
                const double e = p == SimParameter::tau ? o.tau : o.est[k];
                const double s = p == SimParameter::tau ? o.tau_se : o.se[k];
                est.push_back(e);
                if (std::isfinite(s)) var.push_back(s * s);
            }
            if (!est.empty() && defined) {
                const double cnt = static_cast<double>(est.size());
                row.mean = detail::pairwise_sum(est) / cnt;
                std::vector<double> dev2(est.size());
                std::vector<double> err2(est.size());
                for (std::size_t i = 0; i < est.size(); ++i) {
                    dev2[i] = (est[i] - row.mean) * (est[i] - row.mean);
                    err2[i] = (est[i] - row.truth) * (est[i] - row.truth);
                }
                row.bias = row.mean - row.truth;
                row.sd = std::sqrt(detail::pairwise_sum(dev2) / cnt);
                row.rmse = std::sqrt(detail::pairwise_sum(err2) / cnt);
                if (!var.empty()) row.vbar = detail::pairwise_sum(var) / static_cast<double>(var.size());
                row.n_bias = scale * row.bias;
                row.n_sd = scale * row.sd;
                row.n_rmse = scale * row.rmse;
                row.n_sqrt_vbar = scale * std::sqrt(row.vbar);
            }
            rep.rows.push_back(row);
        }
        rep.tallies.push_back(tally);
    }
    return rep;
}

/// The reference design: Clayton-270 with beta margins, pi = (0.7, 0.9), gamma = (0.2, 0.1), tau = -0.5.
inline ModelSpec reference_truth() {
    return {MarginSpec::beta(0.7, 0.2), MarginSpec::beta(0.9, 0.1),
            tau_to_theta(Family::clayton, 270, Tau{-0.5}), Variant::copula_mixed};
}

}  // namespace copmeta
