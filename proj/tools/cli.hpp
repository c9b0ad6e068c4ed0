#pragma once

// Command-line front end: fit, sroc, simulate, asymptotics, generate.
// Exit codes: 0 success, 1 validation, 2 convergence failure, 3 numeric error.

#include <atomic>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "copmeta/copmeta.hpp"

namespace copmeta::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitConvergence = 2;
inline constexpr int kExitNumeric = 3;

using json = nlohmann::ordered_json;

/// A fitted model choice such as "beta:clayton270", "khs:frank" or "sarmanov".
struct ModelChoice {
    std::string label;
    ModelSpec model;
};

inline CopulaSpec parse_copula(const std::string& s) {
    if (s == "bvn") return CopulaSpec::bvn(0.0);
    if (s == "frank") return CopulaSpec::frank(1.0);
    if (s.rfind("clayton", 0) == 0) {
        const std::string rot = s.substr(7);
        if (rot.empty() || rot == "0") return CopulaSpec::clayton(1.0, 0);
        if (rot == "90" || rot == "180" || rot == "270") return CopulaSpec::clayton(1.0, std::stoi(rot));
    }
    throw ValidationError("unknown copula '" + s + "' (bvn, frank, clayton0, clayton90, clayton180, clayton270)");
}

inline ModelChoice parse_model(const std::string& s) {
    if (s == "sarmanov") {
        return {"sarmanov", {MarginSpec::beta(0.5, 0.1), MarginSpec::beta(0.5, 0.1), CopulaSpec::bvn(0.0),
                             Variant::sarmanov}};
    }
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw ValidationError("model '" + s + "' must look like <margin>:<copula>");
    const std::string head = s.substr(0, colon);
    const CopulaSpec cop = parse_copula(s.substr(colon + 1));
    const std::string cl = copula_label(cop);
    if (head == "normal") {
        return {"normal:" + cl, {MarginSpec::normal(0.5, 1.0), MarginSpec::normal(0.5, 1.0), cop,
                                 Variant::copula_mixed}};
    }
    if (head == "beta") {
        return {"beta:" + cl, {MarginSpec::beta(0.5, 0.1), MarginSpec::beta(0.5, 0.1), cop, Variant::copula_mixed}};
    }
    if (head == "khs") {
        return {"khs:" + cl, {MarginSpec::beta(0.5, 0.1), MarginSpec::beta(0.5, 0.1), cop, Variant::khs}};
    }
    throw ValidationError("unknown margin '" + head + "' (normal, beta, khs)");
}

inline std::vector<double> parse_list(const std::string& s, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ValidationError(std::string("cannot parse ") + what + " value '" + item + "'");
        }
    }
    if (out.empty()) throw ValidationError(std::string("empty ") + what + " list");
    return out;
}

inline std::vector<std::string> split_names(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct GlobalOptions {
    std::size_t nq = kDefaultNq;
    std::uint64_t seed = 1;
    std::string quantiles = "0.01,0.5,0.99";
    std::string levels = "0.5,0.95";
    unsigned jobs = 1;
};

namespace detail {

inline json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

template <class F>
void run_parallel(std::size_t n, unsigned jobs, F&& task) {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < n; i = next++) task(i);
    };
    if (jobs <= 1 || n <= 1) {
        worker();
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < std::min<std::size_t>(jobs, n); ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

inline void write_rows(const std::filesystem::path& path, const std::string& header,
                       const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream os;
    os << header << '\n';
    for (const auto& r : rows) {
        for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << r[k];
        os << '\n';
    }
    atomic_write(path, os.str());
}

inline std::string q_tag(double q) { return fmt6(q); }

struct FitOutcome {
    ModelChoice choice;
    std::optional<FitResult> fit;
    std::string error;
};

}  // namespace detail

/// Fit a grid of models; failures are recorded rather than thrown.
inline std::vector<detail::FitOutcome> fit_grid(const std::vector<StudyRecord>& data,
                                                const std::vector<ModelChoice>& models, const FitOptions& opts,
                                                unsigned jobs) {
    std::vector<detail::FitOutcome> out(models.size());
    detail::run_parallel(models.size(), jobs, [&](std::size_t i) {
        out[i].choice = models[i];
        try {
            out[i].fit = fit(data, models[i].model, opts);
        } catch (const std::exception& e) {
            out[i].error = e.what();
        }
    });
    return out;
}

inline int cmd_fit(const GlobalOptions& g, const std::string& data_path, const std::string& model_flag,
                   const std::string& margins_flag, const std::string& copulas_flag, bool khs, bool sarmanov,
                   const std::string& out_dir, std::ostream& out, std::ostream& err) {
    const Dataset ds = ingest(std::filesystem::path(data_path));
    std::vector<ModelChoice> models;
    if (!model_flag.empty()) {
        for (const auto& m : split_names(model_flag)) models.push_back(parse_model(m));
    } else {
        const auto copulas = split_names(copulas_flag);
        for (const auto& mg : split_names(margins_flag)) {
            for (const auto& c : copulas) models.push_back(parse_model(mg + ":" + c));
        }
        if (khs) {
            for (const auto& c : copulas) models.push_back(parse_model("khs:" + c));
        }
        if (sarmanov) models.push_back(parse_model("sarmanov"));
    }
    if (models.empty()) throw ValidationError("no models requested");
    FitOptions opts;
    opts.nq = g.nq;
    auto results = fit_grid(ds.studies, models, opts, g.jobs);

    // Vuong baseline: BVN copula with normal margins.
    std::optional<FitResult> baseline;
    for (const auto& r : results) {
        if (r.choice.label == "normal:bvn" && r.fit) baseline = r.fit;
    }
    if (!baseline) {
        try {
            baseline = fit(ds.studies, parse_model("normal:bvn").model, opts);
        } catch (const std::exception&) {
        }
    }

    json report;
    report["dataset"] = ds.name;
    report["studies"] = ds.size();
    report["nq"] = g.nq;
    report["baseline"] = "normal:bvn";
    json fits = json::array();
    std::vector<std::vector<std::string>> rows;
    std::size_t ok = 0;
    std::ostringstream table;
    table << std::left << std::setw(18) << "model" << std::setw(11) << "pi1" << std::setw(11) << "pi2"
          << std::setw(11) << "scale1" << std::setw(11) << "scale2" << std::setw(14) << "tau" << std::setw(13)
          << "loglik" << std::setw(11) << "vuong" << std::setw(11) << "p" << "status\n";
    for (const auto& r : results) {
        json j;
        j["model"] = r.choice.label;
        if (!r.fit) {
            j["status"] = "failed";
            j["diagnostics"] = r.error;
            fits.push_back(j);
            std::vector<std::string> blank(17, "");
            blank[0] = r.choice.label;
            blank[15] = "failed";
            blank[16] = "0";
            rows.push_back(blank);
            table << std::setw(18) << r.choice.label << "failed: " << r.error << '\n';
            continue;
        }
        const FitResult& f = *r.fit;
        if (f.converged) ++ok;
        double vstat = kNaN, vp = kNaN;
        if (baseline && r.choice.label != "normal:bvn") {
            try {
                const VuongResult v = vuong_test(baseline->loglik, f.loglik);
                vstat = v.statistic;
                vp = v.p_value;
            } catch (const std::exception&) {
            }
        }
        const std::string status = f.boundary ? "boundary" : (f.converged ? "ok" : "not-converged");
        j["pi1"] = detail::num(f.estimates[0]);
        j["pi1_se"] = detail::num(f.se[0]);
        j["pi2"] = detail::num(f.estimates[1]);
        j["pi2_se"] = detail::num(f.se[1]);
        j["scale1"] = detail::num(f.estimates[2]);
        j["scale1_se"] = detail::num(f.se[2]);
        j["scale2"] = detail::num(f.estimates[3]);
        j["scale2_se"] = detail::num(f.se[3]);
        j["theta"] = detail::num(f.estimates[4]);
        j["tau"] = detail::num(f.tau_hat.value);
        j["tau_se"] = detail::num(f.tau_se);
        j["loglik"] = detail::num(f.loglik.total);
        j["vuong_statistic"] = detail::num(vstat);
        j["vuong_p"] = detail::num(vp);
        j["status"] = status;
        j["converged"] = f.converged;
        j["boundary"] = f.boundary;
        j["diagnostics"] = f.diagnostics;
        if (f.interior) {
            j["interior_tau"] = detail::num(f.interior->tau_hat.value);
            j["interior_loglik"] = detail::num(f.interior->loglik.total);
        }
        fits.push_back(j);
        rows.push_back({r.choice.label, fmt6(f.estimates[0]), fmt6(f.se[0]), fmt6(f.estimates[1]), fmt6(f.se[1]),
                        fmt6(f.estimates[2]), fmt6(f.se[2]), fmt6(f.estimates[3]), fmt6(f.se[3]),
                        fmt6(f.estimates[4]), fmt6(f.tau_hat.value), fmt6(f.tau_se), fmt6(f.loglik.total),
                        fmt6(vstat), fmt6(vp), status, f.boundary ? "1" : "0"});
        table << std::setw(18) << r.choice.label << std::setw(11) << fmt6(f.estimates[0]) << std::setw(11)
              << fmt6(f.estimates[1]) << std::setw(11) << fmt6(f.estimates[2]) << std::setw(11)
              << fmt6(f.estimates[3]) << std::setw(14) << fmt6(f.tau_hat.value) << std::setw(13)
              << fmt6(f.loglik.total) << std::setw(11) << fmt6(vstat) << std::setw(11) << fmt6(vp) << status;
        if (f.boundary) table << " (countermonotonic refit)";
        table << '\n';
    }
    report["fits"] = fits;
    out << table.str();
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        detail::write_rows(std::filesystem::path(out_dir) / "fit_report.csv",
                           "model,pi1,pi1_se,pi2,pi2_se,scale1,scale1_se,scale2,scale2_se,theta,tau,tau_se,loglik,"
                           "vuong_statistic,vuong_p,status,boundary",
                           rows);
        atomic_write(std::filesystem::path(out_dir) / "fit_report.json", report.dump(2) + "\n");
    }
    if (ok == 0) {
        err << "no model converged\n";
        for (const auto& r : results) {
            err << "  " << r.choice.label << ": " << (r.fit ? r.fit->diagnostics : r.error) << '\n';
        }
        return kExitConvergence;
    }
    return kExitOk;
}

inline int cmd_sroc(const GlobalOptions& g, const std::string& data_path, const std::string& model_flag,
                    double coverage, std::size_t grid_size, std::size_t resolution, const std::string& out_dir,
                    std::ostream& out, std::ostream& err) {
    const Dataset ds = ingest(std::filesystem::path(data_path));
    const ModelChoice choice = parse_model(model_flag);
    const std::vector<double> qs = parse_list(g.quantiles, "quantile");
    const std::vector<double> levels = parse_list(g.levels, "level");
    for (double q : qs) {
        if (!(q > 0.0 && q < 1.0)) throw ValidationError("quantiles must lie in (0, 1)");
    }
    for (double l : levels) {
        if (!(l > 0.0 && l < 1.0)) throw ValidationError("levels must lie in (0, 1)");
    }
    if (out_dir.empty()) throw ValidationError("sroc needs --out");
    FitOptions opts;
    opts.nq = g.nq;
    const FitResult f = fit(ds.studies, choice.model, opts);
    if (!f.converged) {
        err << "fit did not converge: " << f.diagnostics << '\n';
        return kExitConvergence;
    }
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    json report;
    report["model"] = choice.label;
    report["boundary"] = f.boundary;
    const std::vector<double> grid = linear_grid(grid_size);
    json curves = json::object();
    auto write_curve = [&](const QuantileCurve& c, const std::string& name) {
        std::vector<std::vector<std::string>> rows;
        json pts = json::array();
        for (const auto& p : c.points) {
            rows.push_back({fmt17(p.fpr), fmt17(p.sens)});
            pts.push_back({p.fpr, p.sens});
        }
        detail::write_rows(dir / (name + ".csv"), "fpr,sens", rows);
        curves[name] = pts;
    };
    if (f.boundary) {
        write_curve(quantile_curve(f, 0.5, grid), "curve_boundary");
        report["notice"] = "countermonotonic boundary fit: all quantile curves coincide; contours not available";
        out << "notice: " << report["notice"].get<std::string>() << '\n';
    } else {
        for (double q : qs) write_curve(quantile_curve(f, q, grid), "curve_q" + detail::q_tag(q));
    }
    report["curves"] = curves;

    const SummaryRegion sr = summary_point_region(f, coverage);
    detail::write_rows(dir / "summary_point.csv", "sens,spec,fpr",
                       {{fmt17(sr.sensitivity), fmt17(sr.specificity), fmt17(sr.point.fpr)}});
    std::vector<std::vector<std::string>> region;
    json rj = json::array();
    for (const auto& p : sr.region) {
        region.push_back({fmt17(p.fpr), fmt17(p.sens)});
        rj.push_back({p.fpr, p.sens});
    }
    detail::write_rows(dir / "confidence_region.csv", "fpr,sens", region);
    report["summary_point"] = {{"sens", sr.sensitivity}, {"spec", sr.specificity}};
    report["confidence_region"] = rj;
    report["coverage"] = coverage;
    if (!sr.region_available) {
        report["region_notice"] = sr.message;
        out << "notice: " << sr.message << '\n';
    }

    json contours = json::object();
    if (!f.boundary) {
        for (const Contour& c : predictive_contours(f, levels, resolution)) {
            std::vector<std::vector<std::string>> rows;
            json loops = json::array();
            for (std::size_t k = 0; k < c.loops.size(); ++k) {
                json lj = json::array();
                for (const auto& p : c.loops[k]) {
                    rows.push_back({std::to_string(k), fmt17(p.fpr), fmt17(p.sens)});
                    lj.push_back({p.fpr, p.sens});
                }
                loops.push_back(lj);
            }
            const std::string name = "contour_" + detail::q_tag(c.level);
            detail::write_rows(dir / (name + ".csv"), "loop,fpr,sens", rows);
            contours[name] = {{"level", c.level}, {"mass", c.mass}, {"threshold", c.threshold}, {"loops", loops}};
        }
    }
    report["contours"] = contours;

    std::vector<std::vector<std::string>> studies;
    for (const auto& s : ds.studies) {
        studies.push_back({fmt17(1.0 - static_cast<double>(s.y2) / s.n2), fmt17(static_cast<double>(s.y1) / s.n1),
                           std::to_string(s.n1 + s.n2)});
    }
    detail::write_rows(dir / "studies.csv", "fpr,sens,weight", studies);
    atomic_write(dir / "sroc.json", report.dump(2) + "\n");
    out << "model " << choice.label << ": sens " << fmt6(sr.sensitivity) << ", spec " << fmt6(sr.specificity)
        << ", tau " << fmt6(f.tau_hat.value) << "; files written to " << dir.string() << '\n';
    return kExitOk;
}

struct TruthFlags {
    std::string model = "beta:clayton270";
    double pi1 = 0.7;
    double pi2 = 0.9;
    double scale1 = 0.2;
    double scale2 = 0.1;
    double tau = -0.5;
};

inline ModelSpec truth_from(const TruthFlags& t) {
    ModelChoice c = parse_model(t.model);
    if (c.model.variant != Variant::copula_mixed) throw ValidationError("the true model must be <margin>:<copula>");
    c.model.margin1.pi = t.pi1;
    c.model.margin2.pi = t.pi2;
    c.model.margin1.scale = t.scale1;
    c.model.margin2.scale = t.scale2;
    validate(c.model.margin1);
    validate(c.model.margin2);
    c.model.copula = tau_to_theta(c.model.copula.family, c.model.copula.rotation, Tau{t.tau});
    return c.model;
}

inline int cmd_simulate(const GlobalOptions& g, const TruthFlags& truth, std::size_t n_studies,
                        std::size_t replications, const std::string& fit_flag, const StudySizeLaw& law,
                        double prevalence, const std::string& out_path, std::ostream& out, std::ostream& err) {
    SimConfig cfg;
    cfg.n_studies = n_studies;
    cfg.replications = replications;
    cfg.truth = truth_from(truth);
    cfg.size_law = law;
    cfg.prevalence = prevalence;
    cfg.seed = g.seed;
    cfg.jobs = g.jobs;
    cfg.fit_options.nq = g.nq;
    for (const auto& m : split_names(fit_flag)) {
        const ModelChoice c = parse_model(m);
        cfg.fitted.push_back({c.model.variant == Variant::khs ? "KHS" : "ML", c.model});
    }
    const SimReport rep = run_sim_study(cfg);
    std::vector<std::vector<std::string>> rows;
    json jr = json::array();
    for (const auto& r : rep.rows) {
        rows.push_back({r.model, r.margin, r.copula, r.parameter_label, fmt6(r.n_bias), fmt6(r.n_sd),
                        fmt6(r.n_sqrt_vbar), fmt6(r.n_rmse)});
        jr.push_back({{"model", r.model}, {"margin", r.margin}, {"copula", r.copula},
                      {"parameter", r.parameter_label}, {"n_bias", detail::num(r.n_bias)},
                      {"n_sd", detail::num(r.n_sd)}, {"n_sqrt_vbar", detail::num(r.n_sqrt_vbar)},
                      {"n_rmse", detail::num(r.n_rmse)}});
    }
    const std::string header = "model,margin,copula,parameter,n_bias,n_sd,n_sqrt_vbar,n_rmse";
    std::ostringstream csv;
    csv << header << '\n';
    for (const auto& r : rows) {
        for (std::size_t k = 0; k < r.size(); ++k) csv << (k ? "," : "") << r[k];
        csv << '\n';
    }
    out << csv.str();
    json tallies = json::array();
    for (const auto& t : rep.tallies) {
        tallies.push_back({{"model", t.model}, {"margin", t.margin}, {"copula", t.copula},
                           {"converged", t.converged}, {"excluded", t.excluded}, {"flagged", t.flagged}});
        if (t.flagged) {
            err << "warning: " << t.model << " " << t.margin << ":" << t.copula << " failed to converge in "
                << t.excluded << " of " << rep.replications << " replications\n";
        }
    }
    if (!out_path.empty()) {
        atomic_write(out_path, csv.str());
        json report;
        report["n_studies"] = rep.n_studies;
        report["replications"] = rep.replications;
        report["seed"] = g.seed;
        report["empty_arm_redraws"] = rep.empty_arm_redraws;
        report["flagged"] = rep.flagged;
        report["tallies"] = tallies;
        report["rows"] = jr;
        atomic_write(out_path + ".json", report.dump(2) + "\n");
    }
    return kExitOk;
}

inline int cmd_asymptotics(const GlobalOptions& g, const std::string& rhos, double pi, double gamma, int n,
                           bool allow_large, bool with_mle, const std::string& out_path, std::ostream& out,
                           std::ostream&) {
    if (n > 20 && !allow_large) throw ValidationError("group sizes above 20 require --allow-large");
    LimitingOptions opts;
    if (g.nq != kDefaultNq) opts.nq = g.nq;
    std::vector<std::vector<std::string>> rows;
    json jr = json::array();
    bool converged = true;
    for (double rho : parse_list(rhos, "rho")) {
        const AsymptoticRow r = asymptotic_row(rho, pi, gamma, n, with_mle, opts);
        converged = converged && r.khs.converged && (!with_mle || r.mle.converged);
        rows.push_back({fmt6(r.rho_true), std::to_string(r.n), fmt6(r.rho_khs), fmt6(r.pi_true), fmt6(r.pi_khs),
                        fmt6(r.gamma_true), fmt6(r.gamma_khs)});
        json j = {{"rho_true", r.rho_true}, {"n", r.n},          {"rho_khs", r.rho_khs},
                  {"pi_true", r.pi_true},   {"pi_khs", r.pi_khs}, {"gamma_true", r.gamma_true},
                  {"gamma_khs", r.gamma_khs}, {"khs_converged", r.khs.converged}};
        if (with_mle) {
            j["rho_mle"] = r.mle.theta;
            j["pi_mle"] = r.mle.pi;
            j["gamma_mle"] = r.mle.gamma;
            j["mle_converged"] = r.mle.converged;
        }
        jr.push_back(j);
    }
    const std::string header = "rho_true,n,rho_khs,pi_true,pi_khs,gamma_true,gamma_khs";
    std::ostringstream csv;
    csv << header << '\n';
    for (const auto& r : rows) {
        for (std::size_t k = 0; k < r.size(); ++k) csv << (k ? "," : "") << r[k];
        csv << '\n';
    }
    out << csv.str();
    if (with_mle) {
        for (const auto& j : jr) {
            out << "mle rho=" << fmt6(j["rho_true"].get<double>()) << ": (" << fmt6(j["rho_mle"].get<double>())
                << ", " << fmt6(j["pi_mle"].get<double>()) << ", " << fmt6(j["gamma_mle"].get<double>()) << ")\n";
        }
    }
    if (!out_path.empty()) {
        atomic_write(out_path, csv.str());
        atomic_write(out_path + ".json", json{{"rows", jr}}.dump(2) + "\n");
    }
    return converged ? kExitOk : kExitConvergence;
}

inline int cmd_generate(const GlobalOptions& g, const TruthFlags& truth, std::size_t n_studies,
                        const StudySizeLaw& law, double prevalence, const std::string& out_path, std::ostream& out) {
    std::mt19937_64 rng = replication_rng(g.seed, 0);
    const Dataset ds = make_dataset(generate_meta_dataset(n_studies, truth_from(truth), rng, law, prevalence),
                                    "simulated");
    std::ostringstream os;
    emit(os, ds);
    if (out_path.empty()) {
        out << os.str();
    } else {
        atomic_write(out_path, os.str());
    }
    return kExitOk;
}

/// Parse arguments and dispatch. Never throws; errors map to exit codes.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Copula mixed models for bivariate meta-analysis of diagnostic test accuracy"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--nq", g.nq, "Gauss-Legendre nodes per dimension")->check(CLI::Range(1, 200));
    app.add_option("--seed", g.seed, "random seed");
    app.add_option("--quantiles", g.quantiles, "quantile-curve levels, comma separated");
    app.add_option("--levels", g.levels, "predictive-contour masses, comma separated");
    app.add_option("--jobs", g.jobs, "concurrent fits")->check(CLI::Range(1u, 256u));

    std::string data, model, margins = "normal,beta", copulas = "bvn,frank,clayton0,clayton90,clayton180,clayton270";
    std::string out_dir;
    bool khs = false, sarmanov = false;
    auto* fitc = app.add_subcommand("fit", "fit a grid of copula mixed models");
    fitc->fallthrough();
    fitc->add_option("--data", data, "study table (study,TP,FN,FP,TN)")->required();
    fitc->add_option("--model", model, "restrict to models, e.g. beta:clayton270,khs:frank,sarmanov");
    fitc->add_option("--margins", margins, "margins for the grid");
    fitc->add_option("--copulas", copulas, "copulas for the grid");
    fitc->add_flag("--khs", khs, "also fit the KHS approximation for each copula");
    fitc->add_flag("--sarmanov", sarmanov, "also fit the Sarmanov model");
    fitc->add_option("--out", out_dir, "directory for fit_report.csv and fit_report.json");

    std::string sroc_model = "normal:bvn";
    double coverage = 0.95;
    std::size_t grid_size = kDefaultGridSize, resolution = 400;
    auto* sroc = app.add_subcommand("sroc", "write SROC curves, summary point, region and contours");
    sroc->fallthrough();
    sroc->add_option("--data", data, "study table")->required();
    sroc->add_option("--model", sroc_model, "model, e.g. beta:clayton270");
    sroc->add_option("--coverage", coverage, "confidence-region coverage")->check(CLI::Range(0.0, 0.999999));
    sroc->add_option("--grid-size", grid_size, "points per curve")->check(CLI::Range(2, 100000));
    sroc->add_option("--resolution", resolution, "contour grid resolution")->check(CLI::Range(4, 4000));
    sroc->add_option("--out", out_dir, "output directory")->required();

    TruthFlags truth;
    std::size_t n_studies = 50, reps = 500;
    std::string fit_models = "beta:clayton270,normal:clayton270,khs:clayton270";
    StudySizeLaw law;
    double prevalence = 0.43;
    std::string out_path;
    auto add_truth = [&](CLI::App* c) {
        c->add_option("--truth", truth.model, "true model <margin>:<copula>");
        c->add_option("--pi1", truth.pi1, "true mean sensitivity");
        c->add_option("--pi2", truth.pi2, "true mean specificity");
        c->add_option("--scale1", truth.scale1, "true gamma1 or sigma1");
        c->add_option("--scale2", truth.scale2, "true gamma2 or sigma2");
        c->add_option("--tau", truth.tau, "true Kendall's tau");
        c->add_option("--N", n_studies, "studies per data set")->check(CLI::Range(2, 1000000));
        c->add_option("--size-shape", law.shape, "study-size gamma shape");
        c->add_option("--size-rate", law.rate, "study-size gamma rate");
        c->add_option("--size-lag", law.lag, "study-size shift");
        c->add_option("--prevalence", prevalence, "probability of disease");
    };
    auto* sim = app.add_subcommand("simulate", "small-sample efficiency study");
    sim->fallthrough();
    add_truth(sim);
    sim->add_option("--replications", reps, "replications")->check(CLI::Range(1, 10000000));
    sim->add_option("--fit", fit_models, "fitted models, comma separated");
    sim->add_option("--out", out_path, "CSV report path (JSON mirror alongside)");

    std::string rhos = "-0.5";
    double api = 0.7, agamma = 0.1;
    int an = 20;
    bool allow_large = false, with_mle = false;
    auto* asy = app.add_subcommand("asymptotics", "limiting KHS (and ML) estimators for constant group size");
    asy->fallthrough();
    asy->add_option("--rho", rhos, "true BVN correlations, comma separated");
    asy->add_option("--pi", api, "common pi");
    asy->add_option("--gamma", agamma, "common gamma");
    asy->add_option("--n", an, "common group size")->check(CLI::Range(1, kMaxGroupSize));
    asy->add_flag("--allow-large", allow_large, "permit group sizes above 20");
    asy->add_flag("--mle", with_mle, "also compute the limiting MLE");
    asy->add_option("--out", out_path, "CSV output path (JSON mirror alongside)");

    auto* gen = app.add_subcommand("generate", "draw one simulated study table");
    gen->fallthrough();
    add_truth(gen);
    gen->add_option("--out", out_path, "CSV output path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }

    try {
        if (*fitc) return cmd_fit(g, data, model, margins, copulas, khs, sarmanov, out_dir, out, err);
        if (*sroc) return cmd_sroc(g, data, sroc_model, coverage, grid_size, resolution, out_dir, out, err);
        if (*sim) return cmd_simulate(g, truth, n_studies, reps, fit_models, law, prevalence, out_path, out, err);
        if (*asy) return cmd_asymptotics(g, rhos, api, agamma, an, allow_large, with_mle, out_path, out, err);
        if (*gen) return cmd_generate(g, truth, n_studies, law, prevalence, out_path, out);
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ValidationError& e) {
        err << "invalid input: " << e.what() << '\n';
        return kExitValidation;
    } catch (const DomainError& e) {
        err << "invalid parameter: " << e.what() << '\n';
        return kExitValidation;
    } catch (const SizeError& e) {
        err << "invalid parameter: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitValidation;
}

}  // namespace copmeta::cli
