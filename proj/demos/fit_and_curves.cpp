// Simulate a meta-analysis, fit three copula mixed models, compare them with
// Vuong's test and print the median summary curve of the preferred one.
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "copmeta/copmeta.hpp"

using namespace copmeta;

int main(int argc, char** argv) {
    const std::size_t n_studies = argc > 1 ? std::stoul(argv[1]) : 40;
    std::mt19937_64 rng(argc > 2 ? std::stoull(argv[2]) : 7);
    const ModelSpec truth = reference_truth();
    const std::vector<StudyRecord> data = generate_meta_dataset(n_studies, truth, rng);

    struct Candidate {
        std::string label;
        ModelSpec tmpl;
    };
    const std::vector<Candidate> candidates{
        {"normal:bvn", {MarginSpec::normal(0.5, 1.0), MarginSpec::normal(0.5, 1.0), CopulaSpec::bvn(0.0)}},
        {"beta:frank", {MarginSpec::beta(0.5, 0.1), MarginSpec::beta(0.5, 0.1), CopulaSpec::frank(-1.0)}},
        {"beta:clayton270", {MarginSpec::beta(0.5, 0.1), MarginSpec::beta(0.5, 0.1), CopulaSpec::clayton(1.0, 270)}},
    };

    std::vector<FitResult> fits;
    std::printf("%-16s %8s %8s %8s %8s %8s %10s\n", "model", "pi1", "pi2", "scale1", "scale2", "tau", "loglik");
    for (const auto& c : candidates) {
        fits.push_back(fit(data, c.tmpl));
        const FitResult& r = fits.back();
        std::printf("%-16s %8.4f %8.4f %8.4f %8.4f %8.4f %10.3f%s\n", c.label.c_str(), r.estimates[0], r.estimates[1],
                    r.estimates[2], r.estimates[3], r.tau_hat.value, r.loglik.total, r.boundary ? "  (boundary)" : "");
    }

    std::size_t best = 0;
    for (std::size_t k = 1; k < fits.size(); ++k)
        if (fits[k].loglik.total > fits[best].loglik.total) best = k;
    for (std::size_t k = 0; k < fits.size(); ++k) {
        if (k == best) continue;
        const VuongResult v = vuong_test(fits[k].loglik, fits[best].loglik);
        std::printf("Vuong %s vs %s: z = %.3f, p = %.4f\n", candidates[best].label.c_str(), candidates[k].label.c_str(),
                    v.statistic, v.p_value);
    }

    const QuantileCurve curve = quantile_curve(fits[best], 0.5, linear_grid(9, 0.05, 0.95));
    std::printf("\nmedian curve of %s\n%8s %8s\n", candidates[best].label.c_str(), "fpr", "sens");
    for (const RocPoint& p : curve.points) std::printf("%8.3f %8.3f\n", p.fpr, p.sens);

    const SummaryRegion s = summary_point_region(fits[best], 0.95);
    std::printf("\nsummary point: sensitivity %.3f, specificity %.3f\n", s.sensitivity, s.specificity);
    return 0;
}
