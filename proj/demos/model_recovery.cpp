// How often does the generating model attain the best log-likelihood among the
// twelve copula mixed models? Usage: model_recovery [runs] [N] [seed] [rounded|binomial]
#include <cstdio>
#include <string>
#include <vector>

#include "copmeta/copmeta.hpp"

using namespace copmeta;

int main(int argc, char** argv) {
    const std::size_t runs = argc > 1 ? std::stoul(argv[1]) : 100;
    const std::size_t n_studies = argc > 2 ? std::stoul(argv[2]) : 50;
    const std::uint64_t seed = argc > 3 ? std::stoull(argv[3]) : 99;
    const CountDraw counts = argc > 4 && std::string(argv[4]) == "binomial" ? CountDraw::binomial : CountDraw::rounded;
    const ModelSpec truth = reference_truth();

    std::vector<ModelSpec> grid;
    for (const MarginSpec& m : {MarginSpec::normal(0.5, 1.0), MarginSpec::beta(0.5, 0.1)})
        for (const CopulaSpec& c : {CopulaSpec::bvn(0.0), CopulaSpec::frank(1.0), CopulaSpec::clayton(1.0, 0),
                                    CopulaSpec::clayton(1.0, 90), CopulaSpec::clayton(1.0, 180),
                                    CopulaSpec::clayton(1.0, 270)})
            grid.push_back({m, m, c});
    auto label = [](const ModelSpec& m) {
        return std::string(margin_label(m.margin1.kind)) + ":" + copula_label(m.copula);
    };
    const std::string want = label(truth);

    std::size_t exact = 0, same_copula = 0;
    std::vector<std::size_t> wins(grid.size(), 0);
    for (std::size_t r = 0; r < runs; ++r) {
        auto rng = replication_rng(seed, r);
        const auto data = generate_meta_dataset(n_studies, truth, rng, {}, 0.43, nullptr, counts);
        std::size_t best = 0;
        double best_ll = -kInf;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const FitResult f = fit(data, grid[k]);
            if (f.loglik.total > best_ll) best_ll = f.loglik.total, best = k;
        }
        ++wins[best];
        if (label(grid[best]) == want) ++exact;
        if (copula_label(grid[best].copula) == copula_label(truth.copula)) ++same_copula;
    }
    for (std::size_t k = 0; k < grid.size(); ++k) std::printf("%-18s %zu\n", label(grid[k]).c_str(), wins[k]);
    std::printf("true model %s best in %zu of %zu runs; true copula best in %zu\n", want.c_str(), exact, runs,
                same_copula);
    return 0;
}
