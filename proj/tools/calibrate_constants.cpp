// Pilot run that fixes the absolute constants of the initialization
// concentration bounds. Prints a replacement for calibrated_constants.hpp.

#include "falab/theory_verify.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

int main(int argc, char** argv) {
    CLI::App app{"Calibrate concentration constants"};
    falab::ConcentrationConfig cfg;
    cfg.trials = 100000;
    cfg.seed = 20240601;
    app.add_option("--trials", cfg.trials);
    app.add_option("--seed", cfg.seed);
    app.add_option("--p", cfg.p);
    app.add_option("--d", cfg.d);
    app.add_option("--delta", cfg.delta);
    app.add_option("--threads", cfg.threads);
    CLI11_PARSE(app, argc, argv);

    const auto samples = falab::concentration_samples(cfg);
    const double p = double(cfg.p), d = double(cfg.d), n = double(cfg.n);
    const double L = std::log(1.0 / cfg.delta);

    // smallest c with #{stat > c} ≤ δ·trials
    auto quantile = [&](const std::function<double(const falab::ConcentrationSample&)>& stat) {
        std::vector<double> v;
        v.reserve(samples.size());
        for (const auto& s : samples) v.push_back(stat(s));
        std::sort(v.begin(), v.end());
        const auto allowed = static_cast<std::size_t>(std::floor(cfg.delta * double(v.size())));
        return v[v.size() - 1 - allowed];
    };

    const double c_inner = quantile([&](auto& s) { return s.inner_abs / std::sqrt(p) / std::sqrt(L); });
    const double c_bW = quantile([&](auto& s) {
        return s.bW_norm / std::sqrt(p) / std::sqrt(d * std::log(d / cfg.delta));
    });
    const double c_bnorm =
        quantile([&](auto& s) { return std::abs(s.b_sq / p - 1.0) * std::sqrt(p) / std::sqrt(L); });
    const double c_sum_abs_b = quantile([&](auto& s) { return s.sum_abs_b / p; });
    const double c_sum_abs_bbeta = quantile([&](auto& s) { return s.sum_abs_bbeta / p; });
    const double c_e0 = quantile([&](auto& s) { return s.e0_norm / std::sqrt(n); });

    std::printf("c_inner         = %.17g\n", c_inner);
    std::printf("c_bW            = %.17g\n", c_bW);
    std::printf("c_bnorm         = %.17g\n", c_bnorm);
    std::printf("c_sum_abs_b     = %.17g\n", c_sum_abs_b);
    std::printf("c_sum_abs_bbeta = %.17g\n", c_sum_abs_bbeta);
    std::printf("c_e0            = %.17g\n", c_e0);
    return 0;
}
