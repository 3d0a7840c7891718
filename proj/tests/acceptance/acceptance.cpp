// Acceptance suite: one line per criterion, exit status 0 unless a criterion
// fails that is not on the expected-failure list.

#include "falab/cli.hpp"
#include "falab/data.hpp"
#include "falab/experiments.hpp"
#include "falab/format.hpp"
#include "falab/parallel.hpp"
#include "falab/theory_verify.hpp"
#include "falab/trainers.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace falab;
namespace fs = std::filesystem;

namespace {

// Tolerances and sizes, frozen.
constexpr std::uint64_t kSeed = 7;
constexpr double kOracleTol = 1e-8;
constexpr double kClosedFormTol = 1e-10;
constexpr double kOracleSeconds = 30.0;
constexpr double kGradH = 1e-6;
constexpr double kGradTol = 1e-5;
constexpr double kGradFloor = 1e-4;  // relative error denominator floor
constexpr double kGradSeconds = 5.0;
constexpr double kContractionSlack = 1e-9;
constexpr std::size_t kLinConvSteps = 20000;
constexpr std::size_t kTanhMaxSteps = 20000;
constexpr double kTanhRatio = 1e-2;
constexpr std::size_t kMonotoneFrom = 10;
constexpr std::size_t kSeeds = 5;
// Sweeps run at η = 0.02; the alignment budget ηS_λ does not depend on η.
constexpr double kSweepEta = 0.02;
constexpr std::size_t kSlopeSteps = 3000;
constexpr std::size_t kSlopeRepeats = 20;
constexpr double kSlopeLo = -0.65, kSlopeHi = -0.35;
constexpr std::size_t kAlignRepeats = 5;
constexpr std::size_t kAlignAfterCutoff = 2000;
constexpr double kAlignMinCos = 0.05;
constexpr double kAlignGain = 5.0;
constexpr double kConcentrationSeconds = 120.0;
constexpr std::size_t kDriftRepeats = 10;
constexpr double kDriftRatio = 0.7;
const std::vector<std::size_t> kWidths = {200, 800, 3200, 12800};

// Parts known not to hold; see the decisions notes.
const std::set<std::string> kExpectedFailures = {"6", "9a"};

struct Part {
    std::string id;
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int number;
    std::string title;
    std::function<std::vector<Part>()> run;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

std::string details_of(const CheckResult& r) {
    std::string s = "violations=" + std::to_string(r.violations) + "/" + std::to_string(r.trials);
    for (const auto& [k, v] : r.details) s += " " + k + "=" + fmt(v);
    return s;
}

Dataset paper_data(Activation teacher, std::uint64_t seed) {
    return gen_synthetic(50, 150, TeacherSpec{150, 100, teacher}, seed, "/rep0");
}

std::vector<Part> oracle_parts(bool closed_forms) {
    OracleConfig cfg;
    cfg.instances = 20;
    cfg.steps = 200;
    cfg.closed_form_steps = 50;
    cfg.tolerance = kOracleTol;
    cfg.closed_form_tolerance = kClosedFormTol;
    cfg.seed = kSeed;
    cfg.threads = 1;
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = check_oracle_equivalence(cfg);
    const double secs = seconds_since(t0);
    if (closed_forms) return {{"2", res[1].pass, details_of(res[1])}};
    return {{"1", res[0].pass && secs < kOracleSeconds, details_of(res[0]) + " seconds=" + fmt(secs)}};
}

std::vector<Part> gradient_check() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::size_t nets = 0;
    for (Activation act : {Activation::identity, Activation::tanh, Activation::sigmoid}) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const std::size_t p = 1 + seed % 8, d = 1 + seed % 4, n = 1 + seed % 5;
            const Dataset data = gen_synthetic(n, d, TeacherSpec{d, 3, Activation::tanh}, seed);
            TwoLayerNet net = gaussian_init(p, d, act, seed);
            const Directions an = update_directions(net, data, net.beta);
            auto fd = [&](double& w) {
                const double w0 = w;
                w = w0 + kGradH;
                const double up = loss(net, data, 0.0);
                w = w0 - kGradH;
                const double down = loss(net, data, 0.0);
                w = w0;
                return (up - down) / (2 * kGradH);
            };
            auto rel = [](double a, double b) {
                return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kGradFloor});
            };
            for (std::size_t r = 0; r < p; ++r) {
                worst = std::max(worst, rel(an.dbeta[r], fd(net.beta[r])));
                for (std::size_t k = 0; k < d; ++k) worst = std::max(worst, rel(an.dW(r, k), fd(net.W(r, k))));
            }
            ++nets;
        }
    }
    const double secs = seconds_since(t0);
    return {{"3", worst <= kGradTol && secs < kGradSeconds,
             "nets=" + std::to_string(nets) + " max_rel_err=" + fmt(worst) + " seconds=" + fmt(secs)}};
}

std::vector<Part> linear_convergence() {
    std::size_t violations = 0;
    double worst = -INFINITY;
    for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
        const Dataset data = paper_data(Activation::identity, seed);
        const double gamma = lambda_min(gram(data.X));
        TwoLayerNet net = gaussian_init(3200, 150, Activation::identity, seed, "/rep0");
        const auto tr = train(net, data, 1e-4, Schedule::zero(), kLinConvSteps, Algorithm::fa);
        const auto c = check_contraction(tr, gamma, 1e-4, 2.0, kContractionSlack);
        violations += c.violations;
        for (const auto& [k, v] : c.details)
            if (k == "worst_excess") worst = std::max(worst, v);
    }
    return {{"4", violations == 0,
             "seeds=" + std::to_string(kSeeds) + " violations=" + std::to_string(violations) +
                 " worst_excess=" + fmt(worst)}};
}

std::vector<Part> nonlinear_convergence() {
    bool ok = true;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
        const Dataset data = paper_data(Activation::tanh, seed);
        TwoLayerNet net = gaussian_init(3200, 150, Activation::tanh, seed, "/rep0");
        TrainOptions opt;
        opt.stop_ratio = kTanhRatio;
        const auto tr = train(net, data, 1e-2, Schedule::zero(), kTanhMaxSteps, Algorithm::fa, opt);
        const auto recs = tr.all_records();
        std::size_t rises = 0;
        for (std::size_t t = kMonotoneFrom + 1; t < recs.size(); ++t)
            if (recs[t].err_norm > recs[t - 1].err_norm) ++rises;
        const double ratio = tr.terminal.err_norm / recs.front().err_norm;
        ok = ok && rises == 0 && ratio <= kTanhRatio;
        detail += " [seed " + std::to_string(seed) + ": steps=" + std::to_string(tr.terminal.t) +
                  " ratio=" + fmt(ratio) + " rises=" + std::to_string(rises) + "]";
    }
    return {{"5", ok, detail.substr(1)}};
}

ExperimentConfig sweep_base() {
    ExperimentConfig cfg;
    cfg.n = 50;
    cfg.d = 150;
    cfg.activation = Activation::identity;
    cfg.teacher_activation = Activation::identity;
    cfg.eta = kSweepEta;
    cfg.seed = kSeed;
    return cfg;
}

std::vector<Part> no_alignment_scaling(unsigned threads) {
    ExperimentConfig cfg = sweep_base();
    cfg.algorithm = Algorithm::fa;
    cfg.steps = kSlopeSteps;
    cfg.repeats = kSlopeRepeats;
    cfg.sweep_p = kWidths;
    const auto res = run_sweep(cfg, {}, threads);
    std::vector<double> w, m;
    std::string detail;
    for (const auto& c : res.cells) {
        w.push_back(static_cast<double>(c.p));
        m.push_back(c.mean_abs_cos);
        detail += " p" + std::to_string(c.p) + "=" + fmt(c.mean_abs_cos);
    }
    const auto check = check_no_alignment_scaling(w, m, kSlopeLo, kSlopeHi);
    return {{"6", check.pass, "slope=" + fmt(loglog_slope(w, m)) + " band=[" + fmt(kSlopeLo) + "," +
                                  fmt(kSlopeHi) + "] mean|cos|:" + detail}};
}

std::vector<Part> alignment_under_regularization(unsigned threads) {
    ExperimentConfig cfg = sweep_base();
    cfg.algorithm = Algorithm::fa_reg;
    cfg.schedule.kind = ScheduleSpecKind::paper_cutoff;
    cfg.repeats = kAlignRepeats;
    cfg.sweep_p = kWidths;

    // longest cutoff over the grid fixes the budget
    std::size_t max_T = 0;
    for (std::size_t k = 0; k < cfg.repeats; ++k) {
        const Dataset data = make_dataset(cfg, k);
        for (std::size_t p : kWidths)
            max_T = std::max(max_T, resolve_schedule(cfg.schedule, cfg, data, p).schedule.last_step());
    }
    cfg.steps = max_T + 1 + kAlignAfterCutoff;
    const auto reg = run_sweep(cfg, {}, threads);

    ExperimentConfig base = cfg;
    base.algorithm = Algorithm::fa;
    base.schedule = ScheduleSpec{};
    base.sweep_p = {kWidths.back()};
    const auto zero = run_sweep(base, {}, threads);
    const double cos0 = zero.cells.front().mean_abs_cos;

    bool min_ok = true;
    std::string detail;
    double cos_wide = 0.0;
    for (const auto& c : reg.cells) {
        min_ok = min_ok && c.mean_cos >= kAlignMinCos;
        detail += " p" + std::to_string(c.p) + "=" + fmt(c.mean_cos);
        if (c.p == kWidths.back()) cos_wide = c.mean_cos;
    }
    const bool gain_ok = cos_wide >= kAlignGain * cos0;
    return {{"7", min_ok && gain_ok,
             "steps=" + std::to_string(cfg.steps) + " mean_cos:" + detail + " lambda0_mean|cos|@" +
                 std::to_string(kWidths.back()) + "=" + fmt(cos0) + " gain=" + fmt(cos_wide / cos0)}};
}

std::vector<Part> concentration(unsigned threads) {
    ConcentrationConfig cfg;
    cfg.p = 4096;
    cfg.d = 32;
    cfg.trials = 10000;
    cfg.seed = kSeed;
    cfg.threads = threads;
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = check_init_concentration(cfg);
    const double secs = seconds_since(t0);
    bool ok = secs < kConcentrationSeconds;
    std::string detail;
    for (const auto& r : res) {
        ok = ok && r.pass;
        detail += " " + r.name + "=" + (r.pass ? "pass" : "FAIL") + "(" + std::to_string(r.violations) + ")";
    }
    return {{"8", ok, "seconds=" + fmt(secs) + detail}};
}

std::vector<Part> gram_conditions(unsigned threads) {
    GramCheckConfig cfg;
    cfg.n = 50;
    cfg.d = 200;
    cfg.p = 4096;
    cfg.act = Activation::tanh;
    cfg.inits = 2000;
    cfg.seed = kSeed;
    cfg.threads = threads;
    const auto rep = check_gram_conditions(cfg);
    std::vector<Part> parts;
    const char* ids[] = {"9a", "9b", "9c"};
    for (std::size_t k = 0; k < 3; ++k)
        parts.push_back({ids[k], rep.results[k].pass, rep.results[k].name + " " + details_of(rep.results[k])});
    return parts;
}

std::vector<Part> drift_scaling(unsigned threads) {
    double mean[2] = {0.0, 0.0};
    const std::size_t widths[2] = {3200, 12800};
    std::size_t max_steps = 0;
    for (int w = 0; w < 2; ++w) {
        std::vector<double> drift(kDriftRepeats);
        std::vector<std::size_t> steps(kDriftRepeats);
        parallel_for(kDriftRepeats, threads, [&](std::size_t k) {
            const std::string sfx = "/rep" + std::to_string(k);
            const Dataset data = gen_synthetic(50, 150, TeacherSpec{150, 100, Activation::tanh}, kSeed, sfx);
            TwoLayerNet net = gaussian_init(widths[w], 150, Activation::tanh, kSeed, sfx);
            TrainOptions opt;
            opt.stop_ratio = kTanhRatio;
            const auto tr = train(net, data, 1e-2, Schedule::zero(), kTanhMaxSteps, Algorithm::fa, opt);
            drift[k] = tr.terminal.max_beta_drift;
            steps[k] = tr.terminal.t;
        });
        for (std::size_t k = 0; k < kDriftRepeats; ++k) {
            mean[w] += drift[k] / kDriftRepeats;
            max_steps = std::max(max_steps, steps[k]);
        }
    }
    const double ratio = mean[1] / mean[0];
    return {{"10", ratio <= kDriftRatio,
             "mean_beta_drift p3200=" + fmt(mean[0]) + " p12800=" + fmt(mean[1]) + " ratio=" + fmt(ratio) +
                 " max_steps=" + std::to_string(max_steps)}};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<Part> determinism(const fs::path& scratch) {
    const fs::path dir = scratch / "determinism";
    fs::create_directories(dir);
    const nlohmann::json doc = {{"n", 20},         {"d", 40},
                                {"p", 300},        {"activation", "tanh"},
                                {"algorithm", "fa_reg"},
                                {"eta", 0.01},     {"steps", 300},
                                {"seed", kSeed},   {"schedule", {{"kind", "cutoff"}, {"lambda", 1.0}, {"T", 100}}}};
    std::ofstream(dir / "config.json") << doc.dump(2);
    bool ok = true;
    for (const char* run : {"a", "b"}) {
        const std::string cfg = (dir / "config.json").string(), out = (dir / run).string();
        const char* argv[] = {"fa-lab", "train", "--config", cfg.c_str(), "--out", out.c_str()};
        std::ostringstream sink;
        ok = ok && run_cli(6, argv, sink, sink) == kExitOk;
    }
    const std::string a = slurp(dir / "a" / "trajectory.csv"), b = slurp(dir / "b" / "trajectory.csv");
    ok = ok && !a.empty() && a == b;
    return {{"11", ok, "bytes=" + std::to_string(a.size()) + (a == b ? " identical" : " DIFFER")}};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance suite"};
    std::vector<int> only;
    unsigned threads = 0;
    std::string scratch = (fs::temp_directory_path() / "falab_acceptance").string();
    app.add_option("--only", only, "run just these criteria")->delimiter(',');
    app.add_option("--threads", threads, "worker threads (0: hardware)");
    app.add_option("--scratch", scratch, "directory for temporary outputs");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria = {
        {1, "oracle equivalence", [] { return oracle_parts(false); }},
        {2, "closed forms", [] { return oracle_parts(true); }},
        {3, "gradient check", gradient_check},
        {4, "linear convergence", linear_convergence},
        {5, "nonlinear convergence", nonlinear_convergence},
        {6, "no-alignment scaling", [&] { return no_alignment_scaling(threads); }},
        {7, "alignment under regularization", [&] { return alignment_under_regularization(threads); }},
        {8, "concentration suite", [&] { return concentration(threads); }},
        {9, "Gram conditions", [&] { return gram_conditions(threads); }},
        {10, "drift scaling", [&] { return drift_scaling(threads); }},
        {11, "determinism", [&] { return determinism(scratch); }},
    };

    int unexpected = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.number) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<Part> parts;
        std::string error;
        try {
            parts = c.run();
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double secs = seconds_since(t0);

        bool failed = !error.empty(), all_expected = error.empty();
        std::vector<std::string> xpass;
        for (const auto& p : parts) {
            const bool expected = kExpectedFailures.count(p.id) > 0;
            if (!p.pass) {
                failed = true;
                all_expected = all_expected && expected;
            } else if (expected) {
                xpass.push_back(p.id);
            }
        }
        std::string status = "PASS";
        if (failed && all_expected)
            status = "FAIL (expected; see ledger)";
        else if (failed)
            status = "FAIL";
        if (failed && !all_expected) ++unexpected;
        for (const auto& x : xpass) status += " XPASS(" + x + ")";

        std::cout << "criterion " << c.number << " [" << c.title << "]: " << status << " (" << fmt(secs)
                  << " s)\n";
        for (const auto& p : parts)
            std::cout << "    " << p.id << " " << (p.pass ? "pass" : "fail") << ": " << p.detail << "\n";
        if (!error.empty()) std::cout << "    error: " << error << "\n";
        std::cout.flush();
    }
    std::cout << (unexpected == 0 ? "ACCEPTANCE OK" : "ACCEPTANCE FAILED") << " (" << unexpected
              << " unexpected failure" << (unexpected == 1 ? "" : "s") << ")\n";
    return unexpected == 0 ? 0 : 1;
}
