#include "falab/cli.hpp"

#include "falab/errors.hpp"
#include "falab/experiments.hpp"
#include "falab/format.hpp"
#include "falab/trainers.hpp"

#include <CLI11.hpp>

#include <ostream>
#include <string>

namespace falab {

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "experiment config (JSON)")->required();
    cmd->add_option("--out", c.out, "output directory")->required();
    cmd->add_option("--seed", c.seed, "override the master seed");
    cmd->add_option("--threads", c.threads, "worker threads, 0 = all cores")->capture_default_str();
}

ExperimentConfig load(const Common& c) {
    ExperimentConfig cfg = load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    return cfg;
}

int cmd_train(const Common& c, std::ostream& out) {
    const ExperimentConfig cfg = load(c);
    const SingleRun run = run_single(cfg, c.out);
    const auto& s = run.summary;
    out << "steps=" << cfg.steps << " final_err_norm=" << format_double(s.final_err_norm)
        << " final_cos_align=" << format_double(s.final_cos_align)
        << " lambda=" << format_double(run.schedule.schedule.lambda()) << "\n";
    return kExitOk;
}

int cmd_sweep(const Common& c, std::ostream& out) {
    const ExperimentConfig cfg = load(c);
    const SweepResult res = run_sweep(cfg, c.out, c.threads);
    for (const auto& cell : res.cells) {
        out << "p=" << cell.p << " lambda=" << format_double(cell.lambda)
            << " mean_cos=" << format_double(cell.mean_cos)
            << " mean_final_err=" << format_double(cell.mean_final_err);
        if (cell.any_diverged) out << " DIVERGED";
        out << "\n";
    }
    return kExitOk;
}

int cmd_verify(const Common& c, const std::string& suite, std::ostream& out) {
    const ExperimentConfig cfg = load(c);
    const VerifyReport rep = run_verify(cfg, suite.empty() ? cfg.verify.suite : suite, c.out, c.threads);
    for (const auto& r : rep.results) out << format_check(r) << "\n";
    return rep.all_pass() ? kExitOk : kExitVerifyFailed;
}

int cmd_gen_data(const Common& c, std::ostream& out) {
    const ExperimentConfig cfg = load(c);
    const Dataset data = gen_data(cfg, c.out);
    out << "n=" << data.n() << " d=" << data.d() << " teacher=" << to_string(cfg.teacher_activation)
        << " seed=" << cfg.seed << "\n";
    return kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Feedback alignment experiments for two-layer networks", "fa-lab"};
    app.require_subcommand(1);
    Common train_opts, sweep_opts, verify_opts, data_opts;
    std::string suite;
    auto* train_cmd = app.add_subcommand("train", "train one network and write its trajectory");
    add_common(train_cmd, train_opts);
    auto* sweep_cmd = app.add_subcommand("sweep", "run the width x lambda grid with repeats");
    add_common(sweep_cmd, sweep_opts);
    auto* verify_cmd = app.add_subcommand("verify", "run Monte-Carlo and numerical checks");
    add_common(verify_cmd, verify_opts);
    verify_cmd->add_option("--suite", suite,
                           "concentration|isometry|gram|dynamics|contraction|alignment|all");
    auto* data_cmd = app.add_subcommand("gen-data", "write a synthetic teacher dataset");
    add_common(data_cmd, data_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*train_cmd) return cmd_train(train_opts, out);
        if (*sweep_cmd) return cmd_sweep(sweep_opts, out);
        if (*verify_cmd) return cmd_verify(verify_opts, suite, out);
        if (*data_cmd) return cmd_gen_data(data_opts, out);
    } catch (const DivergenceError& e) {
        err << "error: " << e.what() << "\n";
        return kExitVerifyFailed;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ContractViolation& e) {
        err << "invalid input: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ParseError& e) {
        err << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const SchemaError& e) {
        err << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const EmptyDatasetError& e) {
        err << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

} // namespace falab
