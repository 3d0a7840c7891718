#pragma once

// Declarative run descriptions and the drivers behind the command line.

#include "falab/network.hpp"
#include "falab/theory_verify.hpp"
#include "falab/trainers.hpp"

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace falab {

enum class ScheduleSpecKind { zero, constant, cutoff, exp_decay, paper_cutoff };

struct ScheduleSpec {
    ScheduleSpecKind kind = ScheduleSpecKind::zero;
    double lambda = 0.0;       ///< constant, cutoff
    std::size_t last_step = 0; ///< cutoff T
    double lambda0 = 0.0;      ///< exp_decay
    double rate = 0.0;         ///< exp_decay
};

struct VerifySettings {
    std::string suite = "all";
    ConcentrationConfig concentration;
    // isometry
    std::size_t isometry_n = 50;
    std::size_t isometry_d = 1500;
    double isometry_epsilon = 0.5;
    std::size_t isometry_trials = 500;
    double isometry_delta = 0.1;
    GramCheckConfig gram;
    OracleConfig oracle;
    double alignment_threshold = 0.1;
    /// start of the a(t) window; unset means a_bound_burn_in
    std::optional<std::size_t> alignment_tau;
};

struct ExperimentConfig {
    std::size_t n = 50;
    std::size_t d = 150;
    std::size_t p = 3200;
    Activation activation = Activation::identity;
    Algorithm algorithm = Algorithm::fa;
    double eta = 1e-4;
    std::size_t steps = 1000;
    ScheduleSpec schedule;
    std::uint64_t seed = 0;
    std::size_t repeats = 1;
    std::vector<std::size_t> sweep_p;
    std::vector<double> sweep_lambda;
    double cutoff_cS = 8.0;
    double cutoff_L = 12.0;
    Activation teacher_activation = Activation::identity;
    std::size_t teacher_p = 100;
    std::filesystem::path data_path;  ///< empty: synthetic data
    bool project_labels = false;
    VerifySettings verify;
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
ExperimentConfig parse_config(const nlohmann::json& doc,
                              const std::filesystem::path& base_dir = {});
/// IoError when unreadable, ConfigError when malformed.
ExperimentConfig load_config(const std::filesystem::path& path);
void validate(const ExperimentConfig& cfg);

/// Data of repeat k: the CSV file when given, otherwise synthetic data from
/// the streams with suffix "/rep{k}".
Dataset make_dataset(const ExperimentConfig& cfg, std::size_t repeat);

struct ResolvedSchedule {
    Schedule schedule = Schedule::zero();
    double gamma = 0.0;       ///< λ_min(XXᵀ)
    double lambda_max = 0.0;  ///< λ_max(XXᵀ)
    double budget = 0.0;      ///< S_λ
};

ResolvedSchedule resolve_schedule(const ScheduleSpec& spec, const ExperimentConfig& cfg,
                                  const Dataset& data, std::size_t p);

struct RunSummary {
    double final_err_norm = 0.0;
    double final_cos_align = 0.0;
    double final_beta_drift = 0.0;
    double final_w_drift = 0.0;
    double initial_err_norm = 0.0;
    /// First t with ‖e(t)‖ ≤ ‖e(0)‖/2; empty when never reached.
    std::optional<std::size_t> steps_to_half_error;
};

RunSummary summarize(const Trajectory& traj);

/// Header plus one row per record (the terminal state is not written).
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

struct SingleRun {
    Trajectory trajectory;
    RunSummary summary;
    ResolvedSchedule schedule;
};

/// Repeat 0 of the configuration. Writes trajectory.csv and summary.json when
/// out_dir is non-empty. On divergence the partial CSV is written before the
/// DivergenceError propagates.
SingleRun run_single(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct SweepCell {
    std::size_t p = 0;
    double lambda = 0.0;
    std::vector<RunSummary> runs;  ///< by repeat
    std::vector<bool> diverged;
    double mean_cos = 0.0;
    double std_cos = 0.0;
    double mean_abs_cos = 0.0;
    double mean_final_err = 0.0;
    double std_final_err = 0.0;
    double mean_beta_drift = 0.0;
    bool any_diverged = false;
};

struct SweepResult {
    std::vector<SweepCell> cells;  ///< p-major, then λ, in config order
};

/// Runs every (p, λ, repeat) job on up to `threads` workers. Writes sweep.csv
/// and sweep_runs.csv when out_dir is non-empty.
SweepResult run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                      unsigned threads);

/// Aggregate CSV with columns p,lambda,mean_cos,std_cos,mean_final_err,std_final_err.
void write_sweep_csv(const SweepResult& res, const std::filesystem::path& path);

struct VerifyReport {
    std::vector<CheckResult> results;
    bool all_pass() const;
};

/// suite: concentration, isometry, gram, dynamics, contraction, alignment or all.
VerifyReport run_verify(const ExperimentConfig& cfg, const std::string& suite,
                        const std::filesystem::path& out_dir, unsigned threads);

std::string format_check(const CheckResult& r);
nlohmann::json check_to_json(const CheckResult& r);

/// Writes data.csv into out_dir and returns the dataset.
Dataset gen_data(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

} // namespace falab
