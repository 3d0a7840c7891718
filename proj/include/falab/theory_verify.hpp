#pragma once

// Monte-Carlo and per-run checks of the convergence, alignment and
// concentration statements. Every check reports a violation count and passes
// iff violations/trials ≤ δ + 3·√(δ(1−δ)/trials).

#include "falab/calibrated_constants.hpp"
#include "falab/linalg.hpp"
#include "falab/network.hpp"
#include "falab/trainers.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace falab {

struct CheckResult {
    std::string name;
    std::size_t trials = 0;
    std::size_t violations = 0;
    double nominal_delta = 0.0;
    bool pass = false;
    std::vector<std::pair<std::string, double>> details;
};

bool binomial_pass(std::size_t violations, std::size_t trials, double nominal_delta);

CheckResult make_check(std::string name, std::size_t trials, std::size_t violations,
                       double nominal_delta,
                       std::vector<std::pair<std::string, double>> details = {});

struct ConcentrationConstants {
    double inner = calibrated::c_inner;
    double bW = calibrated::c_bW;
    double bnorm = calibrated::c_bnorm;
    double sum_abs_b = calibrated::c_sum_abs_b;
    double sum_abs_bbeta = calibrated::c_sum_abs_bbeta;
    double e0 = calibrated::c_e0;
};

struct ConcentrationConfig {
    std::size_t p = 4096;
    std::size_t d = 32;
    std::size_t n = 50;          ///< samples for the ‖e(0)‖ bound
    std::size_t teacher_p = 100;
    std::size_t trials = 10000;
    double delta = 0.05;
    double epsilon = 0.5;        ///< ‖W(0)ᵀW(0)/p − I‖ ≤ ε
    double tail_t = 3.0;         ///< t in the χ² and inner-product tails
    std::uint64_t seed = 1;
    unsigned threads = 0;
    ConcentrationConstants constants;
};

/// Raw statistics of one initialization draw.
struct ConcentrationSample {
    double inner_abs = 0.0;      ///< |bᵀβ(0)|
    double bW_norm = 0.0;        ///< ‖bᵀW(0)‖
    double b_sq = 0.0;           ///< ‖b‖²
    double ww_dev = 0.0;         ///< ‖W(0)ᵀW(0)/p − I‖
    double sum_abs_b = 0.0;      ///< Σ|b_r|
    double sum_abs_bbeta = 0.0;  ///< Σ|b_r β_r(0)|
    double max_abs_b = 0.0;
    double e0_norm = 0.0;
};

/// Data for the ‖e(0)‖ bound is drawn once from `seed`; the initialization of
/// trial k comes from the streams with suffix "/trial{k}".
ConcentrationSample concentration_sample(const ConcentrationConfig& cfg, const Dataset& data,
                                         std::size_t trial);

std::vector<ConcentrationSample> concentration_samples(const ConcentrationConfig& cfg);

std::vector<CheckResult> check_init_concentration(const ConcentrationConfig& cfg);

/// X with N(0,1/d) entries is (1−ε, 4ε)-isometric: λ_min(XXᵀ) ≥ 1−ε and
/// λ_max(XXᵀ) ≤ (1+4ε)(1−ε).
CheckResult check_isometry(std::size_t n, std::size_t d, double epsilon, std::size_t trials,
                           double delta, std::uint64_t seed, unsigned threads = 0);

/// Counts steps with ‖e(t+1)‖ > (1 − ηγ/divisor − ηλ(t))‖e(t)‖ + ηλ(t)‖y‖ + slack.
/// divisor is 2 for linear networks and 4 for nonlinear ones.
CheckResult check_contraction(const Trajectory& traj, double gamma, double eta,
                              double divisor = 2.0, double slack = 1e-9);

/// η·Ŝ(t) / (√(pγ)·‖ŝ(t)‖) at every recorded step, terminal included.
std::vector<double> alignment_ratios(const Trajectory& traj, std::size_t p, double eta,
                                     double gamma);

/// Violations are steps t > last_step whose ratio is not above threshold.
CheckResult check_alignment_condition(const Trajectory& traj, std::size_t p, double eta,
                                      double gamma, std::size_t last_step,
                                      double threshold = 0.1);

/// Burn-in before the a(t) bound applies: ⌈log((λ+γ/2)/(γ/2)) / −log(1−η(λ+γ/2))⌉,
/// the time for the λ-contraction to shrink the initial transient by (λ+γ/2)/(γ/2).
std::size_t a_bound_burn_in(double lambda, double gamma, double eta);

/// a(t) ≥ (λ−γ)/(λ+γ)·‖y‖ − slack for τ ≤ t ≤ last_step. The bound presumes
/// a near-isometric design, λ_max(XXᵀ) close to γ.
CheckResult check_a_lower_bound(const Trajectory& traj, double lambda, double gamma,
                                std::size_t tau, std::size_t last_step, double slack = 1e-9);

/// Least-squares slope of log(value) against log(width).
double loglog_slope(std::span<const double> widths, std::span<const double> values);

/// Needs at least four widths; passes iff the slope lies in [lo, hi].
CheckResult check_no_alignment_scaling(std::span<const double> widths,
                                       std::span<const double> mean_abs_cos, double lo = -0.65,
                                       double hi = -0.35);

struct OracleConfig {
    std::size_t instances = 20;
    std::size_t steps = 200;
    std::size_t closed_form_steps = 50;
    double tolerance = 1e-8;              ///< relative, on e(t)
    double closed_form_tolerance = 1e-10; ///< absolute, on W and β
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

/// Random linear instances (n ≤ 20, d ≤ 60, p ≤ 500, η ≤ 0.05) cycling through
/// zero, constant and cutoff schedules. Returns the recurrence-vs-trainer check
/// and the closed-form check.
std::vector<CheckResult> check_oracle_equivalence(const OracleConfig& cfg);

struct GramCheckConfig {
    std::size_t n = 50;
    std::size_t d = 200;
    std::size_t p = 4096;
    Activation act = Activation::tanh;
    std::size_t inits = 2000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    double sigma_limit = 5.0;
    double lambda_min_delta = 0.01;  ///< λ_min(G(0)) > 0 in ≥ 99% of inits
    double h_bound_delta = 0.05;     ///< ‖H(0)‖ ≤ λ_min/2 in ≥ 95% of inits
};

struct GramCheckReport {
    std::vector<CheckResult> results;
    Matrix mean_G;
    Matrix std_error;   ///< per-entry standard error of the mean
    Matrix reference;   ///< G̃
    Matrix exact;       ///< infinite-width E G(0)
    double max_z_reference = 0.0;
    double max_z_exact = 0.0;
};

/// X is drawn once from "X"; init k uses suffix "/init{k}".
GramCheckReport check_gram_conditions(const GramCheckConfig& cfg);

} // namespace falab
