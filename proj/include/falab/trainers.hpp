#pragma once

// Update rules for the two-layer network and the training loop.
//
// All three rules share one step: β ← (1−ηλ)β − η·∂β and W ← W − η·∂W,
// where both directions are evaluated at the pre-step (W, β, e). They differ
// only in the vector that carries the error back to the first layer: β for
// backpropagation, the fixed random b for feedback alignment.

#include "falab/errors.hpp"
#include "falab/linalg.hpp"
#include "falab/network.hpp"

#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

namespace falab {

enum class Algorithm { bp, fa, fa_reg };

std::string_view to_string(Algorithm algo);
Algorithm parse_algorithm(std::string_view name);

enum class ScheduleKind { zero, constant, cutoff, exp_decay };

std::string_view to_string(ScheduleKind kind);

/// Regularization rate λ(t) as a function of the step index.
class Schedule {
public:
    static Schedule zero();
    static Schedule constant(double lambda);
    /// λ for t ≤ last_step, 0 afterwards.
    static Schedule cutoff(double lambda, std::size_t last_step);
    /// λ₀·(1−rate)^t
    static Schedule exp_decay(double lambda0, double rate);

    double at(std::size_t t) const;
    /// Σ_t λ(t); infinite for a positive constant schedule.
    double cumulative() const;

    ScheduleKind kind() const noexcept { return kind_; }
    double lambda() const noexcept { return lambda_; }
    std::size_t last_step() const noexcept { return last_step_; }
    double rate() const noexcept { return rate_; }

private:
    Schedule(ScheduleKind kind, double lambda, std::size_t last_step, double rate);

    ScheduleKind kind_ = ScheduleKind::zero;
    double lambda_ = 0.0;
    std::size_t last_step_ = 0;
    double rate_ = 0.0;
};

/// Cutoff schedule of the linear alignment result: λ = L·γ and
/// T = ⌊S_λ/λ⌋ with S_λ = c_S·γ·√(γp) / (η·√n·M).
struct PaperCutoff {
    Schedule schedule;
    double lambda = 0.0;
    double budget = 0.0;  ///< S_λ
    std::size_t last_step = 0;
};

PaperCutoff paper_cutoff_schedule(double gamma, double lambda_max, std::size_t p, double eta,
                                  std::size_t n, double c_s, double L);

/// Diagnostics of the state at step t, taken before the update at t.
struct StepRecord {
    std::size_t t = 0;
    double loss = 0.0;
    double err_norm = 0.0;
    double cos_align = 0.0;  ///< NaN when b or β is zero
    double a_t = 0.0;        ///< ⟨e, −y/‖y‖⟩
    double xi_norm = 0.0;
    double max_w_drift = 0.0;
    double max_beta_drift = 0.0;
    double lambda_t = 0.0;
    double s_hat_norm = 0.0;  ///< ‖ŝ(t)‖
    double S_hat = 0.0;       ///< Ŝ(t)
};

struct Trajectory {
    /// One record per update, t = 0 .. steps−1.
    std::vector<StepRecord> records;
    /// State after the last update (t = steps).
    StepRecord terminal;
    double y_norm = 0.0;

    Vector s;      ///< s(t) at the last recorded t
    Vector s_hat;  ///< ŝ(t) at the last recorded t
    double S_hat = 0.0;

    /// e(0), e(1), ... when TrainOptions::keep_errors is set.
    std::vector<Vector> errors;

    /// Records followed by the terminal record.
    std::vector<StepRecord> all_records() const;
};

struct TrainOptions {
    bool keep_errors = false;
    /// Stop early once ‖e(t)‖ ≤ stop_ratio·‖e(0)‖. Zero disables.
    double stop_ratio = 0.0;
};

/// Training blew up: ‖e‖ non-finite or above 1e12.
class DivergenceError : public Error {
public:
    DivergenceError(std::size_t step, Trajectory partial);

    /// Last step whose error was finite and bounded.
    std::size_t last_finite_step() const noexcept { return last_finite_step_; }
    const Trajectory& partial() const noexcept { return partial_; }

private:
    std::size_t last_finite_step_;
    Trajectory partial_;
};

inline constexpr double kDivergenceThreshold = 1e12;

struct Directions {
    Matrix dW;    ///< p×d
    Vector dbeta; ///< p
};

/// ∂W and ∂β of ½‖e‖² with the first-layer error routed through `backward`.
/// With backward = β this is the exact gradient.
Directions update_directions(const TwoLayerNet& net, const Dataset& data,
                             std::span<const double> backward);

void bp_step(TwoLayerNet& net, const Dataset& data, double eta);
void fa_step(TwoLayerNet& net, const Dataset& data, double eta);
/// Throws ContractViolation unless 0 ≤ η·λ < 1.
void fa_reg_step(TwoLayerNet& net, const Dataset& data, double eta, double lambda_t);

/// One update of the given rule. `fa` ignores lambda_t.
void step(TwoLayerNet& net, const Dataset& data, double eta, double lambda_t, Algorithm algo);

/// Runs `steps` updates in place on `net`. `fa` trains with λ ≡ 0 whatever
/// the schedule; `bp` and `fa_reg` shrink β by (1−ηλ(t)) each step.
Trajectory train(TwoLayerNet& net, const Dataset& data, double eta, const Schedule& schedule,
                 std::size_t steps, Algorithm algo, const TrainOptions& options = {});

} // namespace falab
