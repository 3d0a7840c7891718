#pragma once

// Absolute constants of the initialization concentration bounds. Each is the
// empirical (1 − δ) quantile of the bounded statistic divided by its scale,
// so that the nominal coverage holds exactly on the pilot sample.
//
// Pilot: tools/calibrate_constants, p = 4096, d = 32, n = 50, δ = 0.05,
// 100000 trials, master seed 20240601 (the test suite uses other seeds).

namespace falab::calibrated {

inline constexpr double kPilotP = 4096;
inline constexpr double kPilotDelta = 0.05;

/// |bᵀβ(0)|/√p ≤ c·√log(1/δ)
inline constexpr double c_inner = 1.1377785282628763;
/// ‖bᵀW(0)‖/√p ≤ c·√(d·log(d/δ))
inline constexpr double c_bW = 0.47294863996895958;
/// |‖b‖²/p − 1| ≤ (c/√p)·√log(1/δ)
inline constexpr double c_bnorm = 1.6020988772313305;
/// (1/p)·Σ|b_r| ≤ c
inline constexpr double c_sum_abs_b = 0.81352479524214605;
/// (1/p)·Σ|b_r β_r(0)| ≤ c
inline constexpr double c_sum_abs_bbeta = 0.65665093812096276;
/// ‖e(0)‖ ≤ c·√n, tanh student and tanh teacher
inline constexpr double c_e0 = 1.0991678112983743;

} // namespace falab::calibrated
