#pragma once

// Exact error recurrence of a linear network trained with (regularized)
// feedback alignment. Nothing here touches W or β directly; the weights can
// be recovered at any step from the running sums.

#include "falab/linalg.hpp"
#include "falab/trainers.hpp"

#include <cstddef>
#include <span>

namespace falab {

struct DynState {
    // evolving
    Vector e;           ///< e(t)
    Vector s_prev;      ///< s(t−1) = Σ_{i<t} e(i)
    Vector s_hat_prev;  ///< ŝ(t−1)
    double S_hat_prev = 0.0;  ///< Ŝ(t−1)
    double decay = 1.0;       ///< Π_{i<t}(1−ηλ(i))
    std::size_t t = 0;

    // fixed at construction
    Matrix X, W0;
    Vector y, beta0, b;
    Matrix XXT;
    Matrix G0;    ///< X W0ᵀ W0 Xᵀ / p
    Vector v_bar; ///< W0ᵀ b / √p
    Vector Xv;    ///< X v̄
    double b_dot_beta0 = 0.0;
    double b_norm2 = 0.0;  ///< ‖b‖²

    std::size_t n() const noexcept { return X.rows(); }
    std::size_t width() const noexcept { return W0.rows(); }
};

DynState dyn_init(const Matrix& X, const Vector& y, const Matrix& W0, const Vector& beta0,
                  const Vector& b);

/// Advances the state from t to t+1. lambda_t is λ(t).
void dyn_step(DynState& state, double eta, double lambda_t);

/// ŝ(t) and Ŝ(t) at the current step, given λ(t).
Vector dyn_s_hat(const DynState& state, double eta, double lambda_t);
double dyn_S_hat(const DynState& state, double eta, double lambda_t);

/// W(t) = W(0) − (η/√p)·b·s(t−1)ᵀX
Matrix closed_form_W(const DynState& state, double eta);

struct BetaDecomposition {
    Vector init;     ///< Π(1−ηλ)·β(0)
    Vector w0_span;  ///< −(η/√p)·W(0)Xᵀŝ(t−1)
    Vector b_span;   ///< (η²/p)·b·Ŝ(t−1)
    Vector total;
};

BetaDecomposition closed_form_beta(const DynState& state, double eta);

/// Ŝ(t) from its definition, quadratic in t. errors holds e(0..t),
/// lambdas holds λ(0..t).
double S_hat_direct(std::span<const Vector> errors, const Matrix& XXT, double eta,
                    std::span<const double> lambdas);

/// Runs the recurrence for `steps` updates and fills the same records the
/// trainer produces, reconstructing W and β from the closed forms.
Trajectory dyn_trajectory(DynState state, double eta, const Schedule& schedule, std::size_t steps,
                          bool keep_errors = false);

} // namespace falab
