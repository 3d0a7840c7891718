#pragma once

#include "falab/linalg.hpp"
#include "falab/linear_dynamics.hpp"
#include "falab/network.hpp"

#include <array>
#include <cstddef>
#include <functional>

namespace falab {

/// ⟨b,β⟩/(‖b‖‖β‖) clamped to [−1, 1]. Throws UndefinedAlignment on a zero vector.
double cos_alignment(std::span<const double> b, std::span<const double> beta);

/// e = a·ȳ + ξ with ȳ = −y/‖y‖ and ξ ⟂ y.
struct ErrorDecomposition {
    double a = 0.0;
    Vector xi;
};

/// Throws ContractViolation when y = 0.
ErrorDecomposition decompose_error(std::span<const double> e, std::span<const double> y);

struct GramPair {
    Matrix G;  ///< (1/p)ψ(Wx_i)ᵀψ(Wx_j)
    Matrix H;  ///< (x_iᵀx_j/p)·Σ_r β_r b_r ψ'(w_rᵀx_i)ψ'(w_rᵀx_j)
    double lambda_min_G = 0.0;
    double norm_H = 0.0;  ///< spectral norm
};

GramPair gram_pair(const TwoLayerNet& net, const Matrix& X);

struct GaussHermite {
    Vector nodes;
    Vector weights;  ///< for the weight function exp(−x²)
};

/// n-point Gauss–Hermite rule.
GaussHermite gauss_hermite(std::size_t n);

/// E f(Z), Z ~ N(0,1), by a 64-node rule.
double gaussian_expectation(const std::function<double(double)>& f);

struct ActivationMoments {
    double mean_deriv = 0.0;  ///< E ψ'(Z)
    double mean_square = 0.0; ///< E ψ(Z)²
};

/// Throws ContractViolation for relu.
ActivationMoments activation_moments(Activation act);

/// G̃_ij = (Eψ')²·cos(x_i, x_j) + (Eψ² − (Eψ')²)·1{i=j}
Matrix gbar_reference(const Matrix& X, Activation act);

/// E_w ψ(wᵀx_i)ψ(wᵀx_j) for w ~ N(0, I), by a two-dimensional 64×64 rule.
/// This is the exact infinite-width limit of G(0); G̃ approximates it.
Matrix gbar_exact(const Matrix& X, Activation act);

struct WeightDrift {
    double max_w = 0.0;    ///< max_r ‖w_r(t) − w_r(0)‖
    double max_beta = 0.0; ///< max_r |β_r(t) − β_r(0)|
};

WeightDrift weight_drift(const TwoLayerNet& net_t, const TwoLayerNet& net_0);

struct AlignmentReport {
    double cos_b_beta = 0.0;
    /// ‖init‖, ‖W(0)-span‖, ‖b-span‖ of the closed-form β; zero when not linear.
    std::array<double, 3> component_norms{};
    double S_hat_over_s_hat = 0.0;
};

AlignmentReport alignment_report(std::span<const double> b, std::span<const double> beta,
                                 double S_hat, double s_hat_norm,
                                 const BetaDecomposition* components = nullptr);

} // namespace falab
