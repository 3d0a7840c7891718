#pragma once

#include "falab/linalg.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace falab {

enum class Activation { identity, tanh, sigmoid, relu };

std::string_view to_string(Activation act);
/// Throws ConfigError for unknown names.
Activation parse_activation(std::string_view name);

double activate(Activation act, double u);
/// ψ'(u). relu'(0) is taken to be 0.
double activate_deriv(Activation act, double u);

/// psi[i] = ψ(z[i]) and dpsi[i] = ψ'(z[i]); psi may alias z.
void activate_span(Activation act, std::span<const double> z, std::span<double> psi,
                   std::span<double> dpsi);

struct Dataset {
    Matrix X;  ///< n×d, one sample per row
    Vector y;  ///< n labels

    std::size_t n() const noexcept { return X.rows(); }
    std::size_t d() const noexcept { return X.cols(); }
};

/// Throws ContractViolation when X.rows() != y.size().
void validate(const Dataset& data);

/// f(x) = (1/√p)·βᵀψ(Wx) with fixed random feedback weights b.
class TwoLayerNet {
public:
    TwoLayerNet(Matrix W, Vector beta, Vector b, Activation act);

    Matrix W;     ///< p×d first-layer weights, row r is w_r
    Vector beta;  ///< p second-layer weights

    const Vector& b() const noexcept { return b_; }
    Activation act() const noexcept { return act_; }
    std::size_t width() const noexcept { return W.rows(); }
    std::size_t input_dim() const noexcept { return W.cols(); }

private:
    Vector b_;
    Activation act_;
};

/// W(0), β(0), b with i.i.d. N(0,1) entries drawn from the streams
/// "W0<suffix>", "beta0<suffix>" and "b<suffix>".
TwoLayerNet gaussian_init(std::size_t p, std::size_t d, Activation act, std::uint64_t seed,
                          std::string_view suffix = "");

/// Preactivations Z with Z(r, i) = w_rᵀx_i, shape p×n.
Matrix preactivations(const Matrix& W, const Matrix& X);

/// Network outputs on every row of X.
Vector forward(const TwoLayerNet& net, const Matrix& X);

/// e = f − y.
Vector error(const TwoLayerNet& net, const Dataset& data);

/// ½‖e‖² + ½λ‖β‖²
double loss(const TwoLayerNet& net, const Dataset& data, double lambda);

/// Diagonal of D_i = diag(ψ'(W x_i)).
Vector act_diag(const TwoLayerNet& net, std::span<const double> x_i);

} // namespace falab
