#include "falab/network.hpp"

#include "falab/activation_kernels.hpp"
#include "falab/errors.hpp"
#include "falab/random.hpp"

#include <cmath>
#include <string>

namespace falab {

std::string_view to_string(Activation act) {
    switch (act) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::relu: return "relu";
    }
    return "?";
}

Activation parse_activation(std::string_view name) {
    if (name == "identity" || name == "linear") return Activation::identity;
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "relu") return Activation::relu;
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

double activate(Activation act, double u) {
    switch (act) {
    case Activation::identity: return u;
    case Activation::tanh: return kernels::tanh(u);
    case Activation::sigmoid: return kernels::sigmoid(u);
    case Activation::relu: return u > 0.0 ? u : 0.0;
    }
    return u;
}

double activate_deriv(Activation act, double u) {
    switch (act) {
    case Activation::identity: return 1.0;
    case Activation::tanh: {
        const double t = kernels::tanh(u);
        return 1.0 - t * t;
    }
    case Activation::sigmoid: {
        const double s = kernels::sigmoid(u);
        return s * (1.0 - s);
    }
    case Activation::relu: return u > 0.0 ? 1.0 : 0.0;
    }
    return 1.0;
}

void activate_span(Activation act, std::span<const double> z, std::span<double> psi,
                   std::span<double> dpsi) {
    const std::size_t n = z.size();
    switch (act) {
    case Activation::identity:
        for (std::size_t i = 0; i < n; ++i) {
            psi[i] = z[i];
            dpsi[i] = 1.0;
        }
        return;
    case Activation::tanh:
        for (std::size_t i = 0; i < n; ++i) {
            const double t = kernels::tanh(z[i]);
            psi[i] = t;
            dpsi[i] = 1.0 - t * t;
        }
        return;
    case Activation::sigmoid:
        for (std::size_t i = 0; i < n; ++i) {
            const double s = kernels::sigmoid(z[i]);
            psi[i] = s;
            dpsi[i] = s * (1.0 - s);
        }
        return;
    case Activation::relu:
        for (std::size_t i = 0; i < n; ++i) {
            const double u = z[i];
            psi[i] = u > 0.0 ? u : 0.0;
            dpsi[i] = u > 0.0 ? 1.0 : 0.0;
        }
        return;
    }
}

void validate(const Dataset& data) {
    if (data.X.rows() != data.y.size())
        throw ContractViolation("dataset: X has " + std::to_string(data.X.rows()) +
                                " rows but y has " + std::to_string(data.y.size()) + " entries");
}

TwoLayerNet::TwoLayerNet(Matrix W_, Vector beta_, Vector b, Activation act)
    : W(std::move(W_)), beta(std::move(beta_)), b_(std::move(b)), act_(act) {
    if (beta.size() != W.rows() || b_.size() != W.rows())
        throw ContractViolation("TwoLayerNet: W, beta and b disagree on the width");
}

TwoLayerNet gaussian_init(std::size_t p, std::size_t d, Activation act, std::uint64_t seed,
                          std::string_view suffix) {
    const std::string sfx(suffix);
    auto w_stream = derive_stream(seed, "W0" + sfx);
    auto beta_stream = derive_stream(seed, "beta0" + sfx);
    auto b_stream = derive_stream(seed, "b" + sfx);
    Matrix W = gaussian_matrix(w_stream, p, d, 1.0);
    Vector beta = gaussian(beta_stream, p, 1.0);
    Vector b = gaussian(b_stream, p, 1.0);
    return TwoLayerNet(std::move(W), std::move(beta), std::move(b), act);
}

Matrix preactivations(const Matrix& W, const Matrix& X) {
    if (W.cols() != X.cols())
        throw ContractViolation("preactivations: W has " + std::to_string(W.cols()) +
                                " columns but X has " + std::to_string(X.cols()));
    Matrix z(W.rows(), X.rows());
    gemm_acc(W, transpose(X), z);
    return z;
}

Vector forward(const TwoLayerNet& net, const Matrix& X) {
    if (X.cols() != net.input_dim())
        throw ContractViolation("forward: input has " + std::to_string(X.cols()) +
                                " features, network expects " + std::to_string(net.input_dim()));
    const double scale = 1.0 / std::sqrt(static_cast<double>(net.width()));
    if (net.act() == Activation::identity) {
        Vector f = matvec(X, matvec_t(net.W, net.beta));
        for (auto& v : f) v *= scale;
        return f;
    }
    Matrix z = preactivations(net.W, X);
    Vector f(X.rows(), 0.0);
    Vector scratch(X.rows());
    for (std::size_t r = 0; r < net.width(); ++r) {
        auto zr = z.row(r);
        activate_span(net.act(), zr, zr, scratch);
        axpy(net.beta[r], zr, f);
    }
    for (auto& v : f) v *= scale;
    return f;
}

Vector error(const TwoLayerNet& net, const Dataset& data) {
    validate(data);
    Vector e = forward(net, data.X);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] -= data.y[i];
    return e;
}

double loss(const TwoLayerNet& net, const Dataset& data, double lambda) {
    if (lambda < 0.0) throw ContractViolation("loss: lambda must be non-negative");
    const Vector e = error(net, data);
    return 0.5 * dot(e, e) + 0.5 * lambda * dot(net.beta, net.beta);
}

Vector act_diag(const TwoLayerNet& net, std::span<const double> x_i) {
    const Vector z = matvec(net.W, x_i);
    Vector out(z.size());
    for (std::size_t r = 0; r < z.size(); ++r) out[r] = activate_deriv(net.act(), z[r]);
    return out;
}

} // namespace falab
