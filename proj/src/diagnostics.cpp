#include "falab/diagnostics.hpp"

#include "falab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace falab {

double cos_alignment(std::span<const double> b, std::span<const double> beta) {
    if (b.size() != beta.size()) throw ContractViolation("cos_alignment: length mismatch");
    const double nb = norm2(b), nbeta = norm2(beta);
    if (nb == 0.0 || nbeta == 0.0)
        throw UndefinedAlignment("cos_alignment: angle with a zero vector is undefined");
    return std::clamp(dot(b, beta) / (nb * nbeta), -1.0, 1.0);
}

ErrorDecomposition decompose_error(std::span<const double> e, std::span<const double> y) {
    if (e.size() != y.size()) throw ContractViolation("decompose_error: length mismatch");
    const double ny = norm2(y);
    if (ny == 0.0) throw ContractViolation("decompose_error: y must be nonzero");
    ErrorDecomposition out;
    out.a = -dot(e, y) / ny;
    out.xi.resize(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) out.xi[i] = e[i] + out.a * y[i] / ny;
    return out;
}

GramPair gram_pair(const TwoLayerNet& net, const Matrix& X) {
    const Matrix z = preactivations(net.W, X);
    const std::size_t p = net.width(), n = X.rows();
    Matrix psi(p, n), dpsi(p, n);
    for (std::size_t r = 0; r < p; ++r)
        for (std::size_t i = 0; i < n; ++i) {
            psi(r, i) = activate(net.act(), z(r, i));
            dpsi(r, i) = activate_deriv(net.act(), z(r, i));
        }

    GramPair out{Matrix(n, n), Matrix(n, n)};
    const Vector& b = net.b();
    for (std::size_t r = 0; r < p; ++r) {
        auto ps = psi.row(r);
        auto dp = dpsi.row(r);
        const double c = net.beta[r] * b[r];
        for (std::size_t i = 0; i < n; ++i) {
            auto grow = out.G.row(i);
            auto hrow = out.H.row(i);
            const double gi = ps[i], hi = c * dp[i];
            for (std::size_t j = i; j < n; ++j) {
                grow[j] += gi * ps[j];
                hrow[j] += hi * dp[j];
            }
        }
    }
    const Matrix K = gram(X);
    const double inv_p = 1.0 / static_cast<double>(p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            out.G(i, j) *= inv_p;
            out.H(i, j) *= inv_p * K(i, j);
            out.G(j, i) = out.G(i, j);
            out.H(j, i) = out.H(i, j);
        }
    out.lambda_min_G = lambda_min(out.G);
    out.norm_H = spectral_norm(out.H);
    return out;
}

GaussHermite gauss_hermite(std::size_t n) {
    if (n == 0) throw ContractViolation("gauss_hermite: need at least one node");
    // Newton iteration on the orthonormal Hermite recurrence.
    GaussHermite out{Vector(n), Vector(n)};
    const double pim4 = std::pow(std::numbers::pi, -0.25);
    const std::size_t m = (n + 1) / 2;
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double nd = static_cast<double>(n);
        if (i == 0)
            z = std::sqrt(2.0 * nd + 1.0) - 1.85575 * std::pow(2.0 * nd + 1.0, -1.0 / 6.0);
        else if (i == 1)
            z -= 1.14 * std::pow(nd, 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * out.nodes[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * out.nodes[1];
        else
            z = 2.0 * z - out.nodes[i - 2];
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = pim4, p2 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                const double jd = static_cast<double>(j);
                p1 = z * std::sqrt(2.0 / jd) * p2 - std::sqrt((jd - 1.0) / jd) * p3;
            }
            pp = std::sqrt(2.0 * nd) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        out.nodes[i] = z;
        out.nodes[n - 1 - i] = -z;
        out.weights[i] = 2.0 / (pp * pp);
        out.weights[n - 1 - i] = out.weights[i];
    }
    return out;
}

namespace {

const GaussHermite& rule64() {
    static const GaussHermite rule = gauss_hermite(64);
    return rule;
}

} // namespace

double gaussian_expectation(const std::function<double(double)>& f) {
    const auto& gh = rule64();
    double s = 0.0;
    for (std::size_t k = 0; k < gh.nodes.size(); ++k)
        s += gh.weights[k] * f(std::numbers::sqrt2 * gh.nodes[k]);
    return s / std::sqrt(std::numbers::pi);
}

ActivationMoments activation_moments(Activation act) {
    if (act == Activation::relu)
        throw ContractViolation("activation moments are only defined for smooth activations");
    ActivationMoments m;
    m.mean_deriv = gaussian_expectation([act](double u) { return activate_deriv(act, u); });
    m.mean_square = gaussian_expectation([act](double u) {
        const double v = activate(act, u);
        return v * v;
    });
    return m;
}

Matrix gbar_reference(const Matrix& X, Activation act) {
    const ActivationMoments m = activation_moments(act);
    const double lin = m.mean_deriv * m.mean_deriv;
    const Matrix K = gram(X);
    const std::size_t n = X.rows();
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double denom = std::sqrt(K(i, i) * K(j, j));
            if (denom == 0.0) throw ContractViolation("gbar_reference: zero input row");
            out(i, j) = lin * K(i, j) / denom + (i == j ? m.mean_square - lin : 0.0);
        }
    return out;
}

Matrix gbar_exact(const Matrix& X, Activation act) {
    const auto& gh = rule64();
    const std::size_t q = gh.nodes.size();
    const Matrix K = gram(X);
    const std::size_t n = X.rows();
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            // (u, v) = (a z1, c(ρ z1 + √(1−ρ²) z2))
            const double a = std::sqrt(K(i, i)), c = std::sqrt(K(j, j));
            const double rho = std::clamp(K(i, j) / (a * c), -1.0, 1.0);
            const double tail = std::sqrt(std::max(0.0, 1.0 - rho * rho));
            double s = 0.0;
            for (std::size_t k = 0; k < q; ++k) {
                const double z1 = std::numbers::sqrt2 * gh.nodes[k];
                const double fu = activate(act, a * z1);
                double inner = 0.0;
                for (std::size_t l = 0; l < q; ++l) {
                    const double z2 = std::numbers::sqrt2 * gh.nodes[l];
                    inner += gh.weights[l] * activate(act, c * (rho * z1 + tail * z2));
                }
                s += gh.weights[k] * fu * inner;
            }
            out(i, j) = out(j, i) = s / std::numbers::pi;
        }
    return out;
}

WeightDrift weight_drift(const TwoLayerNet& net_t, const TwoLayerNet& net_0) {
    if (net_t.width() != net_0.width() || net_t.input_dim() != net_0.input_dim())
        throw ContractViolation("weight_drift: networks differ in shape");
    WeightDrift out;
    for (std::size_t r = 0; r < net_t.width(); ++r) {
        out.max_w = std::max(out.max_w, norm2(subtract(net_t.W.row(r), net_0.W.row(r))));
        out.max_beta = std::max(out.max_beta, std::abs(net_t.beta[r] - net_0.beta[r]));
    }
    return out;
}

AlignmentReport alignment_report(std::span<const double> b, std::span<const double> beta,
                                 double S_hat, double s_hat_norm,
                                 const BetaDecomposition* components) {
    AlignmentReport out;
    out.cos_b_beta = cos_alignment(b, beta);
    if (components) {
        out.component_norms = {norm2(components->init), norm2(components->w0_span),
                               norm2(components->b_span)};
    }
    out.S_hat_over_s_hat = s_hat_norm > 0.0 ? S_hat / s_hat_norm
                                            : std::numeric_limits<double>::quiet_NaN();
    return out;
}

} // namespace falab
