#include "falab/linear_dynamics.hpp"

#include "falab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace falab {

DynState dyn_init(const Matrix& X, const Vector& y, const Matrix& W0, const Vector& beta0,
                  const Vector& b) {
    const std::size_t p = W0.rows();
    if (X.rows() != y.size() || X.cols() != W0.cols() || beta0.size() != p || b.size() != p ||
        p == 0)
        throw ContractViolation("dyn_init: shapes do not conform");
    const double scale = 1.0 / std::sqrt(static_cast<double>(p));

    DynState s;
    s.X = X;
    s.W0 = W0;
    s.y = y;
    s.beta0 = beta0;
    s.b = b;
    s.XXT = gram(X);
    const Matrix XW0t = matmul(X, transpose(W0));  // n×p
    s.G0 = gram(XW0t);
    for (auto& v : s.G0.data()) v /= static_cast<double>(p);
    s.v_bar = scaled(matvec_t(W0, b), scale);
    s.Xv = matvec(X, s.v_bar);
    s.b_dot_beta0 = dot(b, beta0);
    s.b_norm2 = dot(b, b);

    s.e = scaled(matvec(XW0t, beta0), scale);
    for (std::size_t i = 0; i < y.size(); ++i) s.e[i] -= y[i];
    s.s_prev.assign(y.size(), 0.0);
    s.s_hat_prev.assign(y.size(), 0.0);
    return s;
}

Vector dyn_s_hat(const DynState& state, double eta, double lambda_t) {
    const double shrink = 1.0 - eta * lambda_t;
    Vector out(state.e.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = shrink * state.s_hat_prev[i] + state.e[i];
    return out;
}

double dyn_S_hat(const DynState& state, double eta, double lambda_t) {
    return (1.0 - eta * lambda_t) * state.S_hat_prev +
           dot(state.e, matvec(state.XXT, state.s_prev));
}

void dyn_step(DynState& st, double eta, double lambda_t) {
    const std::size_t n = st.n();
    const double p = static_cast<double>(st.width());
    const double shrink = 1.0 - eta * lambda_t;

    const Vector s_hat = dyn_s_hat(st, eta, lambda_t);
    const Vector Ke = matvec(st.XXT, st.e);
    const Vector Ks = matvec(st.XXT, st.s_prev);
    const double S_hat = shrink * st.S_hat_prev + dot(st.e, Ks);
    const double decay_next = st.decay * shrink;

    const Vector G0e = matvec(st.G0, st.e);
    const double xv_e = dot(st.Xv, st.e);
    const double xv_shat = dot(st.Xv, s_hat);
    const double s_Ke = dot(st.s_prev, Ke);

    // J1 e, J2 e and J3 e folded into coefficients of Ke, Ks and Xv.
    const double c_Ke = st.b_dot_beta0 / p * decay_next - eta / p * xv_shat +
                        eta * eta / (p * p) * st.b_norm2 * S_hat;
    const double c_Ks = -eta / p * xv_e + eta * eta / (p * p) * st.b_norm2 * s_Ke;
    const double c_Xv = -eta / p * s_Ke;

    Vector next(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double J = c_Ke * Ke[i] + c_Ks * Ks[i] + c_Xv * st.Xv[i];
        next[i] = shrink * st.e[i] - eta * G0e[i] - eta * J - eta * lambda_t * st.y[i];
    }

    for (std::size_t i = 0; i < n; ++i) st.s_prev[i] += st.e[i];
    st.s_hat_prev = s_hat;
    st.S_hat_prev = S_hat;
    st.decay = decay_next;
    st.e = std::move(next);
    ++st.t;
}

Matrix closed_form_W(const DynState& st, double eta) {
    const double c = eta / std::sqrt(static_cast<double>(st.width()));
    const Vector sX = matvec_t(st.X, st.s_prev);  // Xᵀs(t−1)
    Matrix W = st.W0;
    for (std::size_t r = 0; r < W.rows(); ++r) axpy(-c * st.b[r], sX, W.row(r));
    return W;
}

BetaDecomposition closed_form_beta(const DynState& st, double eta) {
    const double p = static_cast<double>(st.width());
    BetaDecomposition out;
    out.init = scaled(st.beta0, st.decay);
    out.w0_span = scaled(matvec(st.W0, matvec_t(st.X, st.s_hat_prev)), -eta / std::sqrt(p));
    out.b_span = scaled(st.b, eta * eta / p * st.S_hat_prev);
    out.total.resize(out.init.size());
    for (std::size_t r = 0; r < out.total.size(); ++r)
        out.total[r] = out.init[r] + out.w0_span[r] + out.b_span[r];
    return out;
}

double S_hat_direct(std::span<const Vector> errors, const Matrix& XXT, double eta,
                    std::span<const double> lambdas) {
    if (errors.empty() || lambdas.size() != errors.size())
        throw ContractViolation("S_hat_direct: need one lambda per error vector");
    const std::size_t t = errors.size() - 1;
    const std::size_t n = errors.front().size();
    double total = 0.0;
    Vector partial(n, 0.0);  // Σ_{j<i} e(j)
    for (std::size_t i = 0; i <= t; ++i) {
        double factor = 1.0;
        for (std::size_t k = i + 1; k <= t; ++k) factor *= 1.0 - eta * lambdas[k];
        total += factor * dot(errors[i], matvec(XXT, partial));
        axpy(1.0, errors[i], partial);
    }
    return total;
}

Trajectory dyn_trajectory(DynState st, double eta, const Schedule& schedule, std::size_t steps,
                          bool keep_errors) {
    if (steps == 0) throw ContractViolation("dyn_trajectory: steps must be at least 1");
    Trajectory traj;
    traj.y_norm = norm2(st.y);
    const double nb = norm2(st.b);
    for (std::size_t t = 0;; ++t) {
        const double lambda_t = schedule.at(t);
        const double err = norm2(st.e);
        if (!std::isfinite(err) || err > kDivergenceThreshold)
            throw DivergenceError(t, std::move(traj));

        const Vector beta = closed_form_beta(st, eta).total;
        const Matrix W = closed_form_W(st, eta);
        StepRecord rec;
        rec.t = t;
        rec.err_norm = err;
        rec.loss = 0.5 * err * err + 0.5 * lambda_t * dot(beta, beta);
        const double nbeta = norm2(beta);
        rec.cos_align = nb > 0.0 && nbeta > 0.0
                            ? std::clamp(dot(st.b, beta) / (nb * nbeta), -1.0, 1.0)
                            : std::numeric_limits<double>::quiet_NaN();
        if (traj.y_norm > 0.0) {
            rec.a_t = -dot(st.e, st.y) / traj.y_norm;
            rec.xi_norm = std::sqrt(std::max(0.0, err * err - rec.a_t * rec.a_t));
        } else {
            rec.xi_norm = err;
        }
        for (std::size_t r = 0; r < st.width(); ++r) {
            rec.max_w_drift = std::max(rec.max_w_drift, norm2(subtract(W.row(r), st.W0.row(r))));
            rec.max_beta_drift = std::max(rec.max_beta_drift, std::abs(beta[r] - st.beta0[r]));
        }
        rec.lambda_t = lambda_t;
        traj.s_hat = dyn_s_hat(st, eta, lambda_t);
        traj.S_hat = dyn_S_hat(st, eta, lambda_t);
        traj.s = st.s_prev;
        axpy(1.0, st.e, traj.s);
        rec.s_hat_norm = norm2(traj.s_hat);
        rec.S_hat = traj.S_hat;
        if (keep_errors) traj.errors.push_back(st.e);

        if (t == steps) {
            traj.terminal = rec;
            break;
        }
        traj.records.push_back(rec);
        if (eta * lambda_t >= 1.0) throw ContractViolation("eta*lambda must stay below 1");
        dyn_step(st, eta, lambda_t);
    }
    return traj;
}

} // namespace falab
