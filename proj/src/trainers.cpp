#include "falab/trainers.hpp"

#include "falab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace falab {

std::string_view to_string(Algorithm algo) {
    switch (algo) {
    case Algorithm::bp: return "bp";
    case Algorithm::fa: return "fa";
    case Algorithm::fa_reg: return "fa_reg";
    }
    return "?";
}

Algorithm parse_algorithm(std::string_view name) {
    if (name == "bp") return Algorithm::bp;
    if (name == "fa") return Algorithm::fa;
    if (name == "fa_reg") return Algorithm::fa_reg;
    throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

std::string_view to_string(ScheduleKind kind) {
    switch (kind) {
    case ScheduleKind::zero: return "zero";
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::cutoff: return "cutoff";
    case ScheduleKind::exp_decay: return "exp_decay";
    }
    return "?";
}

Schedule::Schedule(ScheduleKind kind, double lambda, std::size_t last_step, double rate)
    : kind_(kind), lambda_(lambda), last_step_(last_step), rate_(rate) {
    if (!std::isfinite(lambda) || lambda < 0.0)
        throw ContractViolation("schedule: lambda must be finite and non-negative");
}

Schedule Schedule::zero() { return Schedule(ScheduleKind::zero, 0.0, 0, 0.0); }

Schedule Schedule::constant(double lambda) {
    return Schedule(ScheduleKind::constant, lambda, 0, 0.0);
}

Schedule Schedule::cutoff(double lambda, std::size_t last_step) {
    return Schedule(ScheduleKind::cutoff, lambda, last_step, 0.0);
}

Schedule Schedule::exp_decay(double lambda0, double rate) {
    if (!(rate > 0.0 && rate < 1.0))
        throw ContractViolation("schedule: exp_decay rate must lie in (0, 1)");
    return Schedule(ScheduleKind::exp_decay, lambda0, 0, rate);
}

double Schedule::at(std::size_t t) const {
    switch (kind_) {
    case ScheduleKind::zero: return 0.0;
    case ScheduleKind::constant: return lambda_;
    case ScheduleKind::cutoff: return t <= last_step_ ? lambda_ : 0.0;
    case ScheduleKind::exp_decay: return lambda_ * std::pow(1.0 - rate_, static_cast<double>(t));
    }
    return 0.0;
}

double Schedule::cumulative() const {
    switch (kind_) {
    case ScheduleKind::zero: return 0.0;
    case ScheduleKind::constant:
        return lambda_ > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    case ScheduleKind::cutoff: return lambda_ * static_cast<double>(last_step_ + 1);
    case ScheduleKind::exp_decay: return lambda_ / rate_;
    }
    return 0.0;
}

PaperCutoff paper_cutoff_schedule(double gamma, double lambda_max, std::size_t p, double eta,
                                  std::size_t n, double c_s, double L) {
    if (!(gamma > 0.0) || !(lambda_max >= gamma) || !(eta > 0.0) || !(c_s > 0.0) || !(L > 0.0) ||
        p == 0 || n == 0)
        throw ContractViolation("paper_cutoff: needs 0 < gamma <= M and positive eta, c_S, L");
    PaperCutoff out{Schedule::zero()};
    out.lambda = L * gamma;
    out.budget = c_s * gamma * std::sqrt(gamma * static_cast<double>(p)) /
                 (eta * std::sqrt(static_cast<double>(n)) * lambda_max);
    out.last_step = static_cast<std::size_t>(std::floor(out.budget / out.lambda));
    out.schedule = Schedule::cutoff(out.lambda, out.last_step);
    return out;
}

std::vector<StepRecord> Trajectory::all_records() const {
    std::vector<StepRecord> out = records;
    out.push_back(terminal);
    return out;
}

DivergenceError::DivergenceError(std::size_t step, Trajectory partial)
    : Error("training diverged at step " + std::to_string(step)),
      last_finite_step_(step == 0 ? 0 : step - 1), partial_(std::move(partial)) {}

namespace {

// Everything an update needs from the pre-step state.
struct Evaluation {
    Matrix psi;   // p×n, empty on the linear path
    Matrix dpsi;  // p×n
    Vector e;
};

Evaluation evaluate(const TwoLayerNet& net, const Dataset& data) {
    validate(data);
    if (data.d() != net.input_dim())
        throw ContractViolation("dataset has " + std::to_string(data.d()) +
                                " features, network expects " + std::to_string(net.input_dim()));
    Evaluation ev;
    const double scale = 1.0 / std::sqrt(static_cast<double>(net.width()));
    if (net.act() == Activation::identity) {
        ev.e = forward(net, data.X);
    } else {
        ev.psi = preactivations(net.W, data.X);
        ev.dpsi = Matrix(ev.psi.rows(), ev.psi.cols());
        ev.e.assign(data.n(), 0.0);
        for (std::size_t r = 0; r < net.width(); ++r) {
            auto row = ev.psi.row(r);
            activate_span(net.act(), row, row, ev.dpsi.row(r));
            axpy(net.beta[r], row, ev.e);
        }
        for (auto& v : ev.e) v *= scale;
    }
    for (std::size_t i = 0; i < ev.e.size(); ++i) ev.e[i] -= data.y[i];
    return ev;
}

// β ← shrink·β − η·∂β and W ← W − η·∂W, both from the pre-step state.
void apply_update(TwoLayerNet& net, const Dataset& data, const Evaluation& ev, double eta,
                  double shrink, bool use_beta) {
    const std::size_t p = net.width();
    const double scale = 1.0 / std::sqrt(static_cast<double>(p));
    const Vector& back = use_beta ? net.beta : net.b();
    Vector dbeta(p);
    if (net.act() == Activation::identity) {
        const Vector g = matvec_t(data.X, ev.e);
        for (std::size_t r = 0; r < p; ++r) {
            dbeta[r] = scale * dot(net.W.row(r), g);
            axpy(-eta * scale * back[r], g, net.W.row(r));
        }
    } else {
        // row r of C is e∘ψ′(W xᵢ) for unit r; W −= η/√p · diag(back) · C X
        Matrix C(p, data.n());
        Vector alpha(p);
        for (std::size_t r = 0; r < p; ++r) {
            dbeta[r] = scale * dot(ev.e, ev.psi.row(r));
            auto dp = ev.dpsi.row(r);
            auto cr = C.row(r);
            for (std::size_t i = 0; i < cr.size(); ++i) cr[i] = ev.e[i] * dp[i];
            alpha[r] = -eta * scale * back[r];
        }
        gemm_acc(C, data.X, net.W, alpha);
    }
    for (std::size_t r = 0; r < p; ++r) net.beta[r] = shrink * net.beta[r] - eta * dbeta[r];
}

void check_rates(double eta, double lambda_t) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ContractViolation("step size must be positive");
    if (!(lambda_t >= 0.0)) throw ContractViolation("regularization rate must be non-negative");
    if (eta * lambda_t >= 1.0)
        throw ContractViolation("eta*lambda = " + std::to_string(eta * lambda_t) +
                                " leaves no contraction factor (needs < 1)");
}

double effective_lambda(Algorithm algo, double lambda_t) {
    return algo == Algorithm::fa ? 0.0 : lambda_t;
}

} // namespace

Directions update_directions(const TwoLayerNet& net, const Dataset& data,
                             std::span<const double> backward) {
    if (backward.size() != net.width())
        throw ContractViolation("update_directions: backward vector has the wrong length");
    const Evaluation ev = evaluate(net, data);
    const std::size_t p = net.width();
    const double scale = 1.0 / std::sqrt(static_cast<double>(p));
    Directions out{Matrix(p, data.d()), Vector(p)};
    for (std::size_t r = 0; r < p; ++r) {
        auto drow = out.dW.row(r);
        for (std::size_t i = 0; i < data.n(); ++i) {
            double psi, dpsi;
            if (net.act() == Activation::identity) {
                psi = dot(net.W.row(r), data.X.row(i));
                dpsi = 1.0;
            } else {
                psi = ev.psi(r, i);
                dpsi = ev.dpsi(r, i);
            }
            out.dbeta[r] += scale * ev.e[i] * psi;
            axpy(scale * ev.e[i] * backward[r] * dpsi, data.X.row(i), drow);
        }
    }
    return out;
}

void bp_step(TwoLayerNet& net, const Dataset& data, double eta) {
    step(net, data, eta, 0.0, Algorithm::bp);
}

void fa_step(TwoLayerNet& net, const Dataset& data, double eta) {
    step(net, data, eta, 0.0, Algorithm::fa);
}

void fa_reg_step(TwoLayerNet& net, const Dataset& data, double eta, double lambda_t) {
    step(net, data, eta, lambda_t, Algorithm::fa_reg);
}

void step(TwoLayerNet& net, const Dataset& data, double eta, double lambda_t, Algorithm algo) {
    const double lambda = effective_lambda(algo, lambda_t);
    check_rates(eta, lambda);
    const Evaluation ev = evaluate(net, data);
    apply_update(net, data, ev, eta, 1.0 - eta * lambda, algo == Algorithm::bp);
}

Trajectory train(TwoLayerNet& net, const Dataset& data, double eta, const Schedule& schedule,
                 std::size_t steps, Algorithm algo, const TrainOptions& options) {
    if (steps == 0) throw ContractViolation("train: steps must be at least 1");
    if (!(eta > 0.0)) throw ContractViolation("train: step size must be positive");
    validate(data);

    const std::size_t n = data.n();
    const Matrix K = gram(data.X);
    const Matrix W0 = net.W;
    const Vector beta0 = net.beta;

    Trajectory traj;
    traj.y_norm = norm2(data.y);
    traj.s.assign(n, 0.0);
    traj.s_hat.assign(n, 0.0);
    traj.records.reserve(steps);

    double err0 = 0.0;
    for (std::size_t t = 0;; ++t) {
        const double lambda_t = effective_lambda(algo, schedule.at(t));
        const Evaluation ev = evaluate(net, data);
        const double err = norm2(ev.e);
        if (!std::isfinite(err) || err > kDivergenceThreshold || !all_finite(net.beta))
            throw DivergenceError(t, std::move(traj));
        if (t == 0) err0 = err;

        StepRecord rec;
        rec.t = t;
        rec.err_norm = err;
        rec.loss = 0.5 * err * err + 0.5 * lambda_t * dot(net.beta, net.beta);
        const double nb = norm2(net.b()), nbeta = norm2(net.beta);
        if (nb > 0.0 && nbeta > 0.0)
            rec.cos_align = std::clamp(dot(net.b(), net.beta) / (nb * nbeta), -1.0, 1.0);
        else
            rec.cos_align = std::numeric_limits<double>::quiet_NaN();
        if (traj.y_norm > 0.0) {
            rec.a_t = -dot(ev.e, data.y) / traj.y_norm;
            rec.xi_norm = std::sqrt(std::max(0.0, err * err - rec.a_t * rec.a_t));
        } else {
            rec.a_t = 0.0;
            rec.xi_norm = err;
        }
        for (std::size_t r = 0; r < net.width(); ++r) {
            const std::span<const double> w = net.W.row(r), w0 = W0.row(r);
            double sq = 0.0;
            for (std::size_t k = 0; k < w.size(); ++k) sq += (w[k] - w0[k]) * (w[k] - w0[k]);
            rec.max_w_drift = std::max(rec.max_w_drift, sq);
            rec.max_beta_drift = std::max(rec.max_beta_drift, std::abs(net.beta[r] - beta0[r]));
        }
        rec.max_w_drift = std::sqrt(rec.max_w_drift);
        rec.lambda_t = lambda_t;

        // Running sums: ŝ and Ŝ are discounted by the factor of the current step,
        // Ŝ pairs e(t) with s(t−1) so it is advanced before s.
        const double shrink = 1.0 - eta * lambda_t;
        const Vector Ks = matvec(K, traj.s);
        traj.S_hat = shrink * traj.S_hat + dot(ev.e, Ks);
        for (std::size_t i = 0; i < n; ++i) {
            traj.s_hat[i] = shrink * traj.s_hat[i] + ev.e[i];
            traj.s[i] += ev.e[i];
        }
        rec.s_hat_norm = norm2(traj.s_hat);
        rec.S_hat = traj.S_hat;
        if (options.keep_errors) traj.errors.push_back(ev.e);

        const bool stop_early = options.stop_ratio > 0.0 && err <= options.stop_ratio * err0;
        if (t == steps || stop_early) {
            traj.terminal = rec;
            break;
        }
        traj.records.push_back(rec);
        check_rates(eta, lambda_t);
        apply_update(net, data, ev, eta, shrink, algo == Algorithm::bp);
    }
    return traj;
}

} // namespace falab
