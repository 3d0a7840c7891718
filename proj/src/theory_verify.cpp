#include "falab/theory_verify.hpp"

#include "falab/data.hpp"
#include "falab/diagnostics.hpp"
#include "falab/errors.hpp"
#include "falab/linear_dynamics.hpp"
#include "falab/parallel.hpp"
#include "falab/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace falab {

bool binomial_pass(std::size_t violations, std::size_t trials, double nominal_delta) {
    if (trials == 0) return violations == 0;
    const double t = static_cast<double>(trials);
    const double margin = 3.0 * std::sqrt(nominal_delta * (1.0 - nominal_delta) / t);
    return static_cast<double>(violations) / t <= nominal_delta + margin;
}

CheckResult make_check(std::string name, std::size_t trials, std::size_t violations,
                       double nominal_delta, std::vector<std::pair<std::string, double>> details) {
    CheckResult r;
    r.name = std::move(name);
    r.trials = trials;
    r.violations = violations;
    r.nominal_delta = nominal_delta;
    r.pass = binomial_pass(violations, trials, nominal_delta);
    r.details = std::move(details);
    return r;
}

namespace {

double sym_norm(const Matrix& m) {
    const SymEig eig = sym_eig(m);
    return std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
}

Dataset concentration_data(const ConcentrationConfig& cfg) {
    return gen_synthetic(cfg.n, cfg.d, TeacherSpec{cfg.d, cfg.teacher_p, Activation::tanh}, cfg.seed);
}

} // namespace

ConcentrationSample concentration_sample(const ConcentrationConfig& cfg, const Dataset& data,
                                         std::size_t trial) {
    const std::size_t p = cfg.p, d = cfg.d;
    const TwoLayerNet net =
        gaussian_init(p, d, Activation::tanh, cfg.seed, "/trial" + std::to_string(trial));
    const Vector& b = net.b();

    ConcentrationSample s;
    s.inner_abs = std::abs(dot(b, net.beta));
    s.bW_norm = norm2(matvec_t(net.W, b));
    s.b_sq = dot(b, b);
    for (std::size_t r = 0; r < p; ++r) {
        s.sum_abs_b += std::abs(b[r]);
        s.sum_abs_bbeta += std::abs(b[r] * net.beta[r]);
        s.max_abs_b = std::max(s.max_abs_b, std::abs(b[r]));
    }

    Matrix ww(d, d);
    for (std::size_t r = 0; r < p; ++r) {
        auto w = net.W.row(r);
        for (std::size_t i = 0; i < d; ++i) {
            auto row = ww.row(i);
            for (std::size_t j = i; j < d; ++j) row[j] += w[i] * w[j];
        }
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            const double v = ww(i, j) / static_cast<double>(p) - (i == j ? 1.0 : 0.0);
            ww(i, j) = ww(j, i) = v;
        }
    s.ww_dev = sym_norm(ww);
    s.e0_norm = norm2(error(net, data));
    return s;
}

std::vector<ConcentrationSample> concentration_samples(const ConcentrationConfig& cfg) {
    if (cfg.p < 2) throw ContractViolation("concentration: p must be at least 2");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
        throw ContractViolation("concentration: delta must lie in (0, 1)");
    const Dataset data = concentration_data(cfg);
    std::vector<ConcentrationSample> out(cfg.trials);
    parallel_for(cfg.trials, cfg.threads,
                 [&](std::size_t k) { out[k] = concentration_sample(cfg, data, k); });
    return out;
}

std::vector<CheckResult> check_init_concentration(const ConcentrationConfig& cfg) {
    if (cfg.trials < 100) throw ContractViolation("concentration: need at least 100 trials");
    const auto samples = concentration_samples(cfg);
    const double p = static_cast<double>(cfg.p), d = static_cast<double>(cfg.d);
    const double n = static_cast<double>(cfg.n);
    const double delta = cfg.delta, t = cfg.tail_t;
    const double L = std::log(1.0 / delta);
    const auto& c = cfg.constants;

    struct Rule {
        std::string name;
        double nominal;
        double threshold;
        bool (*violated)(const ConcentrationSample&, double p, double thr);
    };
    const std::vector<Rule> rules = {
        {"inner_b_beta0", delta, c.inner * std::sqrt(L),
         [](const ConcentrationSample& s, double p, double thr) {
             return s.inner_abs / std::sqrt(p) > thr;
         }},
        {"b_W0_norm", delta, c.bW * std::sqrt(d * std::log(d / delta)),
         [](const ConcentrationSample& s, double p, double thr) {
             return s.bW_norm / std::sqrt(p) > thr;
         }},
        {"b_norm_deviation", delta, c.bnorm / std::sqrt(p) * std::sqrt(L),
         [](const ConcentrationSample& s, double p, double thr) {
             return std::abs(s.b_sq / p - 1.0) > thr;
         }},
        {"W0_isometry", delta, cfg.epsilon,
         [](const ConcentrationSample& s, double, double thr) { return s.ww_dev > thr; }},
        {"chi2_upper_tail", std::exp(-t), 2.0 * std::sqrt(p * t) + 2.0 * t,
         [](const ConcentrationSample& s, double p, double thr) { return s.b_sq - p >= thr; }},
        {"chi2_lower_tail", std::exp(-t), 2.0 * std::sqrt(p * t),
         [](const ConcentrationSample& s, double p, double thr) { return s.b_sq - p <= -thr; }},
        {"inner_product_tail", std::min(1.0, 2.0 * std::exp(-t)), std::sqrt(2.0 * p * t) + 2.0 * t,
         [](const ConcentrationSample& s, double, double thr) { return s.inner_abs >= thr; }},
        {"mean_abs_b", delta, c.sum_abs_b,
         [](const ConcentrationSample& s, double p, double thr) { return s.sum_abs_b / p > thr; }},
        {"mean_abs_b_beta0", delta, c.sum_abs_bbeta,
         [](const ConcentrationSample& s, double p, double thr) {
             return s.sum_abs_bbeta / p > thr;
         }},
        {"max_abs_b", std::min(1.0, 2.0 / p), 2.0 * std::sqrt(std::log(p)),
         [](const ConcentrationSample& s, double, double thr) { return s.max_abs_b > thr; }},
        {"e0_norm", delta, c.e0 * std::sqrt(n),
         [](const ConcentrationSample& s, double, double thr) { return s.e0_norm > thr; }},
    };

    std::vector<CheckResult> out;
    for (const auto& rule : rules) {
        std::size_t v = 0;
        for (const auto& s : samples) v += rule.violated(s, p, rule.threshold) ? 1 : 0;
        out.push_back(make_check(rule.name, samples.size(), v, rule.nominal,
                                 {{"threshold", rule.threshold}, {"p", p}}));
    }
    return out;
}

CheckResult check_isometry(std::size_t n, std::size_t d, double epsilon, std::size_t trials,
                           double delta, std::uint64_t seed, unsigned threads) {
    if (n >= d) throw ContractViolation("check_isometry: needs n < d");
    if (trials == 0) throw ContractViolation("check_isometry: needs at least one trial");
    const double lo = 1.0 - epsilon, hi = (1.0 + 4.0 * epsilon) * (1.0 - epsilon);
    std::vector<double> lmin(trials), lmax(trials);
    parallel_for(trials, threads, [&](std::size_t k) {
        auto xs = derive_stream(seed, "X/trial" + std::to_string(k));
        const Matrix X = gaussian_matrix(xs, n, d, 1.0 / std::sqrt(static_cast<double>(d)));
        const SymEig eig = sym_eig(gram(X));
        lmin[k] = eig.values.front();
        lmax[k] = eig.values.back();
    });
    std::size_t v = 0;
    double mean_min = 0.0, mean_max = 0.0;
    for (std::size_t k = 0; k < trials; ++k) {
        if (lmin[k] < lo || lmax[k] > hi) ++v;
        mean_min += lmin[k];
        mean_max += lmax[k];
    }
    const double tn = static_cast<double>(trials);
    return make_check("isometry", trials, v, delta,
                      {{"n", double(n)},
                       {"d", double(d)},
                       {"epsilon", epsilon},
                       {"mean_lambda_min", mean_min / tn},
                       {"mean_lambda_max", mean_max / tn}});
}

CheckResult check_contraction(const Trajectory& traj, double gamma, double eta, double divisor,
                              double slack) {
    const auto recs = traj.all_records();
    std::size_t v = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
        const double lam = recs[k].lambda_t;
        const double bound = (1.0 - eta * gamma / divisor - eta * lam) * recs[k].err_norm +
                             eta * lam * traj.y_norm;
        const double excess = recs[k + 1].err_norm - bound;
        worst = std::max(worst, excess);
        if (excess > slack) ++v;
    }
    return make_check("contraction", recs.size() - 1, v, 0.0,
                      {{"gamma", gamma}, {"eta", eta}, {"worst_excess", worst}});
}

std::vector<double> alignment_ratios(const Trajectory& traj, std::size_t p, double eta,
                                     double gamma) {
    const double scale = std::sqrt(static_cast<double>(p) * gamma);
    std::vector<double> out;
    for (const auto& r : traj.all_records())
        out.push_back(r.s_hat_norm > 0.0 ? eta * r.S_hat / (scale * r.s_hat_norm) : 0.0);
    return out;
}

CheckResult check_alignment_condition(const Trajectory& traj, std::size_t p, double eta,
                                      double gamma, std::size_t last_step, double threshold) {
    const auto recs = traj.all_records();
    const auto ratios = alignment_ratios(traj, p, eta, gamma);
    std::size_t trials = 0, v = 0;
    double min_after = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < recs.size(); ++k) {
        if (recs[k].t <= last_step) continue;
        ++trials;
        min_after = std::min(min_after, ratios[k]);
        if (!(ratios[k] > threshold)) ++v;
    }
    return make_check("alignment_condition", trials, v, 0.0,
                      {{"threshold", threshold},
                       {"min_ratio_after_cutoff", trials ? min_after : 0.0},
                       {"final_ratio", ratios.back()},
                       {"final_cos", recs.back().cos_align}});
}

std::size_t a_bound_burn_in(double lambda, double gamma, double eta) {
    if (!(gamma > 0.0) || !(lambda >= 0.0) || !(eta > 0.0))
        throw ContractViolation("a_bound_burn_in: needs gamma, eta > 0 and lambda >= 0");
    const double rate = eta * (lambda + gamma / 2.0);
    if (!(rate < 1.0)) return 0;
    return static_cast<std::size_t>(
        std::ceil(std::log((lambda + gamma / 2.0) / (gamma / 2.0)) / -std::log1p(-rate)));
}

CheckResult check_a_lower_bound(const Trajectory& traj, double lambda, double gamma,
                                std::size_t tau, std::size_t last_step, double slack) {
    const double bound = (lambda - gamma) / (lambda + gamma) * traj.y_norm;
    std::size_t trials = 0, v = 0;
    double min_a = std::numeric_limits<double>::infinity();
    for (const auto& r : traj.all_records()) {
        if (r.t < tau || r.t > last_step) continue;
        ++trials;
        min_a = std::min(min_a, r.a_t);
        if (r.a_t < bound - slack) ++v;
    }
    return make_check("a_lower_bound", trials, v, 0.0,
                      {{"bound", bound}, {"min_a", trials ? min_a : 0.0}});
}

double loglog_slope(std::span<const double> widths, std::span<const double> values) {
    if (widths.size() != values.size() || widths.size() < 2)
        throw ContractViolation("loglog_slope: need matching series of at least two points");
    double mx = 0.0, my = 0.0;
    const double m = static_cast<double>(widths.size());
    for (std::size_t k = 0; k < widths.size(); ++k) {
        if (!(widths[k] > 0.0) || !(values[k] > 0.0))
            throw ContractViolation("loglog_slope: values must be positive");
        mx += std::log(widths[k]);
        my += std::log(values[k]);
    }
    mx /= m;
    my /= m;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
        const double dx = std::log(widths[k]) - mx;
        sxy += dx * (std::log(values[k]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

CheckResult check_no_alignment_scaling(std::span<const double> widths,
                                       std::span<const double> mean_abs_cos, double lo,
                                       double hi) {
    if (widths.size() < 4) throw ContractViolation("no-alignment scaling needs at least 4 widths");
    const double slope = loglog_slope(widths, mean_abs_cos);
    const bool inside = slope >= lo && slope <= hi;
    return make_check("no_alignment_scaling", 1, inside ? 0 : 1, 0.0,
                      {{"slope", slope}, {"band_lo", lo}, {"band_hi", hi}});
}

std::vector<CheckResult> check_oracle_equivalence(const OracleConfig& cfg) {
    if (cfg.instances == 0 || cfg.steps == 0)
        throw ContractViolation("oracle check: needs instances and steps");
    std::vector<double> dev(cfg.instances), cf_dev(cfg.instances);
    parallel_for(cfg.instances, cfg.threads, [&](std::size_t k) {
        const std::string sfx = "/dyn" + std::to_string(k);
        auto shape = derive_stream(cfg.seed, "shape" + sfx);
        const auto pick = [&](std::size_t lo, std::size_t hi) {
            return lo + static_cast<std::size_t>(shape.uniform() * static_cast<double>(hi - lo + 1));
        };
        const std::size_t n = pick(4, 20);
        const std::size_t d = pick(n + 5, 60);
        const std::size_t p = pick(50, 500);
        const double eta = 0.01 + 0.04 * shape.uniform();
        Schedule sched = Schedule::zero();
        switch (k % 3) {
        case 1: sched = Schedule::constant(0.1 + 1.9 * shape.uniform()); break;
        case 2: sched = Schedule::cutoff(0.5 + 4.5 * shape.uniform(), pick(10, 100)); break;
        default: break;
        }
        const Dataset data = gen_synthetic(n, d, TeacherSpec{d, 20, Activation::identity}, cfg.seed, sfx);
        const TwoLayerNet init = gaussian_init(p, d, Activation::identity, cfg.seed, sfx);

        // full-length equivalence of e(t)
        const DynState st0 = dyn_init(data.X, data.y, init.W, init.beta, init.b());
        const Trajectory dyn = dyn_trajectory(st0, eta, sched, cfg.steps, true);
        TwoLayerNet net = init;
        TrainOptions opt;
        opt.keep_errors = true;
        const Trajectory tr = train(net, data, eta, sched, cfg.steps, Algorithm::fa_reg, opt);
        double worst = 0.0;
        for (std::size_t t = 0; t < tr.errors.size(); ++t) {
            const double denom = std::max(norm2(tr.errors[t]), 1e-12);
            worst = std::max(worst, norm2(subtract(dyn.errors[t], tr.errors[t])) / denom);
        }
        dev[k] = worst;

        // closed forms after a shorter run
        DynState st = st0;
        for (std::size_t t = 0; t < cfg.closed_form_steps; ++t) dyn_step(st, eta, sched.at(t));
        TwoLayerNet net2 = init;
        train(net2, data, eta, sched, cfg.closed_form_steps, Algorithm::fa_reg);
        const BetaDecomposition bd = closed_form_beta(st, eta);
        double cf = std::max(max_abs_diff(closed_form_W(st, eta), net2.W),
                             max_abs_diff(bd.total, net2.beta));
        for (std::size_t r = 0; r < bd.total.size(); ++r)
            if (bd.init[r] + bd.w0_span[r] + bd.b_span[r] != bd.total[r])
                cf = std::numeric_limits<double>::infinity();
        cf_dev[k] = cf;
    });

    std::size_t v = 0, v_cf = 0;
    double worst = 0.0, worst_cf = 0.0;
    for (std::size_t k = 0; k < cfg.instances; ++k) {
        if (!(dev[k] <= cfg.tolerance)) ++v;
        if (!(cf_dev[k] <= cfg.closed_form_tolerance)) ++v_cf;
        worst = std::max(worst, dev[k]);
        worst_cf = std::max(worst_cf, cf_dev[k]);
    }
    return {make_check("oracle_equivalence", cfg.instances, v, 0.0,
                       {{"max_rel_deviation", worst}, {"tolerance", cfg.tolerance}}),
            make_check("closed_forms", cfg.instances, v_cf, 0.0,
                       {{"max_abs_deviation", worst_cf},
                        {"tolerance", cfg.closed_form_tolerance}})};
}

GramCheckReport check_gram_conditions(const GramCheckConfig& cfg) {
    if (cfg.inits < 2) throw ContractViolation("gram check: needs at least two inits");
    const std::size_t n = cfg.n;
    auto xs = derive_stream(cfg.seed, "X");
    const Matrix X = gaussian_matrix(xs, n, cfg.d, 1.0 / std::sqrt(static_cast<double>(cfg.d)));

    const std::size_t tri = n * (n + 1) / 2;
    std::vector<double> upper(cfg.inits * tri);
    std::vector<double> lmin(cfg.inits), hnorm(cfg.inits);
    parallel_for(cfg.inits, cfg.threads, [&](std::size_t k) {
        const TwoLayerNet net =
            gaussian_init(cfg.p, cfg.d, cfg.act, cfg.seed, "/init" + std::to_string(k));
        const GramPair gp = gram_pair(net, X);
        lmin[k] = gp.lambda_min_G;
        hnorm[k] = gp.norm_H;
        double* dst = upper.data() + k * tri;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) *dst++ = gp.G(i, j);
    });

    GramCheckReport rep;
    rep.mean_G = Matrix(n, n);
    rep.std_error = Matrix(n, n);
    rep.reference = gbar_reference(X, cfg.act);
    rep.exact = gbar_exact(X, cfg.act);
    const double m = static_cast<double>(cfg.inits);
    std::size_t idx = 0, v_ref = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j, ++idx) {
            double s = 0.0;
            for (std::size_t k = 0; k < cfg.inits; ++k) s += upper[k * tri + idx];
            const double mean = s / m;
            double ss = 0.0;
            for (std::size_t k = 0; k < cfg.inits; ++k) {
                const double dv = upper[k * tri + idx] - mean;
                ss += dv * dv;
            }
            const double se = std::sqrt(ss / (m - 1.0) / m);
            rep.mean_G(i, j) = rep.mean_G(j, i) = mean;
            rep.std_error(i, j) = rep.std_error(j, i) = se;
            const double z_ref = std::abs(mean - rep.reference(i, j)) / se;
            const double z_exact = std::abs(mean - rep.exact(i, j)) / se;
            rep.max_z_reference = std::max(rep.max_z_reference, z_ref);
            rep.max_z_exact = std::max(rep.max_z_exact, z_exact);
            if (!(z_ref <= cfg.sigma_limit)) ++v_ref;
        }

    std::size_t v_pos = 0, v_h = 0;
    double worst_ratio = 0.0;
    for (std::size_t k = 0; k < cfg.inits; ++k) {
        if (!(lmin[k] > 0.0)) ++v_pos;
        if (!(hnorm[k] <= lmin[k] / 2.0)) ++v_h;
        if (lmin[k] > 0.0) worst_ratio = std::max(worst_ratio, hnorm[k] / lmin[k]);
    }
    std::vector<double> sorted_lmin = lmin;
    std::sort(sorted_lmin.begin(), sorted_lmin.end());

    rep.results.push_back(make_check("gram_mean_vs_reference", tri, v_ref, 0.0,
                                     {{"sigma_limit", cfg.sigma_limit},
                                      {"max_z_reference", rep.max_z_reference},
                                      {"max_z_exact", rep.max_z_exact},
                                      {"max_abs_dev_reference", max_abs_diff(rep.mean_G, rep.reference)},
                                      {"max_abs_dev_exact", max_abs_diff(rep.mean_G, rep.exact)}}));
    rep.results.push_back(make_check("gram_lambda_min_positive", cfg.inits, v_pos,
                                     cfg.lambda_min_delta,
                                     {{"min_lambda_min", sorted_lmin.front()},
                                      {"median_lambda_min", sorted_lmin[sorted_lmin.size() / 2]}}));
    rep.results.push_back(make_check("gram_H_bound", cfg.inits, v_h, cfg.h_bound_delta,
                                     {{"max_H_over_lambda_min", worst_ratio}}));
    return rep;
}

} // namespace falab
