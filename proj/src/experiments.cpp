#include "falab/experiments.hpp"

#include "falab/data.hpp"
#include "falab/diagnostics.hpp"
#include "falab/errors.hpp"
#include "falab/format.hpp"
#include "falab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

namespace falab {

using nlohmann::json;

namespace {

// Reads typed fields from one JSON object and rejects keys nobody asked for.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
        if (!obj_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
    }

    bool has(const char* key) const { return obj_.contains(key); }

    template <class T>
    void get(const char* key, T& out) {
        used_.insert(key);
        const auto it = obj_.find(key);
        if (it == obj_.end()) return;
        read(*it, out, where_ + "." + key);
    }

    const json& raw(const char* key) {
        used_.insert(key);
        return obj_.at(key);
    }

    void finish() const {
        for (const auto& [key, value] : obj_.items())
            if (!used_.count(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
    }

private:
    static void read(const json& v, double& out, const std::string& name) {
        if (!v.is_number()) throw ConfigError(name + ": expected a number");
        out = v.get<double>();
        if (!std::isfinite(out)) throw ConfigError(name + ": must be finite");
    }
    static void read(const json& v, std::size_t& out, const std::string& name) {
        if (v.is_number_unsigned()) {
            out = v.get<std::size_t>();
            return;
        }
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
            out = static_cast<std::size_t>(v.get<std::int64_t>());
            return;
        }
        throw ConfigError(name + ": expected a non-negative integer");
    }
    static void read(const json& v, unsigned long long& out, const std::string& name) {
        std::size_t tmp = 0;
        read(v, tmp, name);
        out = tmp;
    }
    static void read(const json& v, bool& out, const std::string& name) {
        if (!v.is_boolean()) throw ConfigError(name + ": expected true or false");
        out = v.get<bool>();
    }
    static void read(const json& v, std::string& out, const std::string& name) {
        if (!v.is_string()) throw ConfigError(name + ": expected a string");
        out = v.get<std::string>();
    }
    template <class T>
    static void read(const json& v, std::vector<T>& out, const std::string& name) {
        if (!v.is_array()) throw ConfigError(name + ": expected an array");
        out.clear();
        for (std::size_t k = 0; k < v.size(); ++k) {
            T item{};
            read(v[k], item, name + "[" + std::to_string(k) + "]");
            out.push_back(item);
        }
    }

    const json& obj_;
    std::string where_;
    std::set<std::string> used_;
};

Activation read_activation(ObjectReader& r, const char* key, Activation fallback) {
    std::string name;
    r.get(key, name);
    return name.empty() ? fallback : parse_activation(name);
}

ScheduleSpec parse_schedule(const json& obj) {
    ObjectReader r(obj, "schedule");
    std::string kind;
    r.get("kind", kind);
    ScheduleSpec s;
    if (kind == "zero" || kind.empty()) {
        s.kind = ScheduleSpecKind::zero;
    } else if (kind == "constant") {
        s.kind = ScheduleSpecKind::constant;
        if (!r.has("lambda")) throw ConfigError("schedule: constant needs 'lambda'");
        r.get("lambda", s.lambda);
    } else if (kind == "cutoff") {
        s.kind = ScheduleSpecKind::cutoff;
        if (!r.has("lambda") || !r.has("T")) throw ConfigError("schedule: cutoff needs 'lambda' and 'T'");
        r.get("lambda", s.lambda);
        r.get("T", s.last_step);
    } else if (kind == "exp_decay") {
        s.kind = ScheduleSpecKind::exp_decay;
        if (!r.has("lambda0") || !r.has("rate"))
            throw ConfigError("schedule: exp_decay needs 'lambda0' and 'rate'");
        r.get("lambda0", s.lambda0);
        r.get("rate", s.rate);
    } else if (kind == "paper_cutoff") {
        s.kind = ScheduleSpecKind::paper_cutoff;
    } else {
        throw ConfigError("schedule: unknown kind '" + kind + "'");
    }
    r.finish();
    return s;
}

void parse_verify(const json& obj, VerifySettings& v) {
    ObjectReader r(obj, "verify");
    r.get("suite", v.suite);
    if (r.has("concentration")) {
        ObjectReader c(r.raw("concentration"), "verify.concentration");
        auto& cc = v.concentration;
        c.get("p", cc.p);
        c.get("d", cc.d);
        c.get("n", cc.n);
        c.get("teacher_p", cc.teacher_p);
        c.get("trials", cc.trials);
        c.get("delta", cc.delta);
        c.get("epsilon", cc.epsilon);
        c.get("tail_t", cc.tail_t);
        c.finish();
    }
    if (r.has("isometry")) {
        ObjectReader c(r.raw("isometry"), "verify.isometry");
        c.get("n", v.isometry_n);
        c.get("d", v.isometry_d);
        c.get("epsilon", v.isometry_epsilon);
        c.get("trials", v.isometry_trials);
        c.get("delta", v.isometry_delta);
        c.finish();
    }
    if (r.has("gram")) {
        ObjectReader c(r.raw("gram"), "verify.gram");
        auto& g = v.gram;
        c.get("n", g.n);
        c.get("d", g.d);
        c.get("p", g.p);
        c.get("inits", g.inits);
        g.act = read_activation(c, "activation", g.act);
        c.get("sigma_limit", g.sigma_limit);
        c.get("lambda_min_delta", g.lambda_min_delta);
        c.get("h_bound_delta", g.h_bound_delta);
        c.finish();
    }
    if (r.has("dynamics")) {
        ObjectReader c(r.raw("dynamics"), "verify.dynamics");
        auto& o = v.oracle;
        c.get("instances", o.instances);
        c.get("steps", o.steps);
        c.get("closed_form_steps", o.closed_form_steps);
        c.get("tolerance", o.tolerance);
        c.get("closed_form_tolerance", o.closed_form_tolerance);
        c.finish();
    }
    if (r.has("alignment")) {
        ObjectReader c(r.raw("alignment"), "verify.alignment");
        c.get("threshold", v.alignment_threshold);
        if (c.has("tau")) {
            std::size_t tau = 0;
            c.get("tau", tau);
            v.alignment_tau = tau;
        }
        c.finish();
    }
    r.finish();
}

double nominal_lambda(const ScheduleSpec& s) {
    switch (s.kind) {
    case ScheduleSpecKind::constant:
    case ScheduleSpecKind::cutoff: return s.lambda;
    case ScheduleSpecKind::exp_decay: return s.lambda0;
    default: return 0.0;
    }
}

ScheduleSpec with_lambda(ScheduleSpec s, double lambda) {
    switch (s.kind) {
    case ScheduleSpecKind::zero:
    case ScheduleSpecKind::constant:
        s.kind = lambda > 0.0 ? ScheduleSpecKind::constant : ScheduleSpecKind::zero;
        s.lambda = lambda;
        break;
    case ScheduleSpecKind::cutoff: s.lambda = lambda; break;
    case ScheduleSpecKind::exp_decay: s.lambda0 = lambda; break;
    case ScheduleSpecKind::paper_cutoff:
        throw ConfigError("sweep_lambda cannot be combined with the paper_cutoff schedule");
    }
    return s;
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw IoError("cannot create output directory '" + dir.string() + "'");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string rep_suffix(std::size_t k) { return "/rep" + std::to_string(k); }

json schedule_json(const ResolvedSchedule& rs) {
    const Schedule& s = rs.schedule;
    json j{{"kind", std::string(to_string(s.kind()))}, {"lambda", s.lambda()}};
    if (s.kind() == ScheduleKind::cutoff) j["T"] = s.last_step();
    if (s.kind() == ScheduleKind::exp_decay) j["rate"] = s.rate();
    if (rs.budget > 0.0) j["S_lambda"] = rs.budget;
    if (rs.gamma > 0.0) {
        j["gamma"] = rs.gamma;
        j["lambda_max_XXT"] = rs.lambda_max;
    }
    return j;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

} // namespace

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
    ExperimentConfig cfg;
    ObjectReader r(doc, "config");
    r.get("n", cfg.n);
    r.get("d", cfg.d);
    r.get("p", cfg.p);
    cfg.activation = read_activation(r, "activation", cfg.activation);
    std::string algo;
    r.get("algorithm", algo);
    if (!algo.empty()) cfg.algorithm = parse_algorithm(algo);
    r.get("eta", cfg.eta);
    r.get("steps", cfg.steps);
    if (r.has("schedule")) cfg.schedule = parse_schedule(r.raw("schedule"));
    unsigned long long seed = cfg.seed;
    r.get("seed", seed);
    cfg.seed = seed;
    r.get("repeats", cfg.repeats);
    r.get("sweep_p", cfg.sweep_p);
    r.get("sweep_lambda", cfg.sweep_lambda);
    r.get("cutoff_cS", cfg.cutoff_cS);
    r.get("cutoff_L", cfg.cutoff_L);
    cfg.teacher_activation = cfg.activation;
    if (r.has("teacher")) {
        ObjectReader t(r.raw("teacher"), "teacher");
        cfg.teacher_activation = read_activation(t, "activation", cfg.activation);
        t.get("p", cfg.teacher_p);
        t.finish();
    }
    std::string data_path;
    r.get("data_path", data_path);
    if (!data_path.empty()) {
        cfg.data_path = data_path;
        if (cfg.data_path.is_relative() && !base_dir.empty()) cfg.data_path = base_dir / cfg.data_path;
    }
    r.get("project_labels", cfg.project_labels);
    if (r.has("verify")) parse_verify(r.raw("verify"), cfg.verify);
    r.finish();
    validate(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc, path.parent_path());
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.n == 0 || cfg.d == 0 || cfg.p == 0) throw ConfigError("n, d and p must be positive");
    if (!(cfg.eta > 0.0)) throw ConfigError("eta must be positive");
    if (cfg.steps == 0) throw ConfigError("steps must be at least 1");
    if (cfg.repeats == 0) throw ConfigError("repeats must be at least 1");
    if (cfg.teacher_p == 0) throw ConfigError("teacher.p must be positive");
    if (!(cfg.cutoff_cS > 0.0) || !(cfg.cutoff_L > 0.0))
        throw ConfigError("cutoff_cS and cutoff_L must be positive");
    const auto& s = cfg.schedule;
    if (s.lambda < 0.0 || s.lambda0 < 0.0) throw ConfigError("schedule: lambda must be non-negative");
    if (s.kind == ScheduleSpecKind::exp_decay && !(s.rate > 0.0 && s.rate < 1.0))
        throw ConfigError("schedule: exp_decay rate must lie in (0, 1)");
    double lam_max = nominal_lambda(s);
    for (double l : cfg.sweep_lambda) {
        if (!(l >= 0.0)) throw ConfigError("sweep_lambda entries must be non-negative");
        lam_max = std::max(lam_max, l);
    }
    if (cfg.eta * lam_max >= 1.0)
        throw ConfigError("eta*lambda must stay below 1 (got " + format_double(cfg.eta * lam_max) + ")");
    if (!cfg.sweep_lambda.empty() && s.kind == ScheduleSpecKind::paper_cutoff)
        throw ConfigError("sweep_lambda cannot be combined with the paper_cutoff schedule");
    const bool regularized = s.kind != ScheduleSpecKind::zero ||
                             std::any_of(cfg.sweep_lambda.begin(), cfg.sweep_lambda.end(),
                                         [](double l) { return l > 0.0; });
    if (cfg.algorithm == Algorithm::fa && regularized)
        throw ConfigError("algorithm 'fa' trains without regularization; use 'fa_reg' with a schedule");
    for (std::size_t p : cfg.sweep_p)
        if (p == 0) throw ConfigError("sweep_p entries must be positive");
    const auto& v = cfg.verify;
    static const std::set<std::string> suites = {"concentration", "isometry", "gram", "dynamics",
                                                 "contraction", "alignment", "all"};
    if (!suites.count(v.suite)) throw ConfigError("verify.suite: unknown suite '" + v.suite + "'");
    if (!(v.concentration.delta > 0.0 && v.concentration.delta < 1.0))
        throw ConfigError("verify.concentration.delta must lie in (0, 1)");
    if (v.concentration.p < 2 || v.concentration.trials < 100)
        throw ConfigError("verify.concentration needs p >= 2 and at least 100 trials");
    if (v.isometry_n >= v.isometry_d) throw ConfigError("verify.isometry needs n < d");
    if (v.gram.act == Activation::relu) throw ConfigError("verify.gram: relu is not supported");
}

Dataset make_dataset(const ExperimentConfig& cfg, std::size_t repeat) {
    Dataset data;
    if (!cfg.data_path.empty()) {
        data = load_csv(cfg.data_path);
    } else {
        data = gen_synthetic(cfg.n, cfg.d, TeacherSpec{cfg.d, cfg.teacher_p, cfg.teacher_activation},
                             cfg.seed, rep_suffix(repeat));
    }
    if (cfg.project_labels) data.y = project_y(data.X, data.y);
    return data;
}

ResolvedSchedule resolve_schedule(const ScheduleSpec& spec, const ExperimentConfig& cfg,
                                  const Dataset& data, std::size_t p) {
    ResolvedSchedule rs;
    switch (spec.kind) {
    case ScheduleSpecKind::zero: rs.schedule = Schedule::zero(); break;
    case ScheduleSpecKind::constant: rs.schedule = Schedule::constant(spec.lambda); break;
    case ScheduleSpecKind::cutoff: rs.schedule = Schedule::cutoff(spec.lambda, spec.last_step); break;
    case ScheduleSpecKind::exp_decay:
        rs.schedule = Schedule::exp_decay(spec.lambda0, spec.rate);
        rs.budget = rs.schedule.cumulative();
        break;
    case ScheduleSpecKind::paper_cutoff: {
        const SymEig eig = sym_eig(gram(data.X));
        rs.gamma = eig.values.front();
        rs.lambda_max = eig.values.back();
        if (!(rs.gamma > 0.0))
            throw ConfigError("paper_cutoff needs XX^T to be positive definite (n < d)");
        const PaperCutoff pc =
            paper_cutoff_schedule(rs.gamma, rs.lambda_max, p, cfg.eta, data.n(), cfg.cutoff_cS, cfg.cutoff_L);
        if (cfg.eta * pc.lambda >= 1.0)
            throw ConfigError("paper_cutoff gives eta*lambda = " + format_double(cfg.eta * pc.lambda) +
                              " >= 1");
        rs.schedule = pc.schedule;
        rs.budget = pc.budget;
        break;
    }
    }
    return rs;
}

RunSummary summarize(const Trajectory& traj) {
    RunSummary s;
    const StepRecord& last = traj.terminal;
    s.final_err_norm = last.err_norm;
    s.final_cos_align = last.cos_align;
    s.final_beta_drift = last.max_beta_drift;
    s.final_w_drift = last.max_w_drift;
    const auto recs = traj.all_records();
    s.initial_err_norm = recs.front().err_norm;
    for (const auto& r : recs)
        if (r.err_norm <= 0.5 * s.initial_err_norm) {
            s.steps_to_half_error = r.t;
            break;
        }
    return s;
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
    std::string text =
        "t,loss,err_norm,cos_align,a_t,xi_norm,max_w_drift,max_beta_drift,lambda_t,s_hat_norm,S_hat\n";
    for (const auto& r : traj.records) {
        text += std::to_string(r.t);
        for (double v : {r.loss, r.err_norm, r.cos_align, r.a_t, r.xi_norm, r.max_w_drift,
                         r.max_beta_drift, r.lambda_t, r.s_hat_norm, r.S_hat}) {
            text += ',';
            text += format_double(v);
        }
        text += '\n';
    }
    write_text(path, text);
}

namespace {

json summary_json(const RunSummary& s) {
    json j{{"final_err_norm", s.final_err_norm},
           {"final_cos_align", s.final_cos_align},
           {"final_max_beta_drift", s.final_beta_drift},
           {"final_max_w_drift", s.final_w_drift},
           {"initial_err_norm", s.initial_err_norm}};
    j["steps_to_half_error"] = s.steps_to_half_error ? json(*s.steps_to_half_error) : json(nullptr);
    return j;
}

} // namespace

SingleRun run_single(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    if (!out_dir.empty()) ensure_dir(out_dir);
    const Dataset data = make_dataset(cfg, 0);
    if (data.d() != cfg.d && cfg.data_path.empty())
        throw ConfigError("dataset dimension does not match d");
    TwoLayerNet net = gaussian_init(cfg.p, data.d(), cfg.activation, cfg.seed, rep_suffix(0));
    SingleRun run;
    run.schedule = resolve_schedule(cfg.schedule, cfg, data, cfg.p);
    try {
        run.trajectory = train(net, data, cfg.eta, run.schedule.schedule, cfg.steps, cfg.algorithm);
    } catch (const DivergenceError& e) {
        if (!out_dir.empty()) write_trajectory_csv(e.partial(), out_dir / "trajectory.csv");
        throw;
    }
    run.summary = summarize(run.trajectory);
    if (!out_dir.empty()) {
        write_trajectory_csv(run.trajectory, out_dir / "trajectory.csv");
        json j = summary_json(run.summary);
        j["schedule"] = schedule_json(run.schedule);
        j["n"] = data.n();
        j["d"] = data.d();
        j["p"] = cfg.p;
        j["seed"] = cfg.seed;
        j["steps"] = cfg.steps;
        write_text(out_dir / "summary.json", j.dump(2) + "\n");
    }
    return run;
}

SweepResult run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                      unsigned threads) {
    if (!out_dir.empty()) ensure_dir(out_dir);
    const std::vector<std::size_t> widths = cfg.sweep_p.empty() ? std::vector<std::size_t>{cfg.p} : cfg.sweep_p;
    std::vector<std::optional<double>> lambdas;
    if (cfg.sweep_lambda.empty())
        lambdas.push_back(std::nullopt);
    else
        for (double l : cfg.sweep_lambda) lambdas.push_back(l);

    struct Job {
        std::size_t cell;
        std::size_t repeat;
    };
    struct JobResult {
        std::size_t cell = 0;
        std::size_t repeat = 0;
        RunSummary summary;
        double lambda = 0.0;
        bool diverged = false;
        std::exception_ptr error;
    };

    SweepResult res;
    std::vector<ScheduleSpec> specs;
    for (std::size_t p : widths)
        for (const auto& l : lambdas) {
            SweepCell cell;
            cell.p = p;
            cell.runs.resize(cfg.repeats);
            cell.diverged.assign(cfg.repeats, false);
            const ScheduleSpec spec = l ? with_lambda(cfg.schedule, *l) : cfg.schedule;
            cell.lambda = nominal_lambda(spec);
            specs.push_back(spec);
            res.cells.push_back(std::move(cell));
        }
    std::vector<Job> jobs;
    for (std::size_t c = 0; c < res.cells.size(); ++c)
        for (std::size_t k = 0; k < cfg.repeats; ++k) jobs.push_back({c, k});

    Channel<JobResult> channel;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs.size()) return;
            JobResult out;
            out.cell = jobs[j].cell;
            out.repeat = jobs[j].repeat;
            try {
                const SweepCell& cell = res.cells[out.cell];
                const Dataset data = make_dataset(cfg, out.repeat);
                TwoLayerNet net = gaussian_init(cell.p, data.d(), cfg.activation, cfg.seed,
                                                rep_suffix(out.repeat));
                const ResolvedSchedule rs = resolve_schedule(specs[out.cell], cfg, data, cell.p);
                out.lambda = rs.schedule.lambda();
                try {
                    const Trajectory traj =
                        train(net, data, cfg.eta, rs.schedule, cfg.steps, cfg.algorithm);
                    out.summary = summarize(traj);
                } catch (const DivergenceError&) {
                    out.diverged = true;
                }
            } catch (...) {
                out.error = std::current_exception();
            }
            channel.push(std::move(out));
        }
    };
    const unsigned n_workers =
        static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), jobs.size()));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);

    // results arrive in any order; they are slotted by (cell, repeat)
    std::exception_ptr first_error;
    std::vector<std::vector<double>> resolved_lambda(res.cells.size(),
                                                     std::vector<double>(cfg.repeats, 0.0));
    for (std::size_t received = 0; received < jobs.size(); ++received) {
        auto r = channel.pop();
        if (!r) break;
        if (r->error) {
            if (!first_error) first_error = r->error;
            continue;
        }
        res.cells[r->cell].runs[r->repeat] = r->summary;
        res.cells[r->cell].diverged[r->repeat] = r->diverged;
        resolved_lambda[r->cell][r->repeat] = r->lambda;
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    for (std::size_t c = 0; c < res.cells.size(); ++c) {
        SweepCell& cell = res.cells[c];
        if (specs[c].kind == ScheduleSpecKind::paper_cutoff) cell.lambda = mean_of(resolved_lambda[c]);
        std::vector<double> cos, abs_cos, err, drift;
        for (std::size_t k = 0; k < cfg.repeats; ++k) {
            if (cell.diverged[k]) {
                cell.any_diverged = true;
                continue;
            }
            cos.push_back(cell.runs[k].final_cos_align);
            abs_cos.push_back(std::abs(cell.runs[k].final_cos_align));
            err.push_back(cell.runs[k].final_err_norm);
            drift.push_back(cell.runs[k].final_beta_drift);
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        cell.mean_cos = cell.any_diverged ? nan : mean_of(cos);
        cell.std_cos = cell.any_diverged ? nan : sample_std(cos);
        cell.mean_abs_cos = cell.any_diverged ? nan : mean_of(abs_cos);
        cell.mean_final_err = cell.any_diverged ? nan : mean_of(err);
        cell.std_final_err = cell.any_diverged ? nan : sample_std(err);
        cell.mean_beta_drift = cell.any_diverged ? nan : mean_of(drift);
    }

    if (!out_dir.empty()) {
        write_sweep_csv(res, out_dir / "sweep.csv");
        std::string runs = "p,lambda,repeat,diverged,final_cos,final_err,final_max_beta_drift,final_max_w_drift\n";
        for (const auto& cell : res.cells)
            for (std::size_t k = 0; k < cell.runs.size(); ++k) {
                const auto& r = cell.runs[k];
                runs += std::to_string(cell.p) + ',' + format_double(cell.lambda) + ',' +
                        std::to_string(k) + ',' + (cell.diverged[k] ? "1" : "0") + ',' +
                        format_double(r.final_cos_align) + ',' + format_double(r.final_err_norm) +
                        ',' + format_double(r.final_beta_drift) + ',' +
                        format_double(r.final_w_drift) + '\n';
            }
        write_text(out_dir / "sweep_runs.csv", runs);
    }
    return res;
}

void write_sweep_csv(const SweepResult& res, const std::filesystem::path& path) {
    std::string text = "p,lambda,mean_cos,std_cos,mean_final_err,std_final_err\n";
    for (const auto& c : res.cells) {
        text += std::to_string(c.p) + ',' + format_double(c.lambda) + ',' + format_double(c.mean_cos) +
                ',' + format_double(c.std_cos) + ',' + format_double(c.mean_final_err) + ',' +
                format_double(c.std_final_err) + '\n';
    }
    write_text(path, text);
}

bool VerifyReport::all_pass() const {
    return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.pass; });
}

std::string format_check(const CheckResult& r) {
    std::string s = (r.pass ? "PASS " : "FAIL ") + r.name + " trials=" + std::to_string(r.trials) +
                    " violations=" + std::to_string(r.violations) +
                    " nominal_delta=" + format_double(r.nominal_delta);
    for (const auto& [k, v] : r.details) s += " " + k + "=" + format_double(v);
    return s;
}

json check_to_json(const CheckResult& r) {
    json details = json::object();
    for (const auto& [k, v] : r.details) details[k] = v;
    return json{{"name", r.name},
                {"trials", r.trials},
                {"violations", r.violations},
                {"nominal_delta", r.nominal_delta},
                {"pass", r.pass},
                {"details", details}};
}

namespace {

CheckResult diverged_check(const std::string& name, const DivergenceError& e) {
    return make_check(name, 1, 1, 0.0,
                      {{"diverged_after_step", static_cast<double>(e.last_finite_step())}});
}

void run_contraction_suite(const ExperimentConfig& cfg, VerifyReport& rep) {
    const Dataset data = make_dataset(cfg, 0);
    TwoLayerNet net = gaussian_init(cfg.p, data.d(), cfg.activation, cfg.seed, rep_suffix(0));
    double gamma = 0.0, divisor = 2.0;
    if (cfg.activation == Activation::identity) {
        gamma = lambda_min(gram(data.X));
    } else {
        gamma = gram_pair(net, data.X).lambda_min_G;
        divisor = 4.0;
    }
    const ResolvedSchedule rs = resolve_schedule(cfg.schedule, cfg, data, cfg.p);
    try {
        const Trajectory traj = train(net, data, cfg.eta, rs.schedule, cfg.steps, cfg.algorithm);
        CheckResult r = check_contraction(traj, gamma, cfg.eta, divisor);
        r.details.emplace_back("final_err_norm", traj.terminal.err_norm);
        rep.results.push_back(std::move(r));
    } catch (const DivergenceError& e) {
        rep.results.push_back(diverged_check("contraction", e));
    }
}

void run_alignment_suite(const ExperimentConfig& cfg, VerifyReport& rep) {
    const Dataset data = make_dataset(cfg, 0);
    TwoLayerNet net = gaussian_init(cfg.p, data.d(), cfg.activation, cfg.seed, rep_suffix(0));
    const ResolvedSchedule rs = resolve_schedule(cfg.schedule, cfg, data, cfg.p);
    const double gamma = rs.gamma > 0.0 ? rs.gamma : lambda_min(gram(data.X));
    const std::size_t last =
        rs.schedule.kind() == ScheduleKind::cutoff ? rs.schedule.last_step() : 0;
    try {
        const Trajectory traj = train(net, data, cfg.eta, rs.schedule, cfg.steps, cfg.algorithm);
        rep.results.push_back(check_alignment_condition(traj, cfg.p, cfg.eta, gamma, last,
                                                        cfg.verify.alignment_threshold));
        if (rs.schedule.kind() == ScheduleKind::cutoff && traj.y_norm > 0.0) {
            const double lam = rs.schedule.lambda();
            const std::size_t tau =
                cfg.verify.alignment_tau.value_or(a_bound_burn_in(lam, gamma, cfg.eta));
            CheckResult r = check_a_lower_bound(traj, lam, gamma, tau, last);
            const double top = rs.lambda_max > 0.0 ? rs.lambda_max : lambda_max(gram(data.X));
            r.details.emplace_back("tau", static_cast<double>(tau));
            r.details.emplace_back("T", static_cast<double>(last));
            r.details.emplace_back("lambda_max_over_gamma", top / gamma);
            rep.results.push_back(std::move(r));
        }
    } catch (const DivergenceError& e) {
        rep.results.push_back(diverged_check("alignment_condition", e));
    }
}

} // namespace

VerifyReport run_verify(const ExperimentConfig& cfg, const std::string& suite,
                        const std::filesystem::path& out_dir, unsigned threads) {
    static const std::set<std::string> suites = {"concentration", "isometry", "gram", "dynamics",
                                                 "contraction", "alignment", "all"};
    if (!suites.count(suite)) throw ConfigError("unknown verification suite '" + suite + "'");
    if (!out_dir.empty()) ensure_dir(out_dir);
    const bool all = suite == "all";
    VerifyReport rep;
    const auto& v = cfg.verify;

    if (all || suite == "concentration") {
        ConcentrationConfig c = v.concentration;
        c.seed = cfg.seed;
        c.threads = threads;
        for (auto& r : check_init_concentration(c)) rep.results.push_back(std::move(r));
    }
    if (all || suite == "isometry")
        rep.results.push_back(check_isometry(v.isometry_n, v.isometry_d, v.isometry_epsilon,
                                             v.isometry_trials, v.isometry_delta, cfg.seed, threads));
    if (all || suite == "gram") {
        GramCheckConfig g = v.gram;
        g.seed = cfg.seed;
        g.threads = threads;
        for (auto& r : check_gram_conditions(g).results) rep.results.push_back(std::move(r));
    }
    if (all || suite == "dynamics") {
        OracleConfig o = v.oracle;
        o.seed = cfg.seed;
        o.threads = threads;
        for (auto& r : check_oracle_equivalence(o)) rep.results.push_back(std::move(r));
    }
    if (all || suite == "contraction") run_contraction_suite(cfg, rep);
    if (all || suite == "alignment") run_alignment_suite(cfg, rep);

    if (!out_dir.empty()) {
        std::string text, records;
        for (const auto& r : rep.results) {
            text += format_check(r) + "\n";
            records += check_to_json(r).dump() + "\n";
        }
        text += rep.all_pass() ? "ALL PASS\n" : "FAILURES PRESENT\n";
        write_text(out_dir / "verify_report.txt", text);
        write_text(out_dir / "verify_records.jsonl", records);
    }
    return rep;
}

Dataset gen_data(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    ensure_dir(out_dir);
    ExperimentConfig synth = cfg;
    synth.data_path.clear();
    const Dataset data = make_dataset(synth, 0);
    save_csv(data, out_dir / "data.csv");
    return data;
}

} // namespace falab
