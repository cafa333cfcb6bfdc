#include "pprdyn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace pprdyn {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Mean l1 error the calibration steers toward when the plan leaves eps at 0.
constexpr double kCalibrationTarget = 1e-6;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// An inserted edge remembered for per-source replay against the view of the
// graph that existed just before it.
struct ReplayEdge {
    NodeId u;
    NodeId v;
    std::uint32_t epoch;
};

// Runs body(i, workspace) for every i in [0, count) across the configured
// worker count. Worker errors are rethrown on the calling thread.
template <class F>
void parallel_sources(std::size_t count, F&& body) {
    std::size_t workers = std::min(worker_count(), std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        SolverWorkspace ws;
        for (std::size_t i = 0; i < count; ++i) body(i, ws);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            SolverWorkspace ws;
            try {
                while (true) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= count) break;
                    body(i, ws);
                }
            } catch (...) {
                errors[w] = std::current_exception();
                next.store(count);
            }
        });
    }
    for (std::thread& th : pool) th.join();
    for (std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

std::vector<std::size_t> pick_sample_indices(std::size_t count, std::size_t want,
                                             std::uint64_t seed) {
    std::vector<std::size_t> all(count);
    for (std::size_t i = 0; i < count; ++i) all[i] = i;
    Rng rng(seed);
    rng.shuffle(all);
    all.resize(std::min(want, count));
    std::sort(all.begin(), all.end());
    return all;
}

double export_tol(const PprConfig& cfg) { return std::max(1e-8, 4.0 * cfg.eps); }

std::vector<std::size_t> mlp_dims(std::size_t input, int label_count) {
    return {input, 128, 32, 16, static_cast<std::size_t>(label_count)};
}

bool nan_equal(double a, double b) {
    if (std::isnan(a) && std::isnan(b)) return true;
    return a == b;
}

} // namespace

const char* solver_kind_name(SolverKind k) {
    return k == SolverKind::Push ? "push" : "ista";
}

SolverKind parse_solver_kind(const std::string& s) {
    if (s == "push") return SolverKind::Push;
    if (s == "ista") return SolverKind::Ista;
    throw std::invalid_argument("unknown solver '" + s + "' (want push or ista)");
}

std::string ExperimentPlan::method_name() const {
    return std::string(solver_kind_name(solver)) + (dynamic ? "-dynamic" : "-static");
}

std::size_t worker_count() {
    std::size_t n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("PPRDYN_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1)
            throw std::invalid_argument("PPRDYN_THREADS must be a positive integer");
        n = static_cast<std::size_t>(v);
    }
    return n;
}

double calibrate_eps(const Dataset& ds, const SnapshotSchedule& sched, SolverKind solver,
                     double alpha, double target_l1, std::uint64_t seed,
                     std::size_t sample_sources) {
    if (ds.tracked.empty())
        throw std::invalid_argument("calibration needs a dataset with tracked sources");
    if (target_l1 <= 0.0) throw std::invalid_argument("target l1 must be positive");

    DynamicGraph g(ds.node_count);
    for (std::size_t i = 0; i < sched.base; ++i) g.insert_edge(ds.events[i].u, ds.events[i].v);

    std::vector<std::size_t> idx =
        pick_sample_indices(ds.tracked.size(), sample_sources, mix_seed(seed, 0x6570ULL));
    std::vector<NodeId> sources;
    sources.reserve(idx.size());
    for (std::size_t i : idx) sources.push_back(ds.tracked[i]);

    std::vector<std::vector<double>> oracles;
    oracles.reserve(sources.size());
    for (NodeId s : sources) oracles.push_back(power_iteration_dense(g, s, alpha, 1e-12));

    SolverWorkspace ws;
    auto mean_l1 = [&](double eps) {
        PprConfig cfg;
        cfg.alpha = alpha;
        cfg.eps = eps;
        double sum = 0.0;
        for (std::size_t i = 0; i < sources.size(); ++i) {
            if (solver == SolverKind::Push) {
                PushState st = make_push_state(g, sources[i]);
                forward_push(g, st, cfg, ws);
                sum += l1_error(to_ppr(st, export_tol(cfg)), oracles[i]);
            } else {
                PprState st = make_ista_state(g, sources[i], cfg);
                ista_solve(g, st, cfg, ws);
                sum += l1_error(to_ppr(g, st, export_tol(cfg)), oracles[i]);
            }
        }
        return sum / static_cast<double>(sources.size());
    };

    double lo = 1e-12;
    double hi = 0.05;
    for (int iter = 0; iter < 48; ++iter) {
        double mid = std::sqrt(lo * hi);
        double err = mean_l1(mid);
        if (err >= 0.5 * target_l1 && err <= 2.0 * target_l1) return mid;
        if (err > target_l1)
            hi = mid;
        else
            lo = mid;
    }
    return std::sqrt(lo * hi);
}

namespace {

RunReport run_impl(const ExperimentPlan& plan, const Dataset& ds_in) {
    RunReport rep;
    rep.plan = plan;

    Dataset ds = ds_in;
    SnapshotSchedule sched = build_schedule(ds.events.size(), plan.schedule, plan.schedule_params);
    build_tracking(ds, sched, plan.seed, plan.track_cap);
    rep.dataset_name = ds.name;
    rep.tracked_count = ds.tracked.size();

    PprConfig cfg;
    cfg.alpha = plan.alpha;
    cfg.eps = plan.eps > 0.0
                  ? plan.eps
                  : calibrate_eps(ds, sched, plan.solver, plan.alpha, kCalibrationTarget, plan.seed);
    rep.eps_used = cfg.eps;

    const bool use_noise = plan.lambda_base >= 0.0;
    NoiseConfig noise;
    if (use_noise) noise = make_noise_config(ds.X, plan.lambda_base, mix_seed(plan.seed, 0x6e6fULL));

    const std::size_t S = ds.tracked.size();
    const bool is_push = plan.solver == SolverKind::Push;
    const std::size_t T = sched.num_steps();
    const std::size_t pe_dim = plan.pe_dim ? plan.pe_dim : default_pe_dim(ds.node_count);
    const std::uint64_t pe_seed = mix_seed(plan.seed, 0x7065ULL);
    const double tol = export_tol(cfg);

    bool need_h = false;
    bool need_pe = false;
    for (FusionMode m : plan.modes) {
        if (m != FusionMode::PeOnly) need_h = true;
        if (m != FusionMode::FeatOnly) need_pe = true;
    }

    std::vector<std::int64_t> idx_of(ds.node_count, -1);
    for (std::size_t i = 0; i < S; ++i) idx_of[ds.tracked[i]] = static_cast<std::int64_t>(i);

    std::vector<std::size_t> l1_idx =
        pick_sample_indices(S, plan.l1_samples, mix_seed(plan.seed, 0x4c31ULL));

    DynamicGraph g(ds.node_count);
    std::size_t offset = 0;
    for (; offset < sched.base; ++offset) g.insert_edge(ds.events[offset].u, ds.events[offset].v);

    std::vector<PprState> xs;
    std::vector<PushState> ps;

    for (std::size_t t = 0; t <= T; ++t) {
        try {
            Clock::time_point t_snap = Clock::now();
            std::vector<std::uint64_t> op_start(S, 0);

            std::vector<ReplayEdge> batch;
            if (t > 0) {
                std::size_t cnt = sched.steps[t - 1];
                batch.reserve(cnt);
                for (std::size_t k = 0; k < cnt; ++k) {
                    const EdgeEvent& ev = ds.events[offset + k];
                    std::uint32_t ep = g.epoch();
                    if (g.insert_edge(ev.u, ev.v)) batch.push_back({ev.u, ev.v, ep});
                }
                offset += cnt;
            }

            if (plan.dynamic) {
                if (t == 0) {
                    if (is_push) {
                        ps.reserve(S);
                        for (NodeId s : ds.tracked) ps.push_back(make_push_state(g, s));
                    } else {
                        xs.reserve(S);
                        for (NodeId s : ds.tracked) xs.push_back(make_ista_state(g, s, cfg));
                    }
                } else {
                    for (std::size_t i = 0; i < S; ++i)
                        op_start[i] = is_push ? ps[i].op_count : xs[i].op_count;
                    parallel_sources(S, [&](std::size_t i, SolverWorkspace&) {
                        try {
                            for (const ReplayEdge& e : batch) {
                                GraphView pre(g, e.epoch);
                                if (is_push) {
                                    push_adjust_edge(ps[i], pre, e.u, e.v, cfg);
                                    push_adjust_edge(ps[i], pre, e.v, e.u, cfg);
                                } else {
                                    ista_adjust_edge(xs[i], pre, e.u, e.v, cfg);
                                    ista_adjust_edge(xs[i], pre, e.v, e.u, cfg);
                                }
                            }
                        } catch (const DegreeZeroError&) {
                            // Cold fallback: rebuild the state on the current graph.
                            if (is_push)
                                ps[i] = make_push_state(g, ds.tracked[i]);
                            else
                                xs[i] = make_ista_state(g, ds.tracked[i], cfg);
                        }
                    });
                }
            } else {
                if (is_push) {
                    ps.clear();
                    ps.reserve(S);
                    for (NodeId s : ds.tracked) ps.push_back(make_push_state(g, s));
                } else {
                    xs.clear();
                    xs.reserve(S);
                    for (NodeId s : ds.tracked) xs.push_back(make_ista_state(g, s, cfg));
                }
            }

            parallel_sources(S, [&](std::size_t i, SolverWorkspace& ws) {
                if (is_push)
                    forward_push(g, ps[i], cfg, ws);
                else
                    ista_solve(g, xs[i], cfg, ws);
            });

            std::uint64_t snap_ops = 0;
            for (std::size_t i = 0; i < S; ++i)
                snap_ops += (is_push ? ps[i].op_count : xs[i].op_count) - op_start[i];

            double max_viol = 0.0;
            bool cert_ok = true;
            for (std::size_t i = 0; i < S; ++i) {
                CertificateReport c = is_push ? certificate_check(g, ps[i], cfg)
                                              : certificate_check(g, xs[i], cfg);
                max_viol = std::max(max_viol, c.max_violation);
                cert_ok = cert_ok && c.ok;
            }

            std::vector<PprVector> pis(S);
            bool need_pis = !plan.modes.empty();
            if (need_pis) {
                parallel_sources(S, [&](std::size_t i, SolverWorkspace&) {
                    pis[i] = is_push ? to_ppr(ps[i], tol) : to_ppr(g, xs[i], tol);
                });
            } else {
                for (std::size_t i : l1_idx)
                    pis[i] = is_push ? to_ppr(ps[i], tol) : to_ppr(g, xs[i], tol);
            }

            double l1_mean = 0.0;
            if (!l1_idx.empty()) {
                double sum = 0.0;
                for (std::size_t i : l1_idx) {
                    std::vector<double> oracle =
                        power_iteration_dense(g, ds.tracked[i], plan.alpha, 1e-12);
                    sum += l1_error(pis[i], oracle);
                }
                l1_mean = sum / static_cast<double>(l1_idx.size());
            }

            double solver_ms = ms_since(t_snap);

            if (plan.modes.empty()) {
                SnapshotRecord rec;
                rec.dataset = ds.name;
                rec.snapshot = t;
                rec.method = plan.method_name();
                rec.op_count = snap_ops;
                rec.l1_err = l1_mean;
                rec.acc = kNan;
                rec.macro_f1 = kNan;
                rec.seed = plan.seed;
                rec.wall_ms = solver_ms;
                rec.cert_max_violation = max_viol;
                rec.cert_ok = cert_ok;
                rep.records.push_back(std::move(rec));
                continue;
            }

            const FeatureMatrix* Xuse = &ds.X;
            FeatureMatrix noisy;
            if (use_noise) {
                noisy = apply_noise(ds.X, t, T, noise);
                Xuse = &noisy;
            }

            std::vector<std::vector<double>> hs(S);
            std::vector<std::vector<double>> pes(S);
            parallel_sources(S, [&](std::size_t i, SolverWorkspace&) {
                if (need_h) hs[i] = aggregate(*Xuse, pis[i]);
                if (need_pe) pes[i] = hash_reduce(pis[i], pe_dim, pe_seed).vec;
            });

            const std::size_t d = ds.feature_dim();
            for (FusionMode mode : plan.modes) {
                Clock::time_point t_mode = Clock::now();
                std::size_t in_dim = 0;
                bool concat_pe = false;
                switch (mode) {
                    case FusionMode::FeatOnly: in_dim = d; break;
                    case FusionMode::PeOnly: in_dim = pe_dim; break;
                    case FusionMode::Concat:
                    case FusionMode::Additive:
                        in_dim = d + pe_dim;
                        concat_pe = true;
                        break;
                }

                auto fill = [&](const std::vector<NodeId>& nodes, SampleSet& set) {
                    set.dim = in_dim;
                    std::vector<double> row(in_dim);
                    for (NodeId node : nodes) {
                        std::size_t i = static_cast<std::size_t>(idx_of[node]);
                        switch (mode) {
                            case FusionMode::FeatOnly:
                                std::copy(hs[i].begin(), hs[i].end(), row.begin());
                                break;
                            case FusionMode::PeOnly:
                                std::copy(pes[i].begin(), pes[i].end(), row.begin());
                                break;
                            case FusionMode::Concat:
                            case FusionMode::Additive:
                                std::copy(hs[i].begin(), hs[i].end(), row.begin());
                                std::copy(pes[i].begin(), pes[i].end(), row.begin() + d);
                                break;
                        }
                        set.push(row.data(), ds.labels[node]);
                    }
                };
                SampleSet train_set, dev_set, test_set;
                fill(ds.splits.train, train_set);
                fill(ds.splits.dev, dev_set);
                fill(ds.splits.test, test_set);

                std::uint64_t mode_tag = static_cast<std::uint64_t>(mode);
                MlpModel model;
                if (mode == FusionMode::Additive)
                    model = init_mlp_additive(mlp_dims(d, ds.label_count), pe_dim,
                                              mix_seed(plan.seed, t, 0x6d00ULL + mode_tag));
                else
                    model = init_mlp(mlp_dims(in_dim, ds.label_count),
                                     mix_seed(plan.seed, t, 0x6d00ULL + mode_tag));
                (void)concat_pe;

                TrainConfig tc = plan.train;
                tc.seed = mix_seed(plan.seed, t, 0x7400ULL + mode_tag);
                train_mlp(model, train_set, dev_set, tc);
                EvalResult ev = evaluate(model, test_set);

                SnapshotRecord rec;
                rec.dataset = ds.name;
                rec.snapshot = t;
                rec.method = plan.method_name() + "/" + fusion_mode_name(mode);
                rec.op_count = snap_ops;
                rec.l1_err = l1_mean;
                rec.acc = ev.accuracy;
                rec.macro_f1 = ev.macro_f1;
                rec.seed = plan.seed;
                rec.wall_ms = ms_since(t_mode);
                rec.cert_max_violation = max_viol;
                rec.cert_ok = cert_ok;
                rep.records.push_back(std::move(rec));
            }
        } catch (const std::exception& e) {
            rep.error = "snapshot " + std::to_string(t) + ": " + e.what();
            break;
        }
    }
    return rep;
}

} // namespace

RunReport run_experiment(const ExperimentPlan& plan, const Dataset& ds) {
    return run_impl(plan, ds);
}

RunReport run_experiment(const ExperimentPlan& plan) {
    if (plan.dataset_dir.empty())
        throw std::invalid_argument("plan has no dataset directory to load");
    Dataset ds = load_dataset(plan.dataset_dir, plan.seed, plan.track_cap);
    return run_impl(plan, ds);
}

std::vector<RunReport> compare_solvers(const ExperimentPlan& plan, const Dataset& ds) {
    std::vector<RunReport> out;
    for (SolverKind solver : {SolverKind::Push, SolverKind::Ista}) {
        for (bool dynamic : {false, true}) {
            ExperimentPlan p = plan;
            p.solver = solver;
            p.dynamic = dynamic;
            p.modes.clear();
            out.push_back(run_impl(p, ds));
        }
    }
    return out;
}

std::vector<RunReport> compare_solvers(const ExperimentPlan& plan) {
    if (plan.dataset_dir.empty())
        throw std::invalid_argument("plan has no dataset directory to load");
    Dataset ds = load_dataset(plan.dataset_dir, plan.seed, plan.track_cap);
    return compare_solvers(plan, ds);
}

void write_csv(std::ostream& out, const std::vector<SnapshotRecord>& records) {
    out << "dataset,snapshot,method,op_count,l1_err,acc,macro_f1,seed,wall_ms\n";
    char buf[64];
    for (const SnapshotRecord& r : records) {
        out << r.dataset << ',' << r.snapshot << ',' << r.method << ',' << r.op_count << ',';
        std::snprintf(buf, sizeof(buf), "%.9e", r.l1_err);
        out << buf << ',';
        if (std::isnan(r.acc))
            out << "nan";
        else {
            std::snprintf(buf, sizeof(buf), "%.6f", r.acc);
            out << buf;
        }
        out << ',';
        if (std::isnan(r.macro_f1))
            out << "nan";
        else {
            std::snprintf(buf, sizeof(buf), "%.6f", r.macro_f1);
            out << buf;
        }
        out << ',' << r.seed << ',';
        std::snprintf(buf, sizeof(buf), "%.3f", r.wall_ms);
        out << buf << '\n';
    }
}

std::string to_csv(const std::vector<RunReport>& reports) {
    std::vector<SnapshotRecord> all;
    for (const RunReport& r : reports) all.insert(all.end(), r.records.begin(), r.records.end());
    std::ostringstream out;
    write_csv(out, all);
    return out.str();
}

namespace {

json number_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

double null_or_number(const json& j) {
    if (j.is_null()) return kNan;
    return j.get<double>();
}

json plan_to_json(const ExperimentPlan& p) {
    json modes = json::array();
    for (FusionMode m : p.modes) modes.push_back(fusion_mode_name(m));
    return json{{"dataset_dir", p.dataset_dir},
                {"schedule", p.schedule == ScheduleMode::Major ? "major" : "minor"},
                {"num_steps", p.schedule_params.num_steps},
                {"batch", p.schedule_params.batch},
                {"k", p.schedule_params.k},
                {"solver", solver_kind_name(p.solver)},
                {"dynamic", p.dynamic},
                {"modes", modes},
                {"alpha", p.alpha},
                {"eps", p.eps},
                {"lambda_base", p.lambda_base},
                {"seed", p.seed},
                {"epochs", p.train.epochs},
                {"learning_rate", p.train.learning_rate},
                {"dropout", p.train.dropout},
                {"batch_size", p.train.batch_size},
                {"pe_dim", p.pe_dim},
                {"l1_samples", p.l1_samples},
                {"track_cap", p.track_cap}};
}

ExperimentPlan plan_from_json(const json& j) {
    ExperimentPlan p;
    p.dataset_dir = j.at("dataset_dir").get<std::string>();
    std::string sched = j.at("schedule").get<std::string>();
    if (sched == "major")
        p.schedule = ScheduleMode::Major;
    else if (sched == "minor")
        p.schedule = ScheduleMode::Minor;
    else
        throw LoadError("unknown schedule '" + sched + "'");
    p.schedule_params.num_steps = j.at("num_steps").get<int>();
    p.schedule_params.batch = j.at("batch").get<std::size_t>();
    p.schedule_params.k = j.at("k").get<int>();
    p.solver = parse_solver_kind(j.at("solver").get<std::string>());
    p.dynamic = j.at("dynamic").get<bool>();
    for (const json& m : j.at("modes")) p.modes.push_back(parse_fusion_mode(m.get<std::string>()));
    p.alpha = j.at("alpha").get<double>();
    p.eps = j.at("eps").get<double>();
    p.lambda_base = j.at("lambda_base").get<double>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.train.epochs = j.at("epochs").get<int>();
    p.train.learning_rate = j.at("learning_rate").get<double>();
    p.train.dropout = j.at("dropout").get<double>();
    p.train.batch_size = j.at("batch_size").get<std::size_t>();
    p.pe_dim = j.at("pe_dim").get<std::size_t>();
    p.l1_samples = j.at("l1_samples").get<std::size_t>();
    p.track_cap = j.at("track_cap").get<std::size_t>();
    return p;
}

json record_to_json(const SnapshotRecord& r) {
    return json{{"dataset", r.dataset},
                {"snapshot", r.snapshot},
                {"method", r.method},
                {"op_count", r.op_count},
                {"l1_err", r.l1_err},
                {"acc", number_or_null(r.acc)},
                {"macro_f1", number_or_null(r.macro_f1)},
                {"seed", r.seed},
                {"wall_ms", r.wall_ms},
                {"cert_max_violation", r.cert_max_violation},
                {"cert_ok", r.cert_ok}};
}

SnapshotRecord record_from_json(const json& j) {
    SnapshotRecord r;
    r.dataset = j.at("dataset").get<std::string>();
    r.snapshot = j.at("snapshot").get<std::size_t>();
    r.method = j.at("method").get<std::string>();
    r.op_count = j.at("op_count").get<std::uint64_t>();
    r.l1_err = j.at("l1_err").get<double>();
    r.acc = null_or_number(j.at("acc"));
    r.macro_f1 = null_or_number(j.at("macro_f1"));
    r.seed = j.at("seed").get<std::uint64_t>();
    r.wall_ms = j.at("wall_ms").get<double>();
    r.cert_max_violation = j.at("cert_max_violation").get<double>();
    r.cert_ok = j.at("cert_ok").get<bool>();
    return r;
}

json report_to_json_obj(const RunReport& rep) {
    json records = json::array();
    for (const SnapshotRecord& r : rep.records) records.push_back(record_to_json(r));
    return json{{"schema_version", rep.schema_version},
                {"plan", plan_to_json(rep.plan)},
                {"dataset_name", rep.dataset_name},
                {"eps_used", rep.eps_used},
                {"tracked_count", rep.tracked_count},
                {"records", records},
                {"error", rep.error}};
}

RunReport report_from_json_obj(const json& j) {
    RunReport rep;
    rep.schema_version = j.at("schema_version").get<int>();
    if (rep.schema_version != 1)
        throw LoadError("unsupported report schema version " +
                        std::to_string(rep.schema_version));
    rep.plan = plan_from_json(j.at("plan"));
    rep.dataset_name = j.at("dataset_name").get<std::string>();
    rep.eps_used = j.at("eps_used").get<double>();
    rep.tracked_count = j.at("tracked_count").get<std::size_t>();
    for (const json& r : j.at("records")) rep.records.push_back(record_from_json(r));
    rep.error = j.at("error").get<std::string>();
    return rep;
}

} // namespace

std::string report_to_json(const RunReport& report) {
    return report_to_json_obj(report).dump(2);
}

RunReport report_from_json(const std::string& text) {
    try {
        return report_from_json_obj(json::parse(text));
    } catch (const json::exception& e) {
        throw LoadError(std::string("report parse: ") + e.what());
    }
}

void save_report(const std::string& path, const RunReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError(path + ": cannot write");
    out << report_to_json(report) << "\n";
}

RunReport load_report(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(path + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    return report_from_json(buf.str());
}

void save_reports(const std::string& path, const std::vector<RunReport>& reports) {
    json arr = json::array();
    for (const RunReport& r : reports) arr.push_back(report_to_json_obj(r));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError(path + ": cannot write");
    out << json{{"schema_version", 1}, {"reports", arr}}.dump(2) << "\n";
}

std::vector<RunReport> load_reports(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(path + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        json j = json::parse(buf.str());
        std::vector<RunReport> out;
        if (j.contains("reports")) {
            for (const json& r : j.at("reports")) out.push_back(report_from_json_obj(r));
        } else {
            out.push_back(report_from_json_obj(j));
        }
        return out;
    } catch (const json::exception& e) {
        throw LoadError(std::string("report parse: ") + e.what());
    }
}

namespace {

VerifyResult verify_against(const RunReport& report, const RunReport& fresh) {
    auto fail = [](const std::string& msg) { return VerifyResult{false, msg}; };
    if (report.truncated()) return fail("report records a truncated run: " + report.error);
    if (fresh.truncated()) return fail("re-run truncated: " + fresh.error);
    if (!nan_equal(report.eps_used, fresh.eps_used))
        return fail("eps_used differs: recorded " + std::to_string(report.eps_used) +
                    ", re-run " + std::to_string(fresh.eps_used));
    if (report.tracked_count != fresh.tracked_count) return fail("tracked_count differs");
    if (report.records.size() != fresh.records.size())
        return fail("record count differs: recorded " + std::to_string(report.records.size()) +
                    ", re-run " + std::to_string(fresh.records.size()));
    for (std::size_t i = 0; i < report.records.size(); ++i) {
        const SnapshotRecord& a = report.records[i];
        const SnapshotRecord& b = fresh.records[i];
        std::string where = "record " + std::to_string(i) + " (" + a.method + ", snapshot " +
                            std::to_string(a.snapshot) + "): ";
        if (a.method != b.method || a.snapshot != b.snapshot || a.dataset != b.dataset)
            return fail(where + "identity differs");
        if (!b.cert_ok) return fail(where + "re-run certificate failed");
        if (!a.cert_ok) return fail(where + "recorded certificate failure");
        if (a.op_count != b.op_count)
            return fail(where + "op_count differs: recorded " + std::to_string(a.op_count) +
                        ", re-run " + std::to_string(b.op_count));
        if (!nan_equal(a.l1_err, b.l1_err)) return fail(where + "l1_err differs");
        if (!nan_equal(a.acc, b.acc)) return fail(where + "acc differs");
        if (!nan_equal(a.macro_f1, b.macro_f1)) return fail(where + "macro_f1 differs");
        if (!nan_equal(a.cert_max_violation, b.cert_max_violation))
            return fail(where + "certificate violation differs");
    }
    return VerifyResult{true, "verified " + std::to_string(report.records.size()) + " records"};
}

} // namespace

VerifyResult verify_report(const RunReport& report, const Dataset& ds) {
    return verify_against(report, run_experiment(report.plan, ds));
}

VerifyResult verify_report(const RunReport& report) {
    return verify_against(report, run_experiment(report.plan));
}

} // namespace pprdyn
