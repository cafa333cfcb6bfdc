// Acceptance gate for the engine: ten criteria, one [PASS]/[FAIL] line each
// with the measured quantities. Exit code is the number of failed criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "pprdyn/harness.hpp"
#include "pprdyn/synth.hpp"

using namespace pprdyn;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> dense_of(const PprVector& pi, std::size_t n) {
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < pi.entries.size(); ++k) out[pi.entries.idx[k]] = pi.entries.val[k];
    return out;
}

double l1_diff_dense(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return s;
}

double mean_acc(const RunReport& rep, const std::string& tag) {
    double acc = 0.0;
    std::size_t cnt = 0;
    for (const auto& rec : rep.records)
        if (rec.method == tag) {
            acc += rec.acc;
            ++cnt;
        }
    return cnt ? acc / static_cast<double>(cnt) : std::nan("");
}

std::uint64_t total_ops(const RunReport& rep) {
    std::uint64_t t = 0;
    for (const auto& rec : rep.records) t += rec.op_count;
    return t;
}

// Drops the trailing wall_ms field of every line.
std::string strip_wall(const std::string& csv) {
    std::istringstream in(csv);
    std::string out, line;
    while (std::getline(in, line)) {
        auto cut = line.rfind(',');
        out += line.substr(0, cut);
        out += '\n';
    }
    return out;
}

struct Runner {
    int failures = 0;

    void run(int num, const char* name, const std::function<bool(std::string&)>& fn) {
        std::string detail;
        bool ok = false;
        try {
            ok = fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        if (!ok) ++failures;
        std::printf("[%s] %2d %s: %s\n", ok ? "PASS" : "FAIL", num, name, detail.c_str());
        std::fflush(stdout);
    }
};

char buf[512];

} // namespace

int main() {
    std::printf("acceptance: building corpus datasets\n");
    std::fflush(stdout);
    Dataset cora = to_dataset(generate(synth_profile("cora"), 1), "cora");
    Dataset citeseer = to_dataset(generate(synth_profile("citeseer"), 1), "citeseer");
    Dataset blobs = to_dataset(generate(synth_profile("blobs"), 1), "blobs");

    Runner r;

    // 1. Calibrated solver accuracy against the dense oracle on every corpus
    //    graph: 50 sources, l1 <= 1e-5, under five minutes.
    r.run(1, "solver-oracle equivalence", [&](std::string& detail) {
        auto t0 = Clock::now();
        double worst = 0.0;
        std::string epss;
        for (const Dataset* dsp : {&cora, &citeseer, &blobs}) {
            Dataset ds = *dsp;
            ScheduleParams params;
            params.num_steps = 0;  // single snapshot: the whole graph
            SnapshotSchedule sched = build_schedule(ds.events.size(), ScheduleMode::Major, params);
            build_tracking(ds, sched, 1);

            DynamicGraph g(ds.node_count);
            for (const auto& ev : ds.events) g.insert_edge(ev.u, ev.v);

            Rng pick(mix_seed(1, 0xACC1ULL));
            std::vector<NodeId> sources;
            for (std::size_t k = 0; k < 50; ++k)
                sources.push_back(ds.tracked[pick.below(ds.tracked.size())]);

            std::vector<std::vector<double>> oracles;
            for (NodeId s : sources) oracles.push_back(power_iteration_dense(g, s, 0.15, 1e-12));

            for (SolverKind solver : {SolverKind::Push, SolverKind::Ista}) {
                double eps = calibrate_eps(ds, sched, solver, 0.15, 1e-6, 1);
                PprConfig cfg;
                cfg.eps = eps;
                double tol = std::max(1e-8, 4.0 * eps);
                for (std::size_t k = 0; k < sources.size(); ++k) {
                    double err;
                    if (solver == SolverKind::Push) {
                        PushState st = make_push_state(g, sources[k]);
                        forward_push(g, st, cfg);
                        err = l1_error(to_ppr(st, tol), oracles[k]);
                    } else {
                        PprState st = make_ista_state(g, sources[k], cfg);
                        ista_solve(g, st, cfg);
                        err = l1_error(to_ppr(g, st, tol), oracles[k]);
                    }
                    worst = std::max(worst, err);
                }
                std::snprintf(buf, sizeof buf, " %s/%s eps=%.2e", ds.name.c_str(),
                              solver_kind_name(solver), eps);
                epss += buf;
            }
        }
        double el = seconds_since(t0);
        std::snprintf(buf, sizeof buf, "worst l1 %.3e (gate 1e-5), %.1f s (gate 300);%s", worst,
                      el, epss.c_str());
        detail = buf;
        return worst <= 1e-5 && el < 300.0;
    });

    // 2. Closed-form values on the complete graphs K2 (alpha 0.15) and K3
    //    (alpha 0.2), every solver within 1e-6.
    r.run(2, "analytic small-graph values", [&](std::string& detail) {
        struct Case {
            std::size_t n;
            double alpha;
            std::vector<double> expected;
        };
        std::vector<Case> cases = {
            {2, 0.15, {20.0 / 37.0, 17.0 / 37.0}},
            {3, 0.20, {3.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0}},
        };
        double worst = 0.0;
        for (const auto& c : cases) {
            DynamicGraph g(c.n);
            for (NodeId u = 0; u < c.n; ++u)
                for (NodeId v = u + 1; v < c.n; ++v) g.insert_edge(u, v);
            PprConfig cfg;
            cfg.alpha = c.alpha;
            cfg.eps = 1e-12;

            PprState is = make_ista_state(g, 0, cfg);
            ista_solve(g, is, cfg);
            PushState qs = make_push_state(g, 0);
            forward_push(g, qs, cfg);
            std::vector<std::vector<double>> got = {
                dense_of(to_ppr(g, is), c.n),
                dense_of(to_ppr(qs), c.n),
                power_iteration_dense(g, 0, c.alpha, 1e-12),
            };
            for (const auto& pi : got)
                for (std::size_t i = 0; i < c.n; ++i)
                    worst = std::max(worst, std::fabs(pi[i] - c.expected[i]));
        }
        std::snprintf(buf, sizeof buf, "worst deviation %.3e (gate 1e-6)", worst);
        detail = buf;
        return worst <= 1e-6;
    });

    // 3. Warm adjustment correctness over random insertion sequences: the
    //    adjusted-then-resolved state passes the final graph's certificate and
    //    stays within twice the cold solver's own oracle distance.
    r.run(3, "dynamic correctness", [&](std::string& detail) {
        auto t0 = Clock::now();
        Rng rng(33003);
        PprConfig pcfg, icfg;
        pcfg.eps = 1e-7;
        icfg.eps = 1e-9;
        std::size_t cert_fails = 0;
        double worst_ratio = 0.0;
        for (int seq = 0; seq < 100; ++seq) {
            DynamicGraph g = testutil::random_graph(200, 300, rng);
            NodeId src = 0;
            while (g.degree(src) == 0) src = static_cast<NodeId>(rng.below(200));
            PprState is = make_ista_state(g, src, icfg);
            ista_solve(g, is, icfg);
            PushState qs = make_push_state(g, src);
            forward_push(g, qs, pcfg);

            for (int e = 0; e < 15; ++e) {
                NodeId u = static_cast<NodeId>(rng.below(200));
                NodeId v = static_cast<NodeId>(rng.below(200));
                if (u == v || g.has_edge(u, v)) {
                    --e;
                    continue;
                }
                std::uint32_t ep = g.epoch();
                g.insert_edge(u, v);
                GraphView pre(g, ep);
                ista_adjust_edge(is, pre, u, v, icfg);
                ista_adjust_edge(is, pre, v, u, icfg);
                push_adjust_edge(qs, pre, u, v, pcfg);
                push_adjust_edge(qs, pre, v, u, pcfg);
            }
            ista_solve(g, is, icfg);
            forward_push(g, qs, pcfg);
            if (!certificate_check(g, is, icfg).ok) ++cert_fails;
            if (!certificate_check(g, qs, pcfg).ok) ++cert_fails;

            std::vector<double> oracle = power_iteration_dense(g, src, 0.15, 1e-12);
            PprState ic = make_ista_state(g, src, icfg);
            ista_solve(g, ic, icfg);
            PushState qc = make_push_state(g, src);
            forward_push(g, qc, pcfg);

            std::vector<double> warm_i = dense_of(to_ppr(g, is), 200);
            std::vector<double> cold_i = dense_of(to_ppr(g, ic), 200);
            std::vector<double> warm_q = dense_of(to_ppr(qs), 200);
            std::vector<double> cold_q = dense_of(to_ppr(qc), 200);
            worst_ratio = std::max(
                worst_ratio, l1_diff_dense(warm_i, cold_i) / l1_diff_dense(cold_i, oracle));
            worst_ratio = std::max(
                worst_ratio, l1_diff_dense(warm_q, cold_q) / l1_diff_dense(cold_q, oracle));
        }
        double el = seconds_since(t0);
        std::snprintf(buf, sizeof buf,
                      "certificate failures %zu/200, worst warm-cold ratio %.3f (gate 2), %.1f s "
                      "(gate 120)",
                      cert_fails, worst_ratio, el);
        detail = buf;
        return cert_fails == 0 && worst_ratio <= 2.0 && el < 120.0;
    });

    // 4. Warm-start economy on the minor schedules: warm ista spends strictly
    //    fewer coordinate updates than cold. Push direction and the ista/push
    //    comparison are reported, not gated.
    r.run(4, "warm-start economy", [&](std::string& detail) {
        bool ok = true;
        std::string parts;
        for (const Dataset* dsp : {&cora, &citeseer}) {
            ExperimentPlan plan;
            plan.schedule = ScheduleMode::Minor;
            plan.solver = SolverKind::Ista;
            plan.l1_samples = 5;
            std::vector<RunReport> reps = compare_solvers(plan, *dsp);
            std::uint64_t push_cold = total_ops(reps[0]), push_warm = total_ops(reps[1]);
            std::uint64_t ista_cold = total_ops(reps[2]), ista_warm = total_ops(reps[3]);
            ok = ok && ista_warm < ista_cold;
            for (const auto& rep : reps)
                for (const auto& rec : rep.records) ok = ok && rec.cert_ok;
            std::snprintf(buf, sizeof buf,
                          " %s: ista warm/cold %.3f (gate <1), push warm/cold %.3f (reported), "
                          "ista/push cold %.2f (reported);",
                          dsp->name.c_str(),
                          static_cast<double>(ista_warm) / static_cast<double>(ista_cold),
                          static_cast<double>(push_warm) / static_cast<double>(push_cold),
                          static_cast<double>(ista_cold) / static_cast<double>(push_cold));
            parts += buf;
        }
        detail = parts;
        return ok;
    });

    // 5. Bookkeeping invariants under a fuzzed interleaving of insertions,
    //    adjustments and resolves.
    r.run(5, "bookkeeping invariants", [&](std::string& detail) {
        Rng rng(5150);
        DynamicGraph g = testutil::random_graph(120, 200, rng);
        NodeId src = 0;
        while (g.degree(src) == 0) src = static_cast<NodeId>(rng.below(120));
        PprConfig pcfg, icfg;
        pcfg.eps = 1e-6;
        icfg.eps = 1e-9;
        PushState qs = make_push_state(g, src);
        forward_push(g, qs, pcfg);
        PprState is = make_ista_state(g, src, icfg);
        ista_solve(g, is, icfg);

        double worst_mass = std::fabs(push_mass(qs) - 1.0);
        std::size_t ops = 0;
        while (ops < 10000) {
            std::size_t pick = rng.below(10);
            if (pick < 6) {
                NodeId u = static_cast<NodeId>(rng.below(120));
                NodeId v = static_cast<NodeId>(rng.below(120));
                if (u == v || g.has_edge(u, v)) continue;
                std::uint32_t ep = g.epoch();
                g.insert_edge(u, v);
                GraphView pre(g, ep);
                push_adjust_edge(qs, pre, u, v, pcfg);
                ++ops;
                worst_mass = std::max(worst_mass, std::fabs(push_mass(qs) - 1.0));
                push_adjust_edge(qs, pre, v, u, pcfg);
                ++ops;
                worst_mass = std::max(worst_mass, std::fabs(push_mass(qs) - 1.0));
                ista_adjust_edge(is, pre, u, v, icfg);
                ++ops;
                ista_adjust_edge(is, pre, v, u, icfg);
                ++ops;
            } else if (pick < 8) {
                forward_push(g, qs, pcfg);
                ++ops;
                worst_mass = std::max(worst_mass, std::fabs(push_mass(qs) - 1.0));
            } else {
                ista_solve(g, is, icfg);
                ++ops;
            }
        }
        forward_push(g, qs, pcfg);
        ista_solve(g, is, icfg);
        double rq = residual_check(g, qs, pcfg);
        double ri = residual_check(g, is, icfg);
        std::snprintf(buf, sizeof buf,
                      "%zu ops, worst |mass-1| %.3e (gate 1e-12), residual checks %.3e / %.3e "
                      "(gate 1e-9)",
                      ops, worst_mass, rq, ri);
        detail = buf;
        return worst_mass <= 1e-12 && rq <= 1e-9 && ri <= 1e-9;
    });

    // 6. Analytic classifier gradients against central differences.
    r.run(6, "classifier gradient audit", [&](std::string& detail) {
        Rng rng(60606);
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) {
            std::size_t in = 4 + rng.below(12);
            std::size_t classes = 2 + rng.below(5);
            std::vector<std::size_t> dims = {in, 10, 6, classes};
            MlpModel m = init_mlp(dims, rng.next());
            std::vector<double> x(in);
            for (double& v : x) v = rng.normal();
            worst = std::max(worst, grad_check(m, x.data(), static_cast<int>(rng.below(classes))));
        }
        std::snprintf(buf, sizeof buf, "worst relative error %.3e (gate 1e-4)", worst);
        detail = buf;
        return worst < 1e-4;
    });

    // 7. Intact-feature accuracy, concat fusion, major schedule.
    r.run(7, "intact-feature accuracy", [&](std::string& detail) {
        auto t0 = Clock::now();
        ExperimentPlan plan;
        plan.modes = {FusionMode::Concat};
        RunReport rep = run_experiment(plan, cora);
        if (rep.truncated()) {
            detail = "truncated: " + rep.error;
            return false;
        }
        double acc = mean_acc(rep, "ista-dynamic/concat");
        std::snprintf(buf, sizeof buf, "cora concat mean accuracy %.4f (gate [0.74, 0.84]), %.0f s",
                      acc, seconds_since(t0));
        detail = buf;
        return acc >= 0.74 && acc <= 0.84;
    });

    // 8. Robustness ordering under the noise ramp: position-aware modes beat
    //    features-only by a wide margin.
    r.run(8, "noise robustness ordering", [&](std::string& detail) {
        ExperimentPlan plan;
        plan.modes = {FusionMode::FeatOnly, FusionMode::PeOnly, FusionMode::Concat};
        plan.lambda_base = 0.0;
        RunReport rep = run_experiment(plan, cora);
        if (rep.truncated()) {
            detail = "truncated: " + rep.error;
            return false;
        }
        double feat = mean_acc(rep, "ista-dynamic/feat_only");
        double pe = mean_acc(rep, "ista-dynamic/pe_only");
        double cat = mean_acc(rep, "ista-dynamic/concat");
        std::snprintf(buf, sizeof buf,
                      "mean accuracy feat %.4f, pe %.4f, concat %.4f (gate: pe and concat >= feat "
                      "+ 0.15)",
                      feat, pe, cat);
        detail = buf;
        return pe >= feat + 0.15 && cat >= feat + 0.15;
    });

    // 9. Encodings alone must classify when the features carry nothing:
    //    every node gets the same attribute vector.
    r.run(9, "encoding distinguishability", [&](std::string& detail) {
        Dataset flat = cora;
        flat.name = "cora-flat";
        std::fill(flat.X.data.begin(), flat.X.data.end(), 0.5f);
        ExperimentPlan plan;
        plan.modes = {FusionMode::PeOnly};
        RunReport rep = run_experiment(plan, flat);
        if (rep.truncated()) {
            detail = "truncated: " + rep.error;
            return false;
        }
        double acc = mean_acc(rep, "ista-dynamic/pe_only");
        std::snprintf(buf, sizeof buf, "pe_only mean accuracy %.4f (gate [0.65, 0.85])", acc);
        detail = buf;
        return acc >= 0.65 && acc <= 0.85;
    });

    // 10. Byte determinism of the records modulo wall time.
    r.run(10, "run determinism", [&](std::string& detail) {
        ExperimentPlan plan;
        plan.schedule_params.num_steps = 3;
        plan.modes = {FusionMode::Concat, FusionMode::FeatOnly};
        plan.pe_dim = 16;
        plan.l1_samples = 5;
        plan.seed = 11;
        RunReport a = run_experiment(plan, blobs);
        RunReport b = run_experiment(plan, blobs);
        bool same = strip_wall(to_csv({a})) == strip_wall(to_csv({b}));
        std::snprintf(buf, sizeof buf, "%zu records, identical modulo wall_ms: %s",
                      a.records.size(), same ? "yes" : "NO");
        detail = buf;
        return same && !a.records.empty();
    });

    std::printf("acceptance: %d/10 passed\n", 10 - r.failures);
    return r.failures;
}
