#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "pprdyn/harness.hpp"
#include "pprdyn/synth.hpp"

using namespace pprdyn;

namespace {

// "lambda_base=0.3" -> 0.3; the mix mean and deviation always come from the
// feature matrix itself, so the noise knob is this one scalar.
double parse_noise_spec(const std::string& spec) {
    auto eq = spec.find('=');
    if (eq == std::string::npos || spec.substr(0, eq) != "lambda_base")
        throw std::invalid_argument("noise spec must be lambda_base=<value>: " + spec);
    std::size_t used = 0;
    double v = std::stod(spec.substr(eq + 1), &used);
    if (used != spec.size() - eq - 1)
        throw std::invalid_argument("noise spec must be lambda_base=<value>: " + spec);
    return v;
}

ScheduleMode parse_schedule(const std::string& s) {
    if (s == "major") return ScheduleMode::Major;
    if (s == "minor") return ScheduleMode::Minor;
    throw std::invalid_argument("unknown schedule: " + s);
}

void write_text(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::fwrite(text.data(), 1, text.size(), stdout);
        return;
    }
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
}

int cmd_ppr_solve(const std::string& graph_path, NodeId source, double alpha, double eps,
                  const std::string& solver, const std::string& warm_path,
                  const std::string& save_path, const std::string& out_path) {
    EdgeStream es = load_edge_stream_file(graph_path);
    NodeId n = 0;
    for (const auto& ev : es.events) n = std::max({n, ev.u + 1, ev.v + 1});
    DynamicGraph g(n);
    for (const auto& ev : es.events) g.insert_edge(ev.u, ev.v);

    PprConfig cfg;
    cfg.alpha = alpha;
    cfg.eps = eps;
    cfg.validate();

    PprVector pi;
    std::uint64_t ops = 0;
    if (parse_solver_kind(solver) == SolverKind::Ista) {
        PprState st = make_ista_state(g, source, cfg);
        if (!warm_path.empty()) {
            if (!load_state(warm_path, st))
                throw std::runtime_error(warm_path + ": holds a push state, not an ista state");
            if (st.source != source)
                throw std::runtime_error(warm_path + ": saved for a different source");
        }
        ista_solve(g, st, cfg);
        if (!save_path.empty()) save_state(st, save_path);
        pi = to_ppr(g, st, std::max(1e-8, 4.0 * eps));
        ops = st.op_count;
    } else {
        PushState st = make_push_state(g, source);
        if (!warm_path.empty()) {
            if (!load_state(warm_path, st))
                throw std::runtime_error(warm_path + ": holds an ista state, not a push state");
            if (st.source != source)
                throw std::runtime_error(warm_path + ": saved for a different source");
        }
        forward_push(g, st, cfg);
        if (!save_path.empty()) save_state(st, save_path);
        pi = to_ppr(st, std::max(1e-8, 4.0 * eps));
        ops = st.op_count;
    }

    // One line per nonzero entry, ascending node id.
    std::vector<std::size_t> order(pi.entries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pi.entries.idx[a] < pi.entries.idx[b];
    });
    std::string out;
    char line[96];
    for (std::size_t k : order) {
        if (pi.entries.val[k] == 0.0) continue;
        std::snprintf(line, sizeof line, "%u\t%u\t%.17g\n", source, pi.entries.idx[k],
                      pi.entries.val[k]);
        out += line;
    }
    write_text(out_path, out);
    std::fprintf(stderr, "n=%u m=%zu nonzeros=%zu op_count=%llu\n", n, g.edge_count(),
                 pi.entries.size(), static_cast<unsigned long long>(ops));
    return 0;
}

std::uint64_t total_ops(const RunReport& r) {
    std::uint64_t t = 0;
    for (const auto& rec : r.records) t += rec.op_count;
    return t;
}

int cmd_bench(ExperimentPlan plan, const std::string& solvers, const std::string& out_path,
              const std::string& csv_path) {
    plan.modes.clear();
    std::vector<RunReport> reports;
    if (solvers == "all") {
        reports = compare_solvers(plan);
    } else {
        plan.solver = parse_solver_kind(solvers);
        for (bool dyn : {false, true}) {
            plan.dynamic = dyn;
            reports.push_back(run_experiment(plan));
            plan.eps = reports.back().eps_used;  // share the calibrated eps
        }
    }
    save_reports(out_path, reports);
    if (!csv_path.empty()) write_text(csv_path, to_csv(reports));

    for (const auto& r : reports) {
        double l1 = 0.0;
        for (const auto& rec : r.records) l1 += rec.l1_err;
        if (!r.records.empty()) l1 /= static_cast<double>(r.records.size());
        std::printf("%-14s eps=%.3e total_op_count=%llu mean_l1=%.3e%s\n",
                    r.plan.method_name().c_str(), r.eps_used,
                    static_cast<unsigned long long>(total_ops(r)), l1,
                    r.truncated() ? " [TRUNCATED]" : "");
        if (r.truncated()) std::fprintf(stderr, "error: %s\n", r.error.c_str());
    }
    // Warm economy per solver family, when both variants are present.
    for (SolverKind k : {SolverKind::Push, SolverKind::Ista}) {
        const RunReport* cold = nullptr;
        const RunReport* warm = nullptr;
        for (const auto& r : reports) {
            if (r.plan.solver != k) continue;
            (r.plan.dynamic ? warm : cold) = &r;
        }
        if (cold && warm && total_ops(*cold) > 0)
            std::printf("%s warm/cold op ratio: %.4f\n", solver_kind_name(k),
                        static_cast<double>(total_ops(*warm)) /
                            static_cast<double>(total_ops(*cold)));
    }
    for (const auto& r : reports)
        if (r.truncated()) return 1;
    return 0;
}

int cmd_classify(ExperimentPlan plan, const std::string& mode, const std::string& noise_spec,
                 const std::string& out_path, const std::string& report_path) {
    if (mode == "all")
        plan.modes = {FusionMode::FeatOnly, FusionMode::PeOnly, FusionMode::Concat,
                      FusionMode::Additive};
    else
        plan.modes = {parse_fusion_mode(mode)};
    if (!noise_spec.empty()) plan.lambda_base = parse_noise_spec(noise_spec);

    RunReport rep = run_experiment(plan);
    write_text(out_path, to_csv({rep}));
    if (!report_path.empty()) save_report(report_path, rep);

    for (FusionMode m : plan.modes) {
        std::string tag = rep.plan.method_name() + "/" + fusion_mode_name(m);
        double acc = 0.0, f1 = 0.0;
        std::size_t cnt = 0;
        for (const auto& rec : rep.records)
            if (rec.method == tag) {
                acc += rec.acc;
                f1 += rec.macro_f1;
                ++cnt;
            }
        if (cnt > 0)
            std::printf("%-24s snapshots=%zu mean_acc=%.4f mean_macro_f1=%.4f\n", tag.c_str(),
                        cnt, acc / static_cast<double>(cnt), f1 / static_cast<double>(cnt));
    }
    if (rep.truncated()) {
        std::fprintf(stderr, "error: %s\n", rep.error.c_str());
        return 1;
    }
    return 0;
}

int cmd_verify(const std::string& report_path) {
    std::vector<RunReport> reports = load_reports(report_path);
    int rc = 0;
    for (const auto& r : reports) {
        VerifyResult res = verify_report(r);
        std::printf("[%s] %s %s: %s\n", res.ok ? "OK" : "FAIL", r.dataset_name.c_str(),
                    r.plan.method_name().c_str(), res.detail.c_str());
        if (!res.ok) rc = 1;
    }
    return rc;
}

int cmd_gen(const std::string& profile, const std::string& out_dir, std::uint64_t seed) {
    SynthProfile prof = synth_profile(profile);
    GeneratedDataset gd = generate(prof, seed);
    write_dataset(out_dir, gd);
    std::printf("%s: n=%zu m=%zu d=%zu classes=%d -> %s\n", prof.name.c_str(), prof.nodes,
                gd.events.size(), prof.dim, prof.classes, out_dir.c_str());
    return 0;
}

void add_plan_options(CLI::App* cmd, ExperimentPlan& plan, std::string& schedule) {
    cmd->add_option("--schedule", schedule, "Snapshot schedule")
        ->check(CLI::IsMember({"major", "minor"}))
        ->capture_default_str();
    cmd->add_option("--num-steps", plan.schedule_params.num_steps, "Snapshots after the base graph")
        ->capture_default_str();
    cmd->add_option("--batch", plan.schedule_params.batch, "Minor-schedule edges per snapshot")
        ->capture_default_str();
    cmd->add_option("--k", plan.schedule_params.k, "Minor-schedule snapshot count")
        ->capture_default_str();
    cmd->add_option("--alpha", plan.alpha, "Teleport probability")->capture_default_str();
    cmd->add_option("--eps", plan.eps, "Solver tolerance; 0 calibrates per dataset")
        ->capture_default_str();
    cmd->add_option("--seed", plan.seed, "Root seed")->capture_default_str();
    cmd->add_option("--l1-samples", plan.l1_samples, "Sources checked against the dense oracle")
        ->capture_default_str();
    cmd->add_option("--track-cap", plan.track_cap, "Tracked-set size cap")->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic personalized PageRank engine and node-representation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key = value file; command-line options take precedence");
    app.footer("Environment: PPRDYN_THREADS caps worker parallelism.");

    std::function<int()> action;

    // ppr solve
    auto* ppr_cmd = app.add_subcommand("ppr", "Single-source solver operations");
    ppr_cmd->require_subcommand(1);
    auto* solve = ppr_cmd->add_subcommand("solve", "Solve one source on an edge-list graph");
    {
        static std::string graph_path, solver = "ista", warm, save, out = "-";
        static NodeId source = 0;
        static double alpha = 0.15, eps = 1e-8;
        solve->add_option("--graph", graph_path, "Edge list file (u v per line)")
            ->required()
            ->check(CLI::ExistingFile);
        solve->add_option("--source", source, "Source node id")->required();
        solve->add_option("--alpha", alpha, "Teleport probability")->capture_default_str();
        solve->add_option("--eps", eps, "Solver tolerance")->capture_default_str();
        solve->add_option("--solver", solver, "Solver")
            ->check(CLI::IsMember({"push", "ista"}))
            ->capture_default_str();
        solve->add_option("--warm", warm, "Resume from a saved state")->check(CLI::ExistingFile);
        solve->add_option("--save-state", save, "Write the solved state here");
        solve->add_option("--out", out, "Output TSV path, - for stdout")->capture_default_str();
        solve->callback([&] {
            action = [&] {
                return cmd_ppr_solve(graph_path, source, alpha, eps, solver, warm, save, out);
            };
        });
    }

    // bench dynamic
    auto* bench = app.add_subcommand("bench", "Solver benchmarks over snapshot schedules");
    bench->require_subcommand(1);
    auto* bdyn = bench->add_subcommand("dynamic", "Warm vs cold solver comparison");
    {
        static ExperimentPlan plan;
        static std::string schedule = "major", solvers = "all", out, csv;
        bdyn->add_option("--dataset", plan.dataset_dir, "Dataset directory")
            ->required()
            ->check(CLI::ExistingDirectory);
        add_plan_options(bdyn, plan, schedule);
        bdyn->add_option("--solvers", solvers, "all, push or ista")
            ->check(CLI::IsMember({"all", "push", "ista"}))
            ->capture_default_str();
        bdyn->add_option("--out", out, "Report bundle JSON path")->required();
        bdyn->add_option("--csv", csv, "Also write the records as CSV here");
        bdyn->callback([&] {
            action = [&] {
                plan.schedule = parse_schedule(schedule);
                return cmd_bench(plan, solvers, out, csv);
            };
        });
    }

    // classify
    auto* cls = app.add_subcommand("classify", "Per-snapshot embedding + classifier evaluation");
    {
        static ExperimentPlan plan;
        static std::string schedule = "major", mode = "concat", solver = "ista", noise, out,
                           report;
        static bool cold = false;
        cls->add_option("--dataset", plan.dataset_dir, "Dataset directory")
            ->required()
            ->check(CLI::ExistingDirectory);
        add_plan_options(cls, plan, schedule);
        cls->add_option("--mode", mode, "Fusion mode")
            ->check(CLI::IsMember({"concat", "additive", "pe_only", "feat_only", "all"}))
            ->capture_default_str();
        cls->add_option("--solver", solver, "Solver")
            ->check(CLI::IsMember({"push", "ista"}))
            ->capture_default_str();
        cls->add_flag("--static", cold, "Resolve each snapshot from scratch");
        cls->add_option("--noise", noise, "Feature noise spec, lambda_base=<value>");
        cls->add_option("--epochs", plan.train.epochs, "Training epochs")->capture_default_str();
        cls->add_option("--learning-rate", plan.train.learning_rate, "Adam step size")
            ->capture_default_str();
        cls->add_option("--dropout", plan.train.dropout, "Dropout rate")->capture_default_str();
        cls->add_option("--batch-size", plan.train.batch_size, "Minibatch size")
            ->capture_default_str();
        cls->add_option("--pe-dim", plan.pe_dim, "Encoding width; 0 picks the default")
            ->capture_default_str();
        cls->add_option("--out", out, "Results CSV path, - for stdout")->required();
        cls->add_option("--report", report, "Also write the full report JSON here");
        cls->callback([&] {
            action = [&] {
                plan.schedule = parse_schedule(schedule);
                plan.solver = parse_solver_kind(solver);
                plan.dynamic = !cold;
                return cmd_classify(plan, mode, noise, out, report);
            };
        });
    }

    // verify
    auto* ver = app.add_subcommand("verify", "Re-run a report's plan and check every record");
    {
        static std::string report;
        ver->add_option("--report", report, "Report or bundle JSON")
            ->required()
            ->check(CLI::ExistingFile);
        ver->callback([&] { action = [&] { return cmd_verify(report); }; });
    }

    // gen
    auto* gen = app.add_subcommand("gen", "Write a synthetic dataset directory");
    {
        static std::string profile, out;
        static std::uint64_t seed = 1;
        gen->add_option("--profile", profile, "cora, citeseer, blobs or k2")->required();
        gen->add_option("--out", out, "Output directory")->required();
        gen->add_option("--seed", seed, "Generator seed")->capture_default_str();
        gen->callback([&] { action = [&] { return cmd_gen(profile, out, seed); }; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        return action ? action() : 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
