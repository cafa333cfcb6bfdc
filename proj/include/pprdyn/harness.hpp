#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pprdyn/dataset.hpp"
#include "pprdyn/ppr.hpp"

namespace pprdyn {

enum class SolverKind { Push, Ista };

const char* solver_kind_name(SolverKind k);
SolverKind parse_solver_kind(const std::string& s);

// One experiment: a solver variant replayed over a snapshot schedule, with
// any number of classifier fusion modes evaluated per snapshot. eps of zero
// asks for per-dataset calibration; lambda_base below zero disables noise.
struct ExperimentPlan {
    std::string dataset_dir;
    ScheduleMode schedule = ScheduleMode::Major;
    ScheduleParams schedule_params;
    SolverKind solver = SolverKind::Ista;
    bool dynamic = true;
    std::vector<FusionMode> modes;
    double alpha = 0.15;
    double eps = 0.0;
    double lambda_base = -1.0;
    std::uint64_t seed = 1;
    TrainConfig train;
    std::size_t pe_dim = 0;       // 0: default_pe_dim(node count)
    std::size_t l1_samples = 20;  // sources compared against the oracle per snapshot
    std::size_t track_cap = 1000;

    // "<push|ista>-<static|dynamic>"
    std::string method_name() const;
};

struct SnapshotRecord {
    std::string dataset;
    std::size_t snapshot = 0;
    std::string method;            // method_name() plus "/<mode>" for classifier rows
    std::uint64_t op_count = 0;    // coordinate updates spent on this snapshot across S
    double l1_err = 0.0;           // mean sampled l1 distance to the oracle
    double acc = 0.0;              // nan on solver-only rows
    double macro_f1 = 0.0;
    std::uint64_t seed = 0;
    double wall_ms = 0.0;
    double cert_max_violation = 0.0;
    bool cert_ok = true;
};

struct RunReport {
    int schema_version = 1;
    ExperimentPlan plan;
    std::string dataset_name;
    double eps_used = 0.0;
    std::size_t tracked_count = 0;
    std::vector<SnapshotRecord> records;
    std::string error;  // nonempty: run truncated at the failed snapshot

    bool truncated() const { return !error.empty(); }
};

// Number of solver workers run_experiment may use. Defaults to the hardware
// thread count; the PPRDYN_THREADS environment variable caps it.
std::size_t worker_count();

// Bisects log(eps) until the mean l1 error against the power-iteration
// oracle over sampled tracked sources on the base graph lands within a
// factor of two of target_l1. Deterministic per seed.
double calibrate_eps(const Dataset& ds, const SnapshotSchedule& sched, SolverKind solver,
                     double alpha, double target_l1, std::uint64_t seed,
                     std::size_t sample_sources = 10);

RunReport run_experiment(const ExperimentPlan& plan);
RunReport run_experiment(const ExperimentPlan& plan, const Dataset& ds);

// The four solver variants on the same schedule, sources and seed.
std::vector<RunReport> compare_solvers(const ExperimentPlan& plan);
std::vector<RunReport> compare_solvers(const ExperimentPlan& plan, const Dataset& ds);

// CSV columns: dataset,snapshot,method,op_count,l1_err,acc,macro_f1,seed,wall_ms.
void write_csv(std::ostream& out, const std::vector<SnapshotRecord>& records);
std::string to_csv(const std::vector<RunReport>& reports);

std::string report_to_json(const RunReport& report);
RunReport report_from_json(const std::string& text);
void save_report(const std::string& path, const RunReport& report);
RunReport load_report(const std::string& path);

// Bundle form: {"schema_version": 1, "reports": [...]}; load_reports also
// accepts a single-report file.
void save_reports(const std::string& path, const std::vector<RunReport>& reports);
std::vector<RunReport> load_reports(const std::string& path);

struct VerifyResult {
    bool ok = false;
    std::string detail;
};

// Replays the report's plan from scratch and checks that certificates hold
// and op counts, errors and metrics match the recorded values.
VerifyResult verify_report(const RunReport& report);
VerifyResult verify_report(const RunReport& report, const Dataset& ds);

} // namespace pprdyn
