#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pprdyn/common.hpp"
#include "pprdyn/graph.hpp"

namespace pprdyn {

struct PprConfig {
    double alpha = 0.15;      // teleport probability, in (0, 1)
    double eps = 1e-8;        // sparsity/termination control; meaning is per solver family
    std::size_t max_sweeps = 200000;

    // Gradient step for the proximal solver; the smooth part has curvature
    // bounded by 2 - alpha.
    double step() const { return 1.0 / (2.0 - alpha); }

    void validate() const;
};

// Sparse vector over node ids; parallel arrays sorted by id, no explicit zeros.
struct SparseVec {
    std::vector<NodeId> idx;
    std::vector<double> val;

    std::size_t size() const { return idx.size(); }
    bool empty() const { return idx.empty(); }
    double get(NodeId i) const;
    void set(NodeId i, double v);   // v == 0 removes the entry
    void add(NodeId i, double v);
    double sum() const;
    double l1() const;
    void clear() { idx.clear(); val.clear(); }
};

// Normalized solution vector for one source: entries are probabilities.
// Approximate solvers may leave negative dust or total mass above one by up
// to their tolerance; construction clips entries in [-tol, 0] and rejects
// anything worse as an internal inconsistency.
struct PprVector {
    NodeId source = 0;
    SparseVec entries;

    double l1() const { return entries.l1(); }
};

PprVector make_ppr_vector(NodeId source, const SparseVec& raw, double tol = 1e-12);

// State of the degree-normalized proximal solver for one source.
// Meaning: solution estimate x and its maintained analytic gradient
// grad = Wx + b for the current graph; epoch counts edge adjustments applied
// since the last resolve; op_count accumulates coordinate work.
struct PprState {
    NodeId source = 0;
    SparseVec x;
    SparseVec grad;
    std::uint64_t epoch = 0;
    std::uint64_t op_count = 0;

    bool fresh() const { return x.empty() && grad.empty(); }
};

// State of the residual push solver for one source: estimate p and residual r.
// The work queue is derived on entry to the solver (the violation threshold
// depends on the current edge count), so it is not persisted here.
struct PushState {
    NodeId source = 0;
    SparseVec p;
    SparseVec r;
    std::uint64_t epoch = 0;
    std::uint64_t op_count = 0;

    bool fresh() const { return p.empty() && r.empty(); }
};

// Reusable dense scratch arrays of length n for one worker. Values outside
// the touched lists are zero; load/save round-trips restore that invariant.
// queue/queued double as the push work queue and the sweep candidate set.
class SolverWorkspace {
public:
    void ensure(std::size_t n);

    std::vector<double> a, b;            // x/grad or p/r
    std::vector<std::uint8_t> in_a, in_b;
    std::vector<NodeId> touched_a, touched_b;
    std::vector<NodeId> queue;
    std::vector<std::uint8_t> queued;
    std::vector<double> sqrt_deg;        // per-node sqrt(degree), cached per graph epoch
    std::vector<double> inv_sqrt_deg;    // 0 for isolated nodes

    void load(const SparseVec& sa, const SparseVec& sb);
    void save(SparseVec& sa, SparseVec& sb);   // also resets the dense arrays

    void touch_a(NodeId i) {
        if (!in_a[i]) { in_a[i] = 1; touched_a.push_back(i); }
    }
    void touch_b(NodeId i) {
        if (!in_b[i]) { in_b[i] = 1; touched_b.push_back(i); }
    }

    // Refreshes the degree-root caches if the graph has changed.
    void refresh_degree_cache(const DynamicGraph& g);

private:
    std::size_t n_ = 0;
    std::uint64_t cache_epoch_ = ~0ULL;
    std::size_t cache_n_ = 0;
};

// Initialized fresh states: the push state carries the unit residual at the
// source, the solver state carries the source gradient entry. Both reject a
// dangling source.
PprState make_ista_state(const DynamicGraph& g, NodeId source, const PprConfig& cfg);
PushState make_push_state(const DynamicGraph& g, NodeId source);

// Exact dense reference: fixed-point iteration of the teleporting random walk
// until successive iterates differ by at most tol in l1. Throws
// DanglingNodeError for an isolated source and IterationLimitError past
// max_sweeps.
std::vector<double> power_iteration_dense(const DynamicGraph& g, NodeId source, double alpha,
                                          double tol, std::size_t max_sweeps = 100000);
PprVector power_iteration(const DynamicGraph& g, NodeId source, double alpha, double tol,
                          std::size_t max_sweeps = 100000);

// Residual push solver. Processes every node whose residual violates
// |r(i)| > (eps / m) * d(i), moving alpha * r(i) into p(i) and spreading the
// rest over the neighbors. Resumable: a converged state is a no-op. op_count
// grows by 1 + d(i) per processed node.
void forward_push(const DynamicGraph& g, PushState& state, const PprConfig& cfg,
                  SolverWorkspace& ws);
void forward_push(const DynamicGraph& g, PushState& state, const PprConfig& cfg);

// One push at node i regardless of the threshold; building block and probe.
void push_node(const DynamicGraph& g, PushState& state, NodeId i, const PprConfig& cfg);

// Half of the insertion adjustment for the push state, for the scaled
// endpoint u of a new edge (u, v): p(u) *= (d(u)+1)/d(u) and the freed mass
// moves into the residuals at u and v. Must be called once per direction with
// values and degrees read from the pre-insertion graph view.
void push_adjust_edge(PushState& state, const GraphView& g_before, NodeId u, NodeId v,
                      const PprConfig& cfg);
void push_adjust_edge(PushState& state, const DynamicGraph& g_before, NodeId u, NodeId v,
                      const PprConfig& cfg);

// Proximal gradient solver on the degree-normalized quadratic with l1
// penalty weighted by eps * sqrt(d(i)). Terminates on the first-order
// certificate (see certificate_check). Resumable from any warm state.
void ista_solve(const DynamicGraph& g, PprState& state, const PprConfig& cfg,
                SolverWorkspace& ws);
void ista_solve(const DynamicGraph& g, PprState& state, const PprConfig& cfg);

// Half of the insertion adjustment for the solver state: scales x(u) by
// (d(u)+1)/d(u) and repairs the maintained gradient analytically for the
// post-insertion graph, touching only u, v, and the pre-insertion neighbors
// of u. The edge is fully accounted for once both directions have run.
void ista_adjust_edge(PprState& state, const GraphView& g_before, NodeId u, NodeId v,
                      const PprConfig& cfg);
void ista_adjust_edge(PprState& state, const DynamicGraph& g_before, NodeId u, NodeId v,
                      const PprConfig& cfg);

// Converts a solver state to the probability vector it represents. tol is
// the caller's solve tolerance; for a converged push state mass and negative
// dust stay within 2 eps of exact.
PprVector to_ppr(const DynamicGraph& g, const PprState& state, double tol = 1e-12);
PprVector to_ppr(const PushState& state, double tol = 1e-12);

// Maximum absolute discrepancy between the maintained companion vector
// (gradient or residual) and its from-scratch recomputation on the current
// graph. Bookkeeping audit; zero for an uninitialized state.
double residual_check(const DynamicGraph& g, const PprState& state, const PprConfig& cfg);
double residual_check(const DynamicGraph& g, const PushState& state, const PprConfig& cfg);

struct CertificateReport {
    bool ok = true;
    double max_violation = 0.0;   // positive = amount by which the worst bound fails
};

// Independent post-hoc verification of the termination condition, computed
// from a from-scratch gradient/residual rather than the maintained one.
CertificateReport certificate_check(const DynamicGraph& g, const PprState& state,
                                    const PprConfig& cfg);
CertificateReport certificate_check(const DynamicGraph& g, const PushState& state,
                                    const PprConfig& cfg);

// Signed total mass of a push state: l1 of the estimate plus the signed sum
// of residuals. Equals 1 for any state derived from a fresh source state by
// pushes and edge adjustments.
double push_mass(const PushState& state);

// l1 distance between a sparse solution and a dense reference.
double l1_error(const PprVector& pi, const std::vector<double>& dense_ref);

// Serialization of solver states (magic "PPRS"). Used by the CLI for warm
// restarts and by workers to hand states around.
void save_state(const PprState& state, const std::string& path);
void save_state(const PushState& state, const std::string& path);
bool load_state(const std::string& path, PprState& out);   // false if file holds a push state
bool load_state(const std::string& path, PushState& out);

} // namespace pprdyn
