#include "pprdyn/ppr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace pprdyn {

void PprConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("alpha must lie in (0, 1)");
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (max_sweeps == 0) throw std::invalid_argument("max_sweeps must be positive");
}

// ---- SparseVec ----

namespace {
std::size_t lower_idx(const std::vector<NodeId>& idx, NodeId i) {
    return static_cast<std::size_t>(std::lower_bound(idx.begin(), idx.end(), i) - idx.begin());
}
} // namespace

double SparseVec::get(NodeId i) const {
    std::size_t k = lower_idx(idx, i);
    return (k < idx.size() && idx[k] == i) ? val[k] : 0.0;
}

void SparseVec::set(NodeId i, double v) {
    std::size_t k = lower_idx(idx, i);
    bool present = k < idx.size() && idx[k] == i;
    if (v == 0.0) {
        if (present) {
            idx.erase(idx.begin() + k);
            val.erase(val.begin() + k);
        }
        return;
    }
    if (present) {
        val[k] = v;
    } else {
        idx.insert(idx.begin() + k, i);
        val.insert(val.begin() + k, v);
    }
}

void SparseVec::add(NodeId i, double v) {
    if (v == 0.0) return;
    std::size_t k = lower_idx(idx, i);
    if (k < idx.size() && idx[k] == i) {
        val[k] += v;
    } else {
        idx.insert(idx.begin() + k, i);
        val.insert(val.begin() + k, v);
    }
}

double SparseVec::sum() const {
    double s = 0.0;
    for (double v : val) s += v;
    return s;
}

double SparseVec::l1() const {
    double s = 0.0;
    for (double v : val) s += std::fabs(v);
    return s;
}

PprVector make_ppr_vector(NodeId source, const SparseVec& raw, double tol) {
    PprVector out;
    out.source = source;
    for (std::size_t k = 0; k < raw.size(); ++k) {
        double v = raw.val[k];
        if (v < -tol)
            throw InternalInconsistencyError("negative probability " + std::to_string(v) +
                                             " at node " + std::to_string(raw.idx[k]));
        if (v <= 0.0) continue;   // clip solver dust
        out.entries.idx.push_back(raw.idx[k]);
        out.entries.val.push_back(v);
    }
    double mass = out.entries.l1();
    if (mass > 1.0 + tol)
        throw InternalInconsistencyError("probability mass " + std::to_string(mass) + " exceeds 1");
    return out;
}

// ---- SolverWorkspace ----

void SolverWorkspace::ensure(std::size_t n) {
    if (n <= n_) return;
    a.resize(n, 0.0);
    b.resize(n, 0.0);
    in_a.resize(n, 0);
    in_b.resize(n, 0);
    queued.resize(n, 0);
    n_ = n;
}

void SolverWorkspace::refresh_degree_cache(const DynamicGraph& g) {
    std::size_t n = g.node_count();
    if (cache_epoch_ == g.epoch() && cache_n_ == n) return;
    sqrt_deg.resize(n);
    inv_sqrt_deg.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t d = g.degree(static_cast<NodeId>(i));
        if (d == 0) {
            sqrt_deg[i] = 0.0;
            inv_sqrt_deg[i] = 0.0;
        } else {
            sqrt_deg[i] = std::sqrt(static_cast<double>(d));
            inv_sqrt_deg[i] = 1.0 / sqrt_deg[i];
        }
    }
    cache_epoch_ = g.epoch();
    cache_n_ = n;
}

void SolverWorkspace::load(const SparseVec& sa, const SparseVec& sb) {
    for (std::size_t k = 0; k < sa.size(); ++k) {
        a[sa.idx[k]] = sa.val[k];
        touch_a(sa.idx[k]);
    }
    for (std::size_t k = 0; k < sb.size(); ++k) {
        b[sb.idx[k]] = sb.val[k];
        touch_b(sb.idx[k]);
    }
}

void SolverWorkspace::save(SparseVec& sa, SparseVec& sb) {
    std::sort(touched_a.begin(), touched_a.end());
    std::sort(touched_b.begin(), touched_b.end());
    sa.clear();
    sb.clear();
    for (NodeId i : touched_a) {
        if (a[i] != 0.0) {
            sa.idx.push_back(i);
            sa.val.push_back(a[i]);
        }
        a[i] = 0.0;
        in_a[i] = 0;
    }
    for (NodeId i : touched_b) {
        if (b[i] != 0.0) {
            sb.idx.push_back(i);
            sb.val.push_back(b[i]);
        }
        b[i] = 0.0;
        in_b[i] = 0;
    }
    touched_a.clear();
    touched_b.clear();
    for (NodeId i : queue) queued[i] = 0;
    queue.clear();
}

// ---- fresh states ----

PushState make_push_state(const DynamicGraph& g, NodeId source) {
    if (g.degree(source) == 0) throw DanglingNodeError(source);
    PushState st;
    st.source = source;
    st.r.set(source, 1.0);
    return st;
}

PprState make_ista_state(const DynamicGraph& g, NodeId source, const PprConfig& cfg) {
    cfg.validate();
    std::size_t d = g.degree(source);
    if (d == 0) throw DanglingNodeError(source);
    PprState st;
    st.source = source;
    st.grad.set(source, -cfg.alpha / std::sqrt(static_cast<double>(d)));
    return st;
}

// ---- power iteration ----

std::vector<double> power_iteration_dense(const DynamicGraph& g, NodeId source, double alpha,
                                          double tol, std::size_t max_sweeps) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    if (g.degree(source) == 0) throw DanglingNodeError(source);
    std::size_t n = g.node_count();
    std::vector<double> cur(n, 0.0), nxt(n, 0.0);
    cur[source] = 1.0;
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        std::fill(nxt.begin(), nxt.end(), 0.0);
        nxt[source] = alpha;
        for (std::size_t u = 0; u < n; ++u) {
            double cu = cur[u];
            if (cu == 0.0) continue;
            const auto& arcs = g.arcs(static_cast<NodeId>(u));
            if (arcs.empty()) continue;
            double share = (1.0 - alpha) * cu / static_cast<double>(arcs.size());
            for (const auto& arc : arcs) nxt[arc.to] += share;
        }
        double diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) diff += std::fabs(nxt[i] - cur[i]);
        cur.swap(nxt);
        if (diff <= tol) return cur;
    }
    throw IterationLimitError(max_sweeps);
}

PprVector power_iteration(const DynamicGraph& g, NodeId source, double alpha, double tol,
                          std::size_t max_sweeps) {
    std::vector<double> dense = power_iteration_dense(g, source, alpha, tol, max_sweeps);
    SparseVec raw;
    for (std::size_t i = 0; i < dense.size(); ++i) {
        if (dense[i] != 0.0) {
            raw.idx.push_back(static_cast<NodeId>(i));
            raw.val.push_back(dense[i]);
        }
    }
    return make_ppr_vector(source, raw);
}

// ---- push solver ----

void forward_push(const DynamicGraph& g, PushState& state, const PprConfig& cfg,
                  SolverWorkspace& ws) {
    cfg.validate();
    if (state.fresh()) {
        if (g.degree(state.source) == 0) throw DanglingNodeError(state.source);
        state.r.set(state.source, 1.0);
    }
    std::size_t m = g.edge_count();
    double thr_scale = cfg.eps / static_cast<double>(m);

    ws.ensure(g.node_count());
    ws.load(state.p, state.r);

    // Seed the queue in ascending node order for determinism.
    std::vector<NodeId> seeds(ws.touched_b);
    std::sort(seeds.begin(), seeds.end());
    for (NodeId i : seeds) {
        if (std::fabs(ws.b[i]) > thr_scale * static_cast<double>(g.degree(i)) && !ws.queued[i]) {
            ws.queued[i] = 1;
            ws.queue.push_back(i);
        }
    }

    std::uint64_t push_cap = cfg.max_sweeps * static_cast<std::uint64_t>(std::max<std::size_t>(g.node_count(), 1));
    std::uint64_t pushes = 0;
    std::size_t head = 0;
    while (head < ws.queue.size()) {
        NodeId i = ws.queue[head++];
        ws.queued[i] = 0;
        double ri = ws.b[i];
        std::size_t d = g.degree(i);
        if (std::fabs(ri) <= thr_scale * static_cast<double>(d)) continue;
        if (++pushes > push_cap) {
            ws.save(state.p, state.r);
            throw IterationLimitError(static_cast<std::size_t>(push_cap));
        }
        ws.a[i] += cfg.alpha * ri;
        ws.touch_a(i);
        ws.b[i] = 0.0;
        double share = (1.0 - cfg.alpha) * ri / static_cast<double>(d);
        for (const auto& arc : g.arcs(i)) {
            NodeId j = arc.to;
            ws.b[j] += share;
            ws.touch_b(j);
            if (!ws.queued[j] &&
                std::fabs(ws.b[j]) > thr_scale * static_cast<double>(g.degree(j))) {
                ws.queued[j] = 1;
                ws.queue.push_back(j);
            }
        }
        state.op_count += 1 + static_cast<std::uint64_t>(d);
    }
    ws.save(state.p, state.r);
}

void forward_push(const DynamicGraph& g, PushState& state, const PprConfig& cfg) {
    SolverWorkspace ws;
    forward_push(g, state, cfg, ws);
}

void push_node(const DynamicGraph& g, PushState& state, NodeId i, const PprConfig& cfg) {
    cfg.validate();
    if (state.fresh()) {
        if (g.degree(state.source) == 0) throw DanglingNodeError(state.source);
        state.r.set(state.source, 1.0);
    }
    std::size_t d = g.degree(i);
    if (d == 0) throw DegreeZeroError(i);
    double ri = state.r.get(i);
    state.p.add(i, cfg.alpha * ri);
    state.r.set(i, 0.0);
    double share = (1.0 - cfg.alpha) * ri / static_cast<double>(d);
    if (share != 0.0)
        for (const auto& arc : g.arcs(i)) state.r.add(arc.to, share);
    state.op_count += 1 + static_cast<std::uint64_t>(d);
}

void push_adjust_edge(PushState& state, const GraphView& g_before, NodeId u, NodeId v,
                      const PprConfig& cfg) {
    // Every directional delta is proportional to p(u), so a zero estimate is
    // a no-op even when u was isolated; the paired call for v carries the
    // whole effect of the new edge.
    double pu = state.p.get(u);
    if (pu == 0.0) {
        state.op_count += 1;
        state.epoch += 1;
        return;
    }
    std::size_t d = g_before.degree(u);
    if (d == 0) throw DegreeZeroError(u);   // positive estimate on an unreachable node
    double dd = static_cast<double>(d);
    state.p.set(u, pu * (dd + 1.0) / dd);
    state.r.add(u, -pu / (cfg.alpha * dd));
    state.r.add(v, (1.0 - cfg.alpha) * pu / (cfg.alpha * dd));
    state.op_count += 3;
    state.epoch += 1;
}

void push_adjust_edge(PushState& state, const DynamicGraph& g_before, NodeId u, NodeId v,
                      const PprConfig& cfg) {
    push_adjust_edge(state, GraphView::current(g_before), u, v, cfg);
}

// ---- proximal solver ----

namespace {

inline double soft_threshold(double z, double tau) {
    if (z > tau) return z - tau;
    if (z < -tau) return z + tau;
    return 0.0;
}

// Termination slack: float-level tolerance relative to the coordinate scale.
// The absolute term must cover the rounding gap between the solver's
// incrementally maintained gradient and the audit's exact recomputation,
// which can reach a few 1e-15 when neighbor terms near 0.1 cancel.
inline double kkt_slack(double tq, double xi) {
    return 1e-14 + 1e-12 * (tq + std::fabs(xi));
}

} // namespace

void ista_solve(const DynamicGraph& g, PprState& state, const PprConfig& cfg,
                SolverWorkspace& ws) {
    cfg.validate();
    if (state.fresh()) {
        std::size_t d = g.degree(state.source);
        if (d == 0) throw DanglingNodeError(state.source);
        state.grad.set(state.source, -cfg.alpha / std::sqrt(static_cast<double>(d)));
    }
    const double alpha = cfg.alpha;
    const double eta = cfg.step();
    const double spread = 1.0 - alpha;

    ws.ensure(g.node_count());
    ws.refresh_degree_cache(g);
    ws.load(state.x, state.grad);

    // Candidate set = every coordinate with solution or gradient support;
    // ws.queue/queued store it between sweeps.
    for (NodeId i : ws.touched_a)
        if (!ws.queued[i]) { ws.queued[i] = 1; ws.queue.push_back(i); }
    for (NodeId i : ws.touched_b)
        if (!ws.queued[i]) { ws.queued[i] = 1; ws.queue.push_back(i); }
    std::sort(ws.queue.begin(), ws.queue.end());

    auto kkt_holds = [&]() {
        for (NodeId i : ws.queue) {
            double xi = ws.a[i];
            double gi = ws.b[i];
            double tq = cfg.eps * ws.sqrt_deg[i];
            double slack = kkt_slack(tq, xi);
            double viol;
            if (xi > 0.0)
                viol = std::fabs(gi + tq) - slack;
            else if (xi < 0.0)
                viol = std::fabs(gi - tq) - slack;
            else
                viol = std::fabs(gi) - tq - slack;
            if (viol > 0.0) return false;
        }
        return true;
    };

    std::vector<NodeId> changed;
    std::vector<double> deltas;
    bool done = false;
    for (std::size_t sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        // First-order certificate over the candidate set; a converged state
        // re-entered here is a counted-work-free no-op.
        if (kkt_holds()) {
            done = true;
            break;
        }
        changed.clear();
        deltas.clear();
        // Prox step against the gradient as of sweep start.
        for (NodeId i : ws.queue) {
            double xi = ws.a[i];
            double gi = ws.b[i];
            double tau = eta * cfg.eps * ws.sqrt_deg[i];
            if (xi == 0.0 && std::fabs(eta * gi) <= tau) continue;
            state.op_count += 1;
            double z = xi - eta * gi;
            double xn = soft_threshold(z, tau);
            if (xn != xi) {
                changed.push_back(i);
                deltas.push_back(xn - xi);
                ws.a[i] = xn;
                ws.touch_a(i);
            }
        }
        // Deferred gradient maintenance for all changed coordinates.
        bool grew = false;
        for (std::size_t k = 0; k < changed.size(); ++k) {
            NodeId i = changed[k];
            double delta = deltas[k];
            ws.b[i] += delta;
            ws.touch_b(i);
            double scaled = spread * delta * ws.inv_sqrt_deg[i];
            for (const auto& arc : g.arcs(i)) {
                NodeId j = arc.to;
                ws.b[j] -= scaled * ws.inv_sqrt_deg[j];
                ws.touch_b(j);
                if (!ws.queued[j]) {
                    ws.queued[j] = 1;
                    ws.queue.push_back(j);
                    grew = true;
                }
            }
            state.op_count += static_cast<std::uint64_t>(g.degree(i));
        }
        if (grew) std::sort(ws.queue.begin(), ws.queue.end());
    }
    ws.save(state.x, state.grad);
    if (!done) throw IterationLimitError(cfg.max_sweeps);
}

void ista_solve(const DynamicGraph& g, PprState& state, const PprConfig& cfg) {
    SolverWorkspace ws;
    ista_solve(g, state, cfg, ws);
}

void ista_adjust_edge(PprState& state, const GraphView& g_before, NodeId u, NodeId v,
                      const PprConfig& cfg) {
    std::size_t du = g_before.degree(u);
    double x_old = state.x.get(u);
    if (du == 0) {
        // An isolated u has an all-zero row coupling and no degree term to
        // repair, so a zero value makes this direction a no-op; the paired
        // call for v writes the new arc into u's gradient row. A nonzero
        // value (or the source, whose bias depends on its degree) cannot sit
        // on an isolated node in any consistent state.
        if (x_old != 0.0 || u == state.source) throw DegreeZeroError(u);
        state.op_count += 1;
        state.epoch += 1;
        return;
    }
    std::size_t dv = g_before.degree(v);
    const double spread = 1.0 - cfg.alpha;

    double ddu = static_cast<double>(du);
    double isq_pre = 1.0 / std::sqrt(ddu);
    double isq_post = 1.0 / std::sqrt(ddu + 1.0);
    double isq_v_post = 1.0 / std::sqrt(static_cast<double>(dv) + 1.0);

    double x_new = x_old * (ddu + 1.0) / ddu;
    double coef = x_new * isq_post - x_old * isq_pre;

    // Rows of the pre-insertion neighbors see u's normalized value change;
    // S collects the neighbor sum for u's own row delta.
    double S = 0.0;
    g_before.for_neighbors(u, [&](NodeId j) {
        double isq_j = 1.0 / std::sqrt(static_cast<double>(g_before.degree(j)));
        double xj = state.x.get(j);
        if (xj != 0.0) S += xj * isq_j;
        if (coef != 0.0) state.grad.add(j, -spread * isq_j * coef);
    });

    double delta_u = (x_new - x_old) - spread * S * (isq_post - isq_pre);
    if (u == state.source) delta_u -= cfg.alpha * (isq_post - isq_pre);
    state.grad.add(u, delta_u);

    if (x_new != 0.0) state.grad.add(v, -spread * x_new * isq_post * isq_v_post);

    if (x_old != 0.0) state.x.set(u, x_new);
    state.epoch += 1;
    state.op_count += 2 + static_cast<std::uint64_t>(du);
}

void ista_adjust_edge(PprState& state, const DynamicGraph& g_before, NodeId u, NodeId v,
                      const PprConfig& cfg) {
    ista_adjust_edge(state, GraphView::current(g_before), u, v, cfg);
}

// ---- conversions and audits ----

PprVector to_ppr(const DynamicGraph& g, const PprState& state, double tol) {
    SparseVec raw;
    for (std::size_t k = 0; k < state.x.size(); ++k) {
        NodeId i = state.x.idx[k];
        double scale = std::sqrt(static_cast<double>(g.degree(i)));
        raw.idx.push_back(i);
        raw.val.push_back(state.x.val[k] * scale);
    }
    return make_ppr_vector(state.source, raw, tol);
}

PprVector to_ppr(const PushState& state, double tol) {
    return make_ppr_vector(state.source, state.p, tol);
}

namespace {

// Dense scatter accumulator shared by the audit paths.
struct Accum {
    std::vector<double> val;
    std::vector<std::uint8_t> seen;
    std::vector<NodeId> touched;

    explicit Accum(std::size_t n) : val(n, 0.0), seen(n, 0) {}

    void add(NodeId i, double v) {
        if (!seen[i]) {
            seen[i] = 1;
            touched.push_back(i);
        }
        val[i] += v;
    }
};

// From-scratch gradient Wx + b on the current graph.
Accum scratch_gradient(const DynamicGraph& g, const PprState& state, double alpha) {
    Accum acc(g.node_count());
    const double spread = 1.0 - alpha;
    for (std::size_t k = 0; k < state.x.size(); ++k) {
        NodeId i = state.x.idx[k];
        double xi = state.x.val[k];
        acc.add(i, xi);
        double isq_i = 1.0 / std::sqrt(static_cast<double>(g.degree(i)));
        for (const auto& arc : g.arcs(i)) {
            double isq_j = 1.0 / std::sqrt(static_cast<double>(g.degree(arc.to)));
            acc.add(arc.to, -spread * xi * isq_i * isq_j);
        }
    }
    std::size_t ds = g.degree(state.source);
    if (ds > 0) acc.add(state.source, -alpha / std::sqrt(static_cast<double>(ds)));
    return acc;
}

// From-scratch residual implied by the push invariant on the current graph.
Accum scratch_residual(const DynamicGraph& g, const PushState& state, double alpha) {
    Accum acc(g.node_count());
    const double spread = 1.0 - alpha;
    for (std::size_t k = 0; k < state.p.size(); ++k) {
        NodeId i = state.p.idx[k];
        double pi = state.p.val[k];
        acc.add(i, -pi / alpha);
        std::size_t d = g.degree(i);
        if (d == 0) continue;
        double share = spread * pi / (alpha * static_cast<double>(d));
        for (const auto& arc : g.arcs(i)) acc.add(arc.to, share);
    }
    acc.add(state.source, 1.0);
    return acc;
}

} // namespace

double residual_check(const DynamicGraph& g, const PprState& state, const PprConfig& cfg) {
    if (state.fresh()) return 0.0;
    cfg.validate();
    Accum acc = scratch_gradient(g, state, cfg.alpha);
    double worst = 0.0;
    for (NodeId i : acc.touched) {
        double diff = std::fabs(acc.val[i] - state.grad.get(i));
        if (diff > worst) worst = diff;
    }
    for (std::size_t k = 0; k < state.grad.size(); ++k) {
        NodeId i = state.grad.idx[k];
        if (acc.seen[i]) continue;
        double diff = std::fabs(state.grad.val[k]);
        if (diff > worst) worst = diff;
    }
    return worst;
}

double residual_check(const DynamicGraph& g, const PushState& state, const PprConfig& cfg) {
    if (state.fresh()) return 0.0;
    cfg.validate();
    Accum acc = scratch_residual(g, state, cfg.alpha);
    double worst = 0.0;
    for (NodeId i : acc.touched) {
        double diff = std::fabs(acc.val[i] - state.r.get(i));
        if (diff > worst) worst = diff;
    }
    for (std::size_t k = 0; k < state.r.size(); ++k) {
        NodeId i = state.r.idx[k];
        if (acc.seen[i]) continue;
        double diff = std::fabs(state.r.val[k]);
        if (diff > worst) worst = diff;
    }
    return worst;
}

CertificateReport certificate_check(const DynamicGraph& g, const PprState& state,
                                    const PprConfig& cfg) {
    cfg.validate();
    CertificateReport rep;
    Accum acc = scratch_gradient(g, state, cfg.alpha);
    for (NodeId i : acc.touched) {
        double gi = acc.val[i];
        double xi = state.x.get(i);
        double tq = cfg.eps * std::sqrt(static_cast<double>(g.degree(i)));
        double slack = kkt_slack(tq, xi);
        double viol;
        if (xi > 0.0)
            viol = std::fabs(gi + tq) - slack;
        else if (xi < 0.0)
            viol = std::fabs(gi - tq) - slack;
        else
            viol = std::fabs(gi) - tq - slack;
        if (viol > rep.max_violation) rep.max_violation = viol;
    }
    rep.ok = rep.max_violation <= 0.0;
    if (rep.max_violation < 0.0) rep.max_violation = 0.0;
    return rep;
}

CertificateReport certificate_check(const DynamicGraph& g, const PushState& state,
                                    const PprConfig& cfg) {
    cfg.validate();
    CertificateReport rep;
    if (g.edge_count() == 0) return rep;
    double thr_scale = cfg.eps / static_cast<double>(g.edge_count());
    Accum acc = scratch_residual(g, state, cfg.alpha);
    for (NodeId i : acc.touched) {
        double thr = thr_scale * static_cast<double>(g.degree(i));
        double slack = 1e-15 + 1e-12 * (1.0 + thr);
        double viol = std::fabs(acc.val[i]) - thr - slack;
        if (viol > rep.max_violation) rep.max_violation = viol;
    }
    rep.ok = rep.max_violation <= 0.0;
    if (rep.max_violation < 0.0) rep.max_violation = 0.0;
    return rep;
}

double push_mass(const PushState& state) { return state.p.l1() + state.r.sum(); }

double l1_error(const PprVector& pi, const std::vector<double>& dense_ref) {
    double err = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < dense_ref.size(); ++i) {
        double sv = 0.0;
        if (k < pi.entries.size() && pi.entries.idx[k] == i) {
            sv = pi.entries.val[k];
            ++k;
        }
        err += std::fabs(sv - dense_ref[i]);
    }
    return err;
}

// ---- state serialization ----

namespace {

constexpr char kMagic[4] = {'P', 'P', 'R', 'S'};

void write_sparse(std::ofstream& out, const SparseVec& v) {
    std::uint64_t len = v.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    for (std::size_t k = 0; k < v.size(); ++k) {
        out.write(reinterpret_cast<const char*>(&v.idx[k]), sizeof(NodeId));
        out.write(reinterpret_cast<const char*>(&v.val[k]), sizeof(double));
    }
}

bool read_sparse(std::ifstream& in, SparseVec& v) {
    std::uint64_t len = 0;
    if (!in.read(reinterpret_cast<char*>(&len), sizeof(len))) return false;
    v.clear();
    v.idx.resize(len);
    v.val.resize(len);
    for (std::uint64_t k = 0; k < len; ++k) {
        if (!in.read(reinterpret_cast<char*>(&v.idx[k]), sizeof(NodeId))) return false;
        if (!in.read(reinterpret_cast<char*>(&v.val[k]), sizeof(double))) return false;
    }
    return true;
}

void write_header(std::ofstream& out, std::uint8_t kind, NodeId source, std::uint64_t epoch,
                  std::uint64_t op_count) {
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&kind), 1);
    out.write(reinterpret_cast<const char*>(&source), sizeof(source));
    out.write(reinterpret_cast<const char*>(&epoch), sizeof(epoch));
    out.write(reinterpret_cast<const char*>(&op_count), sizeof(op_count));
}

bool read_header(std::ifstream& in, std::uint8_t& kind, NodeId& source, std::uint64_t& epoch,
                 std::uint64_t& op_count) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) return false;
    return static_cast<bool>(in.read(reinterpret_cast<char*>(&kind), 1) &&
                             in.read(reinterpret_cast<char*>(&source), sizeof(source)) &&
                             in.read(reinterpret_cast<char*>(&epoch), sizeof(epoch)) &&
                             in.read(reinterpret_cast<char*>(&op_count), sizeof(op_count)));
}

} // namespace

void save_state(const PprState& state, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot write state file: " + path);
    write_header(out, 0, state.source, state.epoch, state.op_count);
    write_sparse(out, state.x);
    write_sparse(out, state.grad);
}

void save_state(const PushState& state, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot write state file: " + path);
    write_header(out, 1, state.source, state.epoch, state.op_count);
    write_sparse(out, state.p);
    write_sparse(out, state.r);
}

bool load_state(const std::string& path, PprState& out_state) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open state file: " + path);
    std::uint8_t kind;
    NodeId source;
    std::uint64_t epoch, op_count;
    if (!read_header(in, kind, source, epoch, op_count))
        throw LoadError("bad state file header: " + path);
    if (kind != 0) return false;
    out_state.source = source;
    out_state.epoch = epoch;
    out_state.op_count = op_count;
    if (!read_sparse(in, out_state.x) || !read_sparse(in, out_state.grad))
        throw LoadError("truncated state file: " + path);
    return true;
}

bool load_state(const std::string& path, PushState& out_state) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open state file: " + path);
    std::uint8_t kind;
    NodeId source;
    std::uint64_t epoch, op_count;
    if (!read_header(in, kind, source, epoch, op_count))
        throw LoadError("bad state file header: " + path);
    if (kind != 1) return false;
    out_state.source = source;
    out_state.epoch = epoch;
    out_state.op_count = op_count;
    if (!read_sparse(in, out_state.p) || !read_sparse(in, out_state.r))
        throw LoadError("truncated state file: " + path);
    return true;
}

} // namespace pprdyn
