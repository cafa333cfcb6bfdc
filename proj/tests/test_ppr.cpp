#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>
#include <vector>

#include "helpers.hpp"
#include "pprdyn/ppr.hpp"

using namespace pprdyn;
using testutil::dense_solve_ppr;
using testutil::l1_diff;

namespace {

double linf_sparse_diff(const SparseVec& a, const SparseVec& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        worst = std::max(worst, std::fabs(a.val[k] - b.get(a.idx[k])));
    for (std::size_t k = 0; k < b.size(); ++k)
        worst = std::max(worst, std::fabs(b.val[k] - a.get(b.idx[k])));
    return worst;
}

std::vector<double> dense_of(const PprVector& pi, std::size_t n) {
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < pi.entries.size(); ++k) out[pi.entries.idx[k]] = pi.entries.val[k];
    return out;
}

} // namespace

TEST_CASE("config validation and step size") {
    PprConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(std::fabs(cfg.step() - 0.5405405405405406) < 1e-15);
    cfg.alpha = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.alpha = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.alpha = 0.15;
    cfg.eps = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.eps = 1e-8;
    cfg.max_sweeps = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("sparse vector semantics") {
    SparseVec v;
    v.set(5, 1.5);
    v.set(2, -0.5);
    v.add(5, 0.5);
    CHECK(v.get(5) == 2.0);
    CHECK(v.get(2) == -0.5);
    CHECK(v.get(7) == 0.0);
    CHECK(v.size() == 2);
    CHECK(v.sum() == doctest::Approx(1.5));
    CHECK(v.l1() == doctest::Approx(2.5));
    v.set(5, 0.0);   // explicit zero removes the entry
    CHECK(v.size() == 1);
    CHECK(v.get(5) == 0.0);
    // Entries stay sorted by id under mixed insertion order.
    v.add(9, 1.0);
    v.add(1, 1.0);
    REQUIRE(v.idx.size() == 3);
    CHECK(v.idx[0] == 1);
    CHECK(v.idx[1] == 2);
    CHECK(v.idx[2] == 9);
}

TEST_CASE("probability vector export clips dust and rejects real negatives") {
    SparseVec raw;
    raw.set(0, 0.7);
    raw.set(1, -5e-13);   // float dust, clipped away
    PprVector pi = make_ppr_vector(0, raw);
    CHECK(pi.entries.size() == 1);
    CHECK(pi.entries.get(0) == 0.7);

    SparseVec bad;
    bad.set(0, -1e-6);
    CHECK_THROWS_AS(make_ppr_vector(0, bad), InternalInconsistencyError);
    // A stated solver tolerance widens the clip window.
    CHECK(make_ppr_vector(0, bad, 1e-5).entries.empty());

    SparseVec heavy;
    heavy.set(0, 0.9);
    heavy.set(1, 0.2);
    CHECK_THROWS_AS(make_ppr_vector(0, heavy), InternalInconsistencyError);
    CHECK_THROWS_AS(make_ppr_vector(0, heavy, 1e-3), InternalInconsistencyError);
}

TEST_CASE("power iteration closed forms") {
    SUBCASE("two-node clique") {
        DynamicGraph g = testutil::make_k2();
        std::vector<double> pi = power_iteration_dense(g, 0, 0.15, 1e-14);
        CHECK(std::fabs(pi[0] - 0.5405405405405406) < 1e-12);
        CHECK(std::fabs(pi[1] - 0.4594594594594595) < 1e-12);
    }
    SUBCASE("triangle") {
        DynamicGraph g = testutil::make_k3();
        std::vector<double> pi = power_iteration_dense(g, 0, 0.2, 1e-14);
        CHECK(std::fabs(pi[0] - 3.0 / 7.0) < 1e-12);
        CHECK(std::fabs(pi[1] - 2.0 / 7.0) < 1e-12);
        CHECK(std::fabs(pi[2] - 2.0 / 7.0) < 1e-12);
    }
    SUBCASE("agrees with the direct linear solve on random graphs") {
        Rng rng(101);
        for (int it = 0; it < 10; ++it) {
            DynamicGraph g = testutil::random_graph(30, 25, rng);
            NodeId s = static_cast<NodeId>(rng.below(30));
            std::vector<double> a = power_iteration_dense(g, s, 0.15, 1e-13);
            std::vector<double> b = dense_solve_ppr(g, s, 0.15);
            CHECK(l1_diff(a, b) < 1e-9);
        }
    }
    SUBCASE("errors") {
        DynamicGraph g(3);
        g.insert_edge(0, 1);
        CHECK_THROWS_AS(power_iteration_dense(g, 2, 0.15, 1e-10), DanglingNodeError);
        CHECK_THROWS_AS(power_iteration_dense(g, 0, 0.15, 1e-14, 1), IterationLimitError);
        CHECK_THROWS_AS(power_iteration_dense(g, 0, 1.5, 1e-10), std::invalid_argument);
        CHECK_THROWS_AS(power_iteration_dense(g, 0, 0.15, 0.0), std::invalid_argument);
    }
}

TEST_CASE("single push moves alpha into the estimate") {
    DynamicGraph g = testutil::make_k2();
    PprConfig cfg;
    PushState st = make_push_state(g, 0);
    push_node(g, st, 0, cfg);
    CHECK(st.p.get(0) == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(st.p.get(1) == 0.0);
    CHECK(st.r.get(0) == 0.0);
    CHECK(st.r.get(1) == doctest::Approx(0.85).epsilon(1e-15));
    CHECK(st.op_count == 2);
    CHECK(std::fabs(push_mass(st) - 1.0) < 1e-15);
}

TEST_CASE("forward push meets the l1 bound and is resumable") {
    Rng rng(77);
    PprConfig cfg;
    cfg.eps = 1e-4;
    for (int it = 0; it < 6; ++it) {
        DynamicGraph g = testutil::random_graph(40, 50, rng);
        NodeId s = static_cast<NodeId>(rng.below(40));
        PushState st = make_push_state(g, s);
        forward_push(g, st, cfg);
        CHECK(std::fabs(push_mass(st) - 1.0) < 1e-12);
        std::vector<double> oracle = dense_solve_ppr(g, s, cfg.alpha);
        CHECK(l1_error(to_ppr(st), oracle) <= 2.0 * cfg.eps + 1e-9);
        CHECK(certificate_check(g, st, cfg).ok);
        // Converged state re-entered is a no-op.
        std::uint64_t ops = st.op_count;
        forward_push(g, st, cfg);
        CHECK(st.op_count == ops);
        // Tightening eps resumes from the warm state.
        PprConfig tight = cfg;
        tight.eps = 1e-6;
        forward_push(g, st, tight);
        CHECK(st.op_count > ops);
        CHECK(l1_error(to_ppr(st), oracle) <= 2.0 * tight.eps + 1e-9);
    }
}

TEST_CASE("push solver errors") {
    DynamicGraph g(3);
    g.insert_edge(0, 1);
    CHECK_THROWS_AS(make_push_state(g, 2), DanglingNodeError);
    PprConfig cfg;
    cfg.eps = 1e-10;
    cfg.max_sweeps = 1;   // caps pushes at max_sweeps * n
    PushState st = make_push_state(g, 0);
    CHECK_THROWS_AS(forward_push(g, st, cfg), IterationLimitError);
    CHECK_FALSE(st.fresh());   // partial progress is saved before the throw
    CHECK(std::fabs(push_mass(st) - 1.0) < 1e-14);
}

TEST_CASE("push adjustment frozen example") {
    // Path 1-0-2 gives node 0 degree two; directional rule for a new arc
    // towards node 3.
    DynamicGraph g(4);
    g.insert_edge(1, 0);
    g.insert_edge(0, 2);
    PprConfig cfg;
    PushState st;
    st.source = 1;
    st.p.set(0, 0.4);
    st.r.set(0, 0.05);
    push_adjust_edge(st, g, 0, 3, cfg);
    CHECK(std::fabs(st.p.get(0) - 0.6) < 1e-15);
    CHECK(std::fabs(st.r.get(0) - (0.05 - 0.4 / 0.3)) < 1e-15);
    CHECK(std::fabs(st.r.get(3) - 0.85 * 0.4 / 0.3) < 1e-15);
    CHECK(st.op_count == 3);
    CHECK(st.epoch == 1);

    // A zero estimate at the scaled endpoint is a cheap no-op.
    PushState zero;
    zero.source = 1;
    zero.r.set(1, 1.0);
    push_adjust_edge(zero, g, 0, 3, cfg);
    CHECK(zero.p.empty());
    CHECK(zero.op_count == 1);

    // A zero estimate on an isolated endpoint is still a no-op; only a
    // positive estimate there is an impossible state.
    PushState dust;
    dust.source = 1;
    dust.p.set(1, 0.1);
    push_adjust_edge(dust, g, 3, 0, cfg);
    CHECK(dust.p.get(1) == 0.1);
    CHECK(dust.op_count == 1);
    PushState other;
    other.source = 1;
    other.p.set(3, 0.1);
    CHECK_THROWS_AS(push_adjust_edge(other, g, 3, 0, cfg), DegreeZeroError);
}

TEST_CASE("push adjustment composes into a valid warm state") {
    // Square 0-1-2-3, then the chord (0, 2) arrives.
    DynamicGraph g(4);
    g.insert_edge(0, 1);
    g.insert_edge(1, 2);
    g.insert_edge(2, 3);
    g.insert_edge(3, 0);
    PprConfig cfg;
    cfg.eps = 1e-6;
    PushState st = make_push_state(g, 0);
    forward_push(g, st, cfg);

    std::uint32_t before = g.epoch();
    REQUIRE(g.insert_edge(0, 2));
    GraphView pre(g, before);
    push_adjust_edge(st, pre, 0, 2, cfg);
    push_adjust_edge(st, pre, 2, 0, cfg);

    CHECK(std::fabs(push_mass(st) - 1.0) < 1e-12);
    // The maintained residual matches the invariant on the new graph.
    CHECK(residual_check(g, st, cfg) < 1e-12);

    forward_push(g, st, cfg);
    std::vector<double> oracle = dense_solve_ppr(g, 0, cfg.alpha);
    CHECK(l1_error(to_ppr(st, 2.0 * cfg.eps), oracle) <= 2.0 * cfg.eps + 1e-9);
    CHECK(certificate_check(g, st, cfg).ok);
}

TEST_CASE("adjustment directions commute") {
    Rng rng(5);
    DynamicGraph g = testutil::random_graph(20, 25, rng);
    PprConfig cfg;
    cfg.eps = 1e-7;
    PushState ps = make_push_state(g, 3);
    forward_push(g, ps, cfg);
    PprState is = make_ista_state(g, 3, cfg);
    ista_solve(g, is, cfg);

    NodeId u = 2, v = 11;
    if (g.has_edge(u, v)) { u = 4; v = 17; }
    REQUIRE_FALSE(g.has_edge(u, v));
    std::uint32_t before = g.epoch();
    REQUIRE(g.insert_edge(u, v));
    GraphView pre(g, before);

    PushState p1 = ps, p2 = ps;
    push_adjust_edge(p1, pre, u, v, cfg);
    push_adjust_edge(p1, pre, v, u, cfg);
    push_adjust_edge(p2, pre, v, u, cfg);
    push_adjust_edge(p2, pre, u, v, cfg);
    CHECK(linf_sparse_diff(p1.p, p2.p) < 1e-15);
    CHECK(linf_sparse_diff(p1.r, p2.r) < 1e-15);

    PprState i1 = is, i2 = is;
    ista_adjust_edge(i1, pre, u, v, cfg);
    ista_adjust_edge(i1, pre, v, u, cfg);
    ista_adjust_edge(i2, pre, v, u, cfg);
    ista_adjust_edge(i2, pre, u, v, cfg);
    CHECK(linf_sparse_diff(i1.x, i2.x) < 1e-15);
    CHECK(linf_sparse_diff(i1.grad, i2.grad) < 1e-15);

    CHECK(residual_check(g, p1, cfg) < 1e-12);
    CHECK(residual_check(g, i1, cfg) < 1e-12);
}

TEST_CASE("fresh solver state carries only the source gradient") {
    DynamicGraph g = testutil::make_k3();
    PprConfig cfg;
    PprState st = make_ista_state(g, 1, cfg);
    CHECK(st.x.empty());
    REQUIRE(st.grad.size() == 1);
    CHECK(st.grad.idx[0] == 1);
    CHECK(std::fabs(st.grad.val[0] - (-0.15 / std::sqrt(2.0))) < 1e-16);
    CHECK_THROWS_AS(make_ista_state(DynamicGraph(2), 0, cfg), DanglingNodeError);
}

TEST_CASE("proximal solver matches the reference on small graphs") {
    PprConfig cfg;
    cfg.eps = 1e-10;
    SUBCASE("two-node clique") {
        DynamicGraph g = testutil::make_k2();
        PprState st = make_ista_state(g, 0, cfg);
        ista_solve(g, st, cfg);
        PprVector pi = to_ppr(g, st);
        CHECK(std::fabs(pi.entries.get(0) - 0.5405405405405406) < 1e-6);
        CHECK(std::fabs(pi.entries.get(1) - 0.4594594594594595) < 1e-6);
        CHECK(certificate_check(g, st, cfg).ok);
        // Converged state re-entered is a counted-work-free no-op.
        std::uint64_t ops = st.op_count;
        ista_solve(g, st, cfg);
        CHECK(st.op_count == ops);
    }
    SUBCASE("random graphs against the direct solve") {
        Rng rng(303);
        for (int it = 0; it < 6; ++it) {
            DynamicGraph g = testutil::random_graph(35, 40, rng);
            NodeId s = static_cast<NodeId>(rng.below(35));
            PprState st = make_ista_state(g, s, cfg);
            ista_solve(g, st, cfg);
            std::vector<double> oracle = dense_solve_ppr(g, s, cfg.alpha);
            CHECK(l1_error(to_ppr(g, st), oracle) < 1e-6);
            CHECK(certificate_check(g, st, cfg).ok);
            CHECK(residual_check(g, st, cfg) < 1e-12);
        }
    }
    SUBCASE("iteration limit") {
        DynamicGraph g = testutil::make_k2();
        PprConfig tiny = cfg;
        tiny.max_sweeps = 2;
        PprState st = make_ista_state(g, 0, tiny);
        CHECK_THROWS_AS(ista_solve(g, st, tiny), IterationLimitError);
        CHECK_FALSE(st.x.empty());   // partial progress survives the throw
    }
}

TEST_CASE("certificate detects a corrupted solution") {
    DynamicGraph g = testutil::make_k3();
    PprConfig cfg;
    cfg.eps = 1e-9;
    PprState st = make_ista_state(g, 0, cfg);
    ista_solve(g, st, cfg);
    REQUIRE(certificate_check(g, st, cfg).ok);
    st.x.add(1, 0.05);
    CertificateReport rep = certificate_check(g, st, cfg);
    CHECK_FALSE(rep.ok);
    CHECK(rep.max_violation > 1e-3);
}

TEST_CASE("solver adjustment frozen example") {
    // Star center 0 with four leaves; a new arc towards node 5 scales x(0)
    // by five fourths.
    DynamicGraph g(6);
    for (NodeId leaf = 1; leaf <= 4; ++leaf) g.insert_edge(0, leaf);
    g.insert_edge(5, 1);   // gives node 5 a degree so both directions exist
    PprConfig cfg;
    PprState st;
    st.source = 0;
    st.x.set(0, 0.2);
    std::uint32_t before = g.epoch();
    REQUIRE(g.insert_edge(0, 5));
    GraphView pre(g, before);
    ista_adjust_edge(st, pre, 0, 5, cfg);
    CHECK(std::fabs(st.x.get(0) - 0.25) < 1e-15);
    CHECK(st.epoch == 1);
    CHECK(st.op_count == 2 + 4);

    // Isolated endpoint: a zero value is a no-op (the paired direction call
    // carries the new arc), a nonzero value or the source itself is an error.
    DynamicGraph h(3);
    h.insert_edge(0, 1);
    PprState quiet;
    quiet.source = 0;
    ista_adjust_edge(quiet, h, 2, 0, cfg);
    CHECK(quiet.x.empty());
    CHECK(quiet.grad.empty());
    CHECK(quiet.op_count == 1);
    PprState iso;
    iso.source = 0;
    iso.x.set(2, 0.5);
    CHECK_THROWS_AS(ista_adjust_edge(iso, h, 2, 0, cfg), DegreeZeroError);
    PprState src;
    src.source = 2;
    CHECK_THROWS_AS(ista_adjust_edge(src, h, 2, 0, cfg), DegreeZeroError);
}

TEST_CASE("solver adjustment composes into a valid warm state") {
    DynamicGraph g(4);
    g.insert_edge(0, 1);
    g.insert_edge(1, 2);
    g.insert_edge(2, 3);
    g.insert_edge(3, 0);
    PprConfig cfg;
    cfg.eps = 1e-8;
    PprState warm = make_ista_state(g, 0, cfg);
    ista_solve(g, warm, cfg);

    std::uint32_t before = g.epoch();
    REQUIRE(g.insert_edge(0, 2));
    GraphView pre(g, before);
    ista_adjust_edge(warm, pre, 0, 2, cfg);
    ista_adjust_edge(warm, pre, 2, 0, cfg);

    // The maintained gradient is analytically exact on the new graph.
    CHECK(residual_check(g, warm, cfg) < 1e-12);

    ista_solve(g, warm, cfg);
    CHECK(certificate_check(g, warm, cfg).ok);

    // The penalized problem is strictly convex, so warm and cold must land
    // on the same point.
    PprState cold = make_ista_state(g, 0, cfg);
    ista_solve(g, cold, cfg);
    PprVector a = to_ppr(g, warm, 1e-9);
    PprVector b = to_ppr(g, cold, 1e-9);
    CHECK(l1_diff(dense_of(a, 4), dense_of(b, 4)) < 1e-9);

    std::vector<double> oracle = dense_solve_ppr(g, 0, cfg.alpha);
    CHECK(l1_error(a, oracle) < 1e-5);
}

TEST_CASE("interleaved and replayed adjustments are identical") {
    // The harness inserts a whole batch, then replays per-edge adjustments
    // against epoch-limited views. That must reproduce the interleaved
    // sequence exactly.
    Rng rng(909);
    DynamicGraph g1 = testutil::random_graph(30, 30, rng);
    PprConfig cfg;
    cfg.eps = 1e-7;
    PprState s1 = make_ista_state(g1, 0, cfg);
    ista_solve(g1, s1, cfg);
    PushState q1 = make_push_state(g1, 0);
    forward_push(g1, q1, cfg);

    // Mirror graph and state copies for the replay path. The mirror must
    // reproduce g1's arc ordering, not just its edge set: the gradient
    // repair sums over neighbors in list order, so a permuted adjacency
    // rounds differently. Epoch stamps recover the insertion order.
    std::vector<std::tuple<std::uint32_t, NodeId, NodeId>> base_edges;
    for (NodeId u = 0; u < 30; ++u)
        for (const auto& arc : g1.arcs(u))
            if (arc.to > u) base_edges.emplace_back(arc.epoch, u, arc.to);
    std::sort(base_edges.begin(), base_edges.end());
    DynamicGraph g2(30);
    for (const auto& [ep0, eu, ev] : base_edges) g2.insert_edge(eu, ev);
    REQUIRE(g2.edge_count() == g1.edge_count());
    PprState s2 = s1;
    PushState q2 = q1;

    std::vector<std::pair<NodeId, NodeId>> batch;
    while (batch.size() < 6) {
        NodeId u = static_cast<NodeId>(rng.below(30));
        NodeId v = static_cast<NodeId>(rng.below(30));
        if (u == v || g1.has_edge(u, v)) continue;
        batch.emplace_back(u, v);
        // Interleaved: insert then adjust immediately.
        std::uint32_t ep = g1.epoch();
        g1.insert_edge(u, v);
        GraphView pre(g1, ep);
        ista_adjust_edge(s1, pre, u, v, cfg);
        ista_adjust_edge(s1, pre, v, u, cfg);
        push_adjust_edge(q1, pre, u, v, cfg);
        push_adjust_edge(q1, pre, v, u, cfg);
    }

    // Replayed: insert the whole batch first, then adjust via stamped views.
    std::vector<std::uint32_t> epochs;
    for (const auto& [u, v] : batch) {
        epochs.push_back(g2.epoch());
        g2.insert_edge(u, v);
    }
    for (std::size_t k = 0; k < batch.size(); ++k) {
        GraphView pre(g2, epochs[k]);
        ista_adjust_edge(s2, pre, batch[k].first, batch[k].second, cfg);
        ista_adjust_edge(s2, pre, batch[k].second, batch[k].first, cfg);
        push_adjust_edge(q2, pre, batch[k].first, batch[k].second, cfg);
        push_adjust_edge(q2, pre, batch[k].second, batch[k].first, cfg);
    }

    CHECK(linf_sparse_diff(s1.x, s2.x) == 0.0);
    CHECK(linf_sparse_diff(s1.grad, s2.grad) == 0.0);
    CHECK(linf_sparse_diff(q1.p, q2.p) == 0.0);
    CHECK(linf_sparse_diff(q1.r, q2.r) == 0.0);
    CHECK(residual_check(g1, s1, cfg) < 1e-12);
    CHECK(residual_check(g1, q1, cfg) < 1e-12);
}

TEST_CASE("mass identity survives a fuzzed op stream") {
    Rng rng(4242);
    DynamicGraph g = testutil::random_graph(50, 40, rng);
    PprConfig cfg;
    cfg.eps = 1e-5;
    PushState st = make_push_state(g, 0);
    for (int op = 0; op < 1000; ++op) {
        switch (rng.below(3)) {
            case 0: {
                NodeId i = static_cast<NodeId>(rng.below(50));
                push_node(g, st, i, cfg);
                break;
            }
            case 1:
                forward_push(g, st, cfg);
                break;
            default: {
                NodeId u = static_cast<NodeId>(rng.below(50));
                NodeId v = static_cast<NodeId>(rng.below(50));
                if (u == v || g.has_edge(u, v)) break;
                std::uint32_t ep = g.epoch();
                g.insert_edge(u, v);
                GraphView pre(g, ep);
                push_adjust_edge(st, pre, u, v, cfg);
                push_adjust_edge(st, pre, v, u, cfg);
                break;
            }
        }
        REQUIRE(std::fabs(push_mass(st) - 1.0) < 1e-12);
    }
    CHECK(residual_check(g, st, cfg) < 1e-10);
}

TEST_CASE("warm maintenance beats a cold restart") {
    Rng rng(606);
    DynamicGraph g = testutil::random_graph(200, 300, rng);
    PprConfig cfg;
    cfg.eps = 1e-7;
    PprState warm = make_ista_state(g, 0, cfg);
    ista_solve(g, warm, cfg);

    for (int k = 0; k < 5; ++k) {
        NodeId u = static_cast<NodeId>(rng.below(200));
        NodeId v = static_cast<NodeId>(rng.below(200));
        if (u == v || g.has_edge(u, v)) { --k; continue; }
        std::uint32_t ep = g.epoch();
        g.insert_edge(u, v);
        GraphView pre(g, ep);
        ista_adjust_edge(warm, pre, u, v, cfg);
        ista_adjust_edge(warm, pre, v, u, cfg);
    }
    std::uint64_t before_resume = warm.op_count;
    ista_solve(g, warm, cfg);
    std::uint64_t warm_ops = warm.op_count - before_resume;

    PprState cold = make_ista_state(g, 0, cfg);
    ista_solve(g, cold, cfg);
    CHECK(warm_ops < cold.op_count);

    PprVector a = to_ppr(g, warm, 1e-9);
    PprVector b = to_ppr(g, cold, 1e-9);
    CHECK(l1_diff(dense_of(a, 200), dense_of(b, 200)) < 1e-8);
}

TEST_CASE("a node joining the graph is handled warm") {
    // Nodes 8 and 9 start isolated; edges then attach them. Warm adjustment
    // across those insertions must agree with a cold solve on the final graph.
    Rng rng(909);
    DynamicGraph g(10);
    for (NodeId i = 0; i + 1 < 8; ++i) g.insert_edge(i, i + 1);
    PprConfig cfg;
    cfg.eps = 1e-9;

    PprState xs = make_ista_state(g, 0, cfg);
    ista_solve(g, xs, cfg);
    PushState ps = make_push_state(g, 0);
    forward_push(g, ps, cfg);

    const std::pair<NodeId, NodeId> joins[] = {{3, 8}, {8, 9}, {9, 0}};
    for (auto [u, v] : joins) {
        std::uint32_t ep = g.epoch();
        REQUIRE(g.insert_edge(u, v));
        GraphView pre(g, ep);
        ista_adjust_edge(xs, pre, u, v, cfg);
        ista_adjust_edge(xs, pre, v, u, cfg);
        push_adjust_edge(ps, pre, u, v, cfg);
        push_adjust_edge(ps, pre, v, u, cfg);
    }
    ista_solve(g, xs, cfg);
    forward_push(g, ps, cfg);
    CHECK(certificate_check(g, xs, cfg).ok);
    CHECK(residual_check(g, ps, cfg) < 1e-9);

    std::vector<double> ref = testutil::dense_solve_ppr(g, 0, cfg.alpha);
    CHECK(l1_diff(dense_of(to_ppr(g, xs, 1e-8), 10), ref) < 1e-6);
    CHECK(l1_diff(dense_of(to_ppr(ps, 1e-7), 10), ref) < 1e-6);
}

TEST_CASE("probability export") {
    SUBCASE("push estimate passes through") {
        PushState st;
        st.source = 2;
        st.p.set(2, 0.6);
        st.p.set(4, 0.3);
        PprVector pi = to_ppr(st);
        CHECK(pi.source == 2);
        CHECK(pi.l1() == doctest::Approx(0.9));
    }
    SUBCASE("solver values are rescaled by degree roots") {
        DynamicGraph g = testutil::make_k3();
        PprState st;
        st.source = 0;
        st.x.set(0, 0.3);
        st.x.set(1, 0.2);
        PprVector pi = to_ppr(g, st);
        CHECK(std::fabs(pi.entries.get(0) - 0.3 * std::sqrt(2.0)) < 1e-15);
        CHECK(std::fabs(pi.entries.get(1) - 0.2 * std::sqrt(2.0)) < 1e-15);
    }
    SUBCASE("meaningful negatives are rejected") {
        PushState st;
        st.source = 0;
        st.p.set(0, -1e-6);
        CHECK_THROWS_AS(to_ppr(st), InternalInconsistencyError);
    }
}

TEST_CASE("l1 error helper") {
    PprVector pi;
    pi.source = 0;
    pi.entries.set(0, 0.5);
    pi.entries.set(2, 0.25);
    std::vector<double> ref = {0.4, 0.1, 0.25};
    CHECK(l1_error(pi, ref) == doctest::Approx(0.2));
}

TEST_CASE("state serialization round-trips") {
    DynamicGraph g = testutil::make_k3();
    PprConfig cfg;
    cfg.eps = 1e-8;
    PprState is = make_ista_state(g, 1, cfg);
    ista_solve(g, is, cfg);
    is.epoch = 7;
    PushState ps = make_push_state(g, 2);
    forward_push(g, ps, cfg);

    const std::string ista_path = "test_state_ista.bin";
    const std::string push_path = "test_state_push.bin";
    save_state(is, ista_path);
    save_state(ps, push_path);

    PprState is2;
    REQUIRE(load_state(ista_path, is2));
    CHECK(is2.source == is.source);
    CHECK(is2.epoch == 7);
    CHECK(is2.op_count == is.op_count);
    CHECK(linf_sparse_diff(is.x, is2.x) == 0.0);
    CHECK(linf_sparse_diff(is.grad, is2.grad) == 0.0);

    PushState ps2;
    REQUIRE(load_state(push_path, ps2));
    CHECK(linf_sparse_diff(ps.p, ps2.p) == 0.0);
    CHECK(linf_sparse_diff(ps.r, ps2.r) == 0.0);

    // Kind mismatch reports false without clobbering semantics.
    PushState wrong;
    CHECK_FALSE(load_state(ista_path, wrong));
    PprState wrong2;
    CHECK_FALSE(load_state(push_path, wrong2));

    CHECK_THROWS_AS(load_state("no_such_file.bin", is2), LoadError);
    std::remove(ista_path.c_str());
    std::remove(push_path.c_str());
}
