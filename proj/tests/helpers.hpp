#pragma once

#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "pprdyn/graph.hpp"
#include "pprdyn/ppr.hpp"
#include "pprdyn/rng.hpp"

namespace testutil {

using namespace pprdyn;

// Independent reference: solve (I - (1-alpha) A D^{-1}) pi = alpha e_s by
// Gaussian elimination with partial pivoting. No shared code with the
// iterative solvers. Only for small n.
inline std::vector<double> dense_solve_ppr(const DynamicGraph& g, NodeId s, double alpha) {
    std::size_t n = g.node_count();
    std::vector<std::vector<double>> M(n, std::vector<double>(n + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) M[i][i] = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t dj = g.degree(static_cast<NodeId>(j));
        if (dj == 0) continue;
        for (const auto& arc : g.arcs(static_cast<NodeId>(j)))
            M[arc.to][j] -= (1.0 - alpha) / static_cast<double>(dj);
    }
    M[s][n] = alpha;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(M[r][col]) > std::fabs(M[piv][col])) piv = r;
        std::swap(M[col], M[piv]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || M[r][col] == 0.0) continue;
            double f = M[r][col] / M[col][col];
            for (std::size_t c = col; c <= n; ++c) M[r][c] -= f * M[col][c];
        }
    }
    std::vector<double> pi(n);
    for (std::size_t i = 0; i < n; ++i) pi[i] = M[i][n] / M[i][i];
    return pi;
}

inline DynamicGraph make_k2() {
    DynamicGraph g(2);
    g.insert_edge(0, 1);
    return g;
}

inline DynamicGraph make_k3() {
    DynamicGraph g(3);
    g.insert_edge(0, 1);
    g.insert_edge(1, 2);
    g.insert_edge(0, 2);
    return g;
}

// Random connected-ish graph: a spanning chain plus extra random edges.
inline DynamicGraph random_graph(std::size_t n, std::size_t extra_edges, Rng& rng) {
    DynamicGraph g(n);
    for (std::size_t i = 1; i < n; ++i)
        g.insert_edge(static_cast<NodeId>(i - 1), static_cast<NodeId>(i));
    std::size_t added = 0, attempts = 0;
    while (added < extra_edges && attempts < extra_edges * 50) {
        ++attempts;
        NodeId u = static_cast<NodeId>(rng.below(n));
        NodeId v = static_cast<NodeId>(rng.below(n));
        if (u == v) continue;
        if (g.insert_edge(u, v)) ++added;
    }
    return g;
}

// Random edge list (no duplicates, no self-loops) on n nodes.
inline std::vector<std::pair<NodeId, NodeId>> random_edge_list(std::size_t n, std::size_t m,
                                                               Rng& rng) {
    std::set<std::pair<NodeId, NodeId>> seen;
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::size_t attempts = 0;
    while (edges.size() < m && attempts < m * 100) {
        ++attempts;
        NodeId u = static_cast<NodeId>(rng.below(n));
        NodeId v = static_cast<NodeId>(rng.below(n));
        if (u == v) continue;
        auto key = std::minmax(u, v);
        if (!seen.insert({key.first, key.second}).second) continue;
        edges.emplace_back(u, v);
    }
    return edges;
}

inline double l1_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return s;
}

} // namespace testutil
