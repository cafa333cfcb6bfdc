#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pprdyn/common.hpp"

namespace pprdyn {

// One undirected insertion event. t is the event index within its stream.
struct EdgeEvent {
    NodeId u = 0;
    NodeId v = 0;
    std::int64_t t = 0;
};

struct EdgeStream {
    std::vector<EdgeEvent> events;
    std::size_t duplicates_dropped = 0;
};

// Undirected simple graph under edge insertions. Node count is fixed at
// construction; edges arrive one at a time and are never removed.
//
// Each adjacency entry is stamped with the insertion epoch (the value of
// edge_count() at the moment the edge went in), so the neighborhood as of any
// past epoch can be recovered: entries within a list are in epoch order.
class DynamicGraph {
public:
    struct Arc {
        NodeId to;
        std::uint32_t epoch;
    };

    explicit DynamicGraph(std::size_t node_count);

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return m_; }

    // Epoch stamped on the next inserted edge; equals edge_count().
    std::uint32_t epoch() const { return static_cast<std::uint32_t>(m_); }

    std::size_t degree(NodeId u) const;
    bool has_edge(NodeId u, NodeId v) const;

    // Returns true if the edge was inserted, false if it already existed.
    // Throws SelfLoopError on u == v and std::invalid_argument on bad ids.
    bool insert_edge(NodeId u, NodeId v);

    const std::vector<Arc>& arcs(NodeId u) const;

    // Degree counting only arcs inserted before the given epoch.
    std::size_t degree_before(NodeId u, std::uint32_t epoch) const;

    // Rebuilds the sorted duplicate-detection index for every node. Cheap to
    // call at snapshot boundaries; insertions otherwise refresh a node's index
    // lazily once its unsorted tail grows past a small threshold.
    void freeze_index();

private:
    struct NodeRec {
        std::vector<Arc> arcs;             // epoch order
        std::vector<NodeId> sorted_ids;    // sorted ids over arcs[0..sorted_upto)
        std::size_t sorted_upto = 0;
    };

    void check_node(NodeId u) const;
    static bool contains(const NodeRec& rec, NodeId v);
    static void reindex(NodeRec& rec);

    std::vector<NodeRec> nodes_;
    std::size_t m_ = 0;
};

// Restriction of a graph to arcs inserted before a fixed epoch. Used to
// replay adjustment rules against the pre-insertion neighborhood after the
// edges have already gone into the shared graph.
class GraphView {
public:
    GraphView(const DynamicGraph& g, std::uint32_t epoch_limit)
        : g_(g), limit_(epoch_limit) {}

    static GraphView current(const DynamicGraph& g) { return GraphView(g, g.epoch()); }

    std::size_t node_count() const { return g_.node_count(); }
    std::size_t degree(NodeId u) const { return g_.degree_before(u, limit_); }

    template <class Fn>
    void for_neighbors(NodeId u, Fn&& fn) const {
        for (const auto& arc : g_.arcs(u)) {
            if (arc.epoch >= limit_) break;
            fn(arc.to);
        }
    }

private:
    const DynamicGraph& g_;
    std::uint32_t limit_;
};

// Parses "u v" or "u v t" integer lines; '#' starts a comment line; blank
// lines are skipped. Line order defines event order regardless of any third
// column. Repeated undirected pairs are dropped (first occurrence kept) and
// counted; self-loops are format errors.
EdgeStream load_edge_stream(std::istream& in);
EdgeStream load_edge_stream_file(const std::string& path);

enum class ScheduleMode { Major, Minor };

struct ScheduleParams {
    // Major: number of equal steps after the half-size base graph.
    int num_steps = 5;
    // Minor: k batches of fixed size appended to an almost-complete base.
    std::size_t batch = 100;
    int k = 5;
};

// Partition of an event stream into an initial base plus per-snapshot steps.
// Snapshot t >= 1 is reached by replaying steps[t-1] further events.
struct SnapshotSchedule {
    std::size_t base = 0;
    std::vector<std::size_t> steps;

    std::size_t snapshot_count() const { return steps.size() + 1; }
    std::size_t num_steps() const { return steps.size(); }
    std::size_t total_events() const;
};

SnapshotSchedule build_schedule(std::size_t event_count, ScheduleMode mode,
                                const ScheduleParams& params);

} // namespace pprdyn
