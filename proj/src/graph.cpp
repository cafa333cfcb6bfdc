#include "pprdyn/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace pprdyn {

namespace {
// Tail length after which a node's sorted index is refreshed eagerly, keeping
// duplicate checks O(log d + const) while insertions stay amortized O(1).
constexpr std::size_t kResortTail = 64;
} // namespace

DynamicGraph::DynamicGraph(std::size_t node_count) {
    if (node_count == 0) throw std::invalid_argument("graph needs at least one node");
    nodes_.resize(node_count);
}

void DynamicGraph::check_node(NodeId u) const {
    if (u >= nodes_.size())
        throw std::invalid_argument("node id " + std::to_string(u) + " out of range (n=" +
                                    std::to_string(nodes_.size()) + ")");
}

std::size_t DynamicGraph::degree(NodeId u) const {
    check_node(u);
    return nodes_[u].arcs.size();
}

const std::vector<DynamicGraph::Arc>& DynamicGraph::arcs(NodeId u) const {
    check_node(u);
    return nodes_[u].arcs;
}

std::size_t DynamicGraph::degree_before(NodeId u, std::uint32_t epoch) const {
    check_node(u);
    const auto& a = nodes_[u].arcs;
    auto it = std::partition_point(a.begin(), a.end(),
                                   [epoch](const Arc& arc) { return arc.epoch < epoch; });
    return static_cast<std::size_t>(it - a.begin());
}

bool DynamicGraph::contains(const NodeRec& rec, NodeId v) {
    if (std::binary_search(rec.sorted_ids.begin(), rec.sorted_ids.end(), v)) return true;
    for (std::size_t i = rec.sorted_upto; i < rec.arcs.size(); ++i)
        if (rec.arcs[i].to == v) return true;
    return false;
}

void DynamicGraph::reindex(NodeRec& rec) {
    rec.sorted_ids.resize(rec.arcs.size());
    for (std::size_t i = 0; i < rec.arcs.size(); ++i) rec.sorted_ids[i] = rec.arcs[i].to;
    std::sort(rec.sorted_ids.begin(), rec.sorted_ids.end());
    rec.sorted_upto = rec.arcs.size();
}

bool DynamicGraph::has_edge(NodeId u, NodeId v) const {
    check_node(u);
    check_node(v);
    // Probe the endpoint with the shorter list.
    const NodeRec& a = nodes_[u].arcs.size() <= nodes_[v].arcs.size() ? nodes_[u] : nodes_[v];
    NodeId other = nodes_[u].arcs.size() <= nodes_[v].arcs.size() ? v : u;
    return contains(a, other);
}

bool DynamicGraph::insert_edge(NodeId u, NodeId v) {
    check_node(u);
    check_node(v);
    if (u == v) throw SelfLoopError(u);
    if (has_edge(u, v)) return false;
    std::uint32_t e = epoch();
    nodes_[u].arcs.push_back({v, e});
    nodes_[v].arcs.push_back({u, e});
    ++m_;
    for (NodeId w : {u, v}) {
        NodeRec& rec = nodes_[w];
        if (rec.arcs.size() - rec.sorted_upto > kResortTail) reindex(rec);
    }
    return true;
}

void DynamicGraph::freeze_index() {
    for (NodeRec& rec : nodes_)
        if (rec.sorted_upto < rec.arcs.size()) reindex(rec);
}

namespace {

bool parse_u32(std::string_view tok, NodeId& out) {
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) return false;
    if (value > 0xffffffffULL) return false;
    out = static_cast<NodeId>(value);
    return true;
}

bool parse_i64(std::string_view tok, std::int64_t& out) {
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc() && ptr == tok.data() + tok.size();
}

} // namespace

EdgeStream load_edge_stream(std::istream& in) {
    EdgeStream stream;
    std::unordered_set<std::uint64_t> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv(line);
        std::size_t first = sv.find_first_not_of(" \t\r");
        if (first == std::string_view::npos) continue;
        if (sv[first] == '#') continue;

        std::vector<std::string_view> toks;
        std::size_t pos = first;
        while (pos < sv.size()) {
            std::size_t end = sv.find_first_of(" \t\r", pos);
            if (end == std::string_view::npos) end = sv.size();
            if (end > pos) toks.push_back(sv.substr(pos, end - pos));
            pos = sv.find_first_not_of(" \t\r", end);
            if (pos == std::string_view::npos) break;
        }
        if (toks.size() < 2 || toks.size() > 3)
            throw FormatError(lineno, "expected 'u v' or 'u v t', got '" + line + "'");
        NodeId u, v;
        if (!parse_u32(toks[0], u) || !parse_u32(toks[1], v))
            throw FormatError(lineno, "bad node id in '" + line + "'");
        if (toks.size() == 3) {
            std::int64_t ignored;
            if (!parse_i64(toks[2], ignored))
                throw FormatError(lineno, "bad timestamp in '" + line + "'");
        }
        if (u == v) throw FormatError(lineno, "self-loop " + std::to_string(u));

        NodeId lo = std::min(u, v), hi = std::max(u, v);
        std::uint64_t key = (static_cast<std::uint64_t>(lo) << 32) | hi;
        if (!seen.insert(key).second) {
            ++stream.duplicates_dropped;
            continue;
        }
        stream.events.push_back({u, v, static_cast<std::int64_t>(stream.events.size())});
    }
    return stream;
}

EdgeStream load_edge_stream_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open edge stream: " + path);
    return load_edge_stream(in);
}

std::size_t SnapshotSchedule::total_events() const {
    return base + std::accumulate(steps.begin(), steps.end(), std::size_t{0});
}

SnapshotSchedule build_schedule(std::size_t event_count, ScheduleMode mode,
                                const ScheduleParams& params) {
    SnapshotSchedule sched;
    if (mode == ScheduleMode::Major) {
        if (params.num_steps < 0) throw std::invalid_argument("num_steps must be >= 0");
        sched.base = event_count / 2;
        std::size_t rem = event_count - sched.base;
        std::size_t steps = static_cast<std::size_t>(params.num_steps);
        if (steps == 0) {
            sched.base = event_count;
            return sched;
        }
        sched.steps.resize(steps);
        for (std::size_t i = 0; i < steps; ++i)
            sched.steps[i] = rem / steps + (i < rem % steps ? 1 : 0);
    } else {
        if (params.k < 1) throw std::invalid_argument("minor schedule needs k >= 1");
        if (params.batch < 1) throw std::invalid_argument("minor schedule needs batch >= 1");
        std::size_t need = params.batch * static_cast<std::size_t>(params.k);
        if (need > event_count)
            throw std::invalid_argument("minor schedule wants " + std::to_string(need) +
                                        " events but stream has " + std::to_string(event_count));
        sched.base = event_count - need;
        sched.steps.assign(static_cast<std::size_t>(params.k), params.batch);
    }
    return sched;
}

} // namespace pprdyn
