#include "pprdyn/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unordered_set>

namespace pprdyn {

SynthProfile synth_profile(const std::string& name) {
    SynthProfile p;
    p.name = name;
    if (name == "cora") {
        p.nodes = 2708;
        p.edges = 5277;
        p.dim = 1433;
        p.classes = 7;
        p.homophily = 0.82;
        p.attach_bias = 0.75;
        p.community_size = 24;
        p.words_per_node = 20;
        p.class_word_frac = 0.10;
    } else if (name == "citeseer") {
        p.nodes = 3279;
        p.edges = 4551;
        p.dim = 3703;
        p.classes = 6;
        p.homophily = 0.8;
        p.attach_bias = 0.75;
        p.community_size = 24;
        p.words_per_node = 22;
        p.class_word_frac = 0.10;
    } else if (name == "blobs") {
        p.nodes = 200;
        p.edges = 300;
        p.dim = 2;
        p.classes = 2;
        p.homophily = 0.9;
        p.features = SynthProfile::Features::Blobs;
    } else if (name == "k2") {
        p.nodes = 60;
        p.edges = 30;
        p.dim = 2;
        p.classes = 2;
        p.features = SynthProfile::Features::OneHot;
        p.paired = true;
    } else {
        throw std::invalid_argument("unknown profile '" + name + "'");
    }
    return p;
}

namespace {

std::vector<int> draw_labels(const SynthProfile& p, Rng& rng) {
    std::vector<int> labels(p.nodes);
    if (p.paired) {
        // Disjoint pairs with pair-consistent labels alternating by pair.
        for (std::size_t i = 0; i < p.nodes; ++i)
            labels[i] = static_cast<int>((i / 2) % static_cast<std::size_t>(p.classes));
        return labels;
    }
    // Round-robin base keeps classes balanced enough for stratified splits;
    // the shuffle decouples label from node id.
    for (std::size_t i = 0; i < p.nodes; ++i)
        labels[i] = static_cast<int>(i % static_cast<std::size_t>(p.classes));
    rng.shuffle(labels);
    return labels;
}

std::vector<std::vector<NodeId>> class_members(const SynthProfile& p,
                                               const std::vector<int>& labels) {
    std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(p.classes));
    for (std::size_t i = 0; i < p.nodes; ++i)
        members[static_cast<std::size_t>(labels[i])].push_back(static_cast<NodeId>(i));
    return members;
}

std::vector<EdgeEvent> draw_edges(const SynthProfile& p, const std::vector<int>& labels,
                                  Rng& rng) {
    std::vector<EdgeEvent> events;
    events.reserve(p.edges);
    if (p.paired) {
        for (std::size_t i = 0; i + 1 < p.nodes && events.size() < p.edges; i += 2)
            events.push_back({static_cast<NodeId>(i), static_cast<NodeId>(i + 1),
                              static_cast<std::int64_t>(events.size())});
        if (events.size() != p.edges)
            throw std::invalid_argument("paired profile needs nodes >= 2 * edges");
        return events;
    }

    // Each class splits into communities: contiguous slices of its shuffled
    // member list, the remainder folded into the last slice. Members cite
    // inside their own community first, which gives walks from community
    // mates a large shared support without concentrating mass on any single
    // node, the way co-citation circles behave in real citation graphs.
    const auto members = class_members(p, labels);
    std::vector<std::uint32_t> comm_of(p.nodes, 0);
    std::vector<std::vector<std::vector<NodeId>>> comms(members.size());
    for (std::size_t c = 0; c < members.size(); ++c) {
        std::vector<NodeId> pool = members[c];
        rng.shuffle(pool);
        std::size_t q = p.community_size > 0 ? static_cast<std::size_t>(p.community_size)
                                             : pool.size();
        std::size_t count = std::max<std::size_t>(1, pool.size() / std::max<std::size_t>(q, 1));
        comms[c].resize(count);
        for (std::size_t j = 0; j < pool.size(); ++j) {
            std::size_t id = std::min(j / q, count - 1);
            comm_of[pool[j]] = static_cast<std::uint32_t>(id);
            comms[c][id].push_back(pool[j]);
        }
    }

    std::unordered_set<std::uint64_t> used;
    used.reserve(2 * p.edges);
    auto key = [&](NodeId a, NodeId b) {
        if (a > b) std::swap(a, b);
        return static_cast<std::uint64_t>(a) * p.nodes + b;
    };

    std::size_t attempts = 0;
    const std::size_t attempt_cap = 400 * p.edges + 1000;
    while (events.size() < p.edges) {
        if (++attempts > attempt_cap)
            throw InternalInconsistencyError("edge sampling failed to place the requested edges");
        NodeId u = static_cast<NodeId>(rng.below(p.nodes));
        std::size_t cls = static_cast<std::size_t>(labels[u]);
        NodeId v;
        if (rng.uniform() < p.homophily) {
            // Within the class, targets stay in the source's own community
            // with probability attach_bias; the rest weave a class-wide web.
            const std::vector<NodeId>& pool = rng.uniform() < p.attach_bias
                                                  ? comms[cls][comm_of[u]]
                                                  : members[cls];
            v = pool[rng.below(pool.size())];
        } else {
            v = static_cast<NodeId>(rng.below(p.nodes));
        }
        if (u == v || !used.insert(key(u, v)).second) continue;
        events.push_back({u, v, static_cast<std::int64_t>(events.size())});
    }
    return events;
}

DenseMatrixF draw_features(const SynthProfile& p, const std::vector<int>& labels, Rng& rng) {
    DenseMatrixF X;
    X.rows = p.nodes;
    X.cols = p.dim;
    X.data.assign(p.nodes * p.dim, 0.0f);
    switch (p.features) {
        case SynthProfile::Features::OneHot:
            for (std::size_t i = 0; i < p.nodes; ++i)
                X.at(i, static_cast<std::size_t>(labels[i]) % p.dim) = 1.0f;
            break;
        case SynthProfile::Features::Blobs:
            for (std::size_t i = 0; i < p.nodes; ++i) {
                double sign = labels[i] == 0 ? 1.0 : -1.0;
                for (std::size_t j = 0; j < p.dim; ++j)
                    X.at(i, j) = static_cast<float>(sign * 2.0 + rng.normal() * 0.5);
            }
            break;
        case SynthProfile::Features::Bow: {
            std::size_t range = p.dim / static_cast<std::size_t>(p.classes);
            for (std::size_t i = 0; i < p.nodes; ++i) {
                std::size_t lo = static_cast<std::size_t>(labels[i]) * range;
                for (int w = 0; w < p.words_per_node; ++w) {
                    std::size_t word = rng.uniform() < p.class_word_frac
                                           ? lo + rng.below(range)
                                           : rng.below(p.dim);
                    X.at(i, word) = 1.0f;
                }
            }
            break;
        }
    }
    return X;
}

} // namespace

GeneratedDataset generate(const SynthProfile& p, std::uint64_t seed) {
    if (p.nodes < 2 || p.edges == 0 || p.dim == 0 || p.classes < 1)
        throw std::invalid_argument("profile needs nodes, edges, dim and classes");
    GeneratedDataset gen;
    Rng label_rng(mix_seed(seed, 0x6c61ULL));
    gen.labels = draw_labels(p, label_rng);
    Rng edge_rng(mix_seed(seed, 0x6564ULL));
    gen.events = draw_edges(p, gen.labels, edge_rng);
    Rng feat_rng(mix_seed(seed, 0x6665ULL));
    gen.features = draw_features(p, gen.labels, feat_rng);
    return gen;
}

void write_dataset(const std::string& dir, const GeneratedDataset& gen) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream out(fs::path(dir) / "edges.txt");
        if (!out) throw LoadError(dir + "/edges.txt: cannot write");
        for (const EdgeEvent& ev : gen.events) out << ev.u << " " << ev.v << "\n";
    }
    write_emb1((fs::path(dir) / "features.bin").string(), gen.features.rows, gen.features.cols,
               gen.features.data.data());
    {
        std::ofstream out(fs::path(dir) / "labels.txt");
        if (!out) throw LoadError(dir + "/labels.txt: cannot write");
        for (std::size_t i = 0; i < gen.labels.size(); ++i)
            out << i << " " << gen.labels[i] << "\n";
    }
}

Dataset to_dataset(const GeneratedDataset& gen, const std::string& name) {
    Dataset ds;
    ds.name = name;
    ds.node_count = gen.features.rows;
    ds.events = gen.events;
    ds.labels = gen.labels;
    int max_label = -1;
    for (int l : gen.labels) max_label = std::max(max_label, l);
    ds.label_count = max_label + 1;
    ds.X.resize(gen.features.cols, gen.features.rows);
    for (std::size_t i = 0; i < gen.features.rows; ++i)
        for (std::size_t j = 0; j < gen.features.cols; ++j)
            ds.X.data[i * ds.X.dim + j] = gen.features.at(i, j);
    return ds;
}

} // namespace pprdyn
