#include "pprdyn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace pprdyn {

namespace {

namespace fs = std::filesystem;

std::string dir_name(const std::string& dir) {
    fs::path p(dir);
    while (!p.empty() && p.filename().string().empty()) p = p.parent_path();
    std::string name = p.filename().string();
    return name.empty() ? std::string("dataset") : name;
}

void require_file(const fs::path& p) {
    if (!fs::exists(p)) throw LoadError(p.string() + ": missing");
}

std::vector<int> load_labels(const fs::path& path, std::size_t n, int& label_count) {
    std::ifstream in(path);
    if (!in) throw LoadError(path.string() + ": cannot open");
    std::vector<int> labels(n, -1);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream iss(line);
        long long id = 0;
        long long lab = 0;
        if (!(iss >> id)) continue;
        if (!(iss >> lab))
            throw LoadError(path.string() + ":" + std::to_string(lineno) +
                            ": expected 'node label'");
        if (id < 0 || static_cast<std::size_t>(id) >= n)
            throw LoadError(path.string() + ":" + std::to_string(lineno) + ": node id " +
                            std::to_string(id) + " out of range for " + std::to_string(n) +
                            " nodes");
        if (lab < 0)
            throw LoadError(path.string() + ":" + std::to_string(lineno) + ": negative label");
        if (labels[static_cast<std::size_t>(id)] != -1)
            throw LoadError(path.string() + ":" + std::to_string(lineno) +
                            ": duplicate label for node " + std::to_string(id));
        labels[static_cast<std::size_t>(id)] = static_cast<int>(lab);
    }
    int max_label = -1;
    for (int l : labels) max_label = std::max(max_label, l);
    if (max_label < 0) throw LoadError(path.string() + ": no labels");
    label_count = max_label + 1;
    std::vector<char> seen(static_cast<std::size_t>(label_count), 0);
    for (int l : labels)
        if (l >= 0) seen[static_cast<std::size_t>(l)] = 1;
    for (int c = 0; c < label_count; ++c)
        if (!seen[static_cast<std::size_t>(c)])
            throw LoadError(path.string() + ": label " + std::to_string(c) +
                            " never appears (labels must be dense)");
    return labels;
}

} // namespace

Dataset load_dataset(const std::string& dir, std::uint64_t seed, std::size_t track_cap) {
    fs::path root(dir);
    fs::path edges = root / "edges.txt";
    fs::path features = root / "features.bin";
    fs::path labels = root / "labels.txt";
    require_file(edges);
    require_file(features);
    require_file(labels);

    Dataset ds;
    ds.name = dir_name(dir);
    ds.X = load_feature_matrix(features.string());
    ds.node_count = ds.X.nodes;
    if (ds.node_count == 0) throw LoadError(features.string() + ": empty feature matrix");

    EdgeStream es = load_edge_stream_file(edges.string());
    for (const EdgeEvent& ev : es.events) {
        if (ev.u >= ds.node_count || ev.v >= ds.node_count)
            throw LoadError(edges.string() + ": edge (" + std::to_string(ev.u) + ", " +
                            std::to_string(ev.v) + ") out of range for " +
                            std::to_string(ds.node_count) + " nodes");
    }
    ds.events = std::move(es.events);
    ds.labels = load_labels(labels, ds.node_count, ds.label_count);

    build_tracking(ds, build_schedule(ds.events.size(), ScheduleMode::Major, ScheduleParams{}),
                   seed, track_cap);
    return ds;
}

void build_tracking(Dataset& ds, const SnapshotSchedule& schedule, std::uint64_t seed,
                    std::size_t track_cap) {
    if (schedule.total_events() != ds.events.size())
        throw std::invalid_argument("schedule covers " + std::to_string(schedule.total_events()) +
                                    " events but the dataset has " +
                                    std::to_string(ds.events.size()));
    DynamicGraph g0(ds.node_count);
    for (std::size_t i = 0; i < schedule.base; ++i) g0.insert_edge(ds.events[i].u, ds.events[i].v);

    std::size_t classes = static_cast<std::size_t>(ds.label_count);
    std::vector<std::vector<NodeId>> by_class(classes);
    std::size_t eligible = 0;
    for (NodeId i = 0; i < ds.node_count; ++i) {
        int l = ds.labels[i];
        if (l >= 0 && g0.degree(i) > 0) {
            by_class[static_cast<std::size_t>(l)].push_back(i);
            ++eligible;
        }
    }
    for (std::size_t c = 0; c < classes; ++c)
        if (by_class[c].size() < 3)
            throw LoadError(ds.name + ": class " + std::to_string(c) + " has only " +
                            std::to_string(by_class[c].size()) +
                            " labeled non-dangling nodes in the base graph (needs 3 for splits)");
    if (track_cap < 3 * classes)
        throw std::invalid_argument("track cap " + std::to_string(track_cap) +
                                    " cannot cover 3 nodes per class for " +
                                    std::to_string(classes) + " classes");

    // Proportional quotas, clamped to [3, class size], then repaired to sum
    // to the target by moving single slots; deterministic tie-break on index.
    std::size_t want = std::min(track_cap, eligible);
    std::vector<std::size_t> quota(classes);
    std::size_t total = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        std::size_t q = want * by_class[c].size() / eligible;
        quota[c] = std::min(by_class[c].size(), std::max<std::size_t>(3, q));
        total += quota[c];
    }
    while (total > want) {
        std::size_t pick = classes;
        for (std::size_t c = 0; c < classes; ++c)
            if (quota[c] > 3 && (pick == classes || quota[c] > quota[pick])) pick = c;
        if (pick == classes) break;
        --quota[pick];
        --total;
    }
    while (total < want) {
        std::size_t pick = classes;
        for (std::size_t c = 0; c < classes; ++c)
            if (quota[c] < by_class[c].size() && (pick == classes || quota[c] < quota[pick]))
                pick = c;
        if (pick == classes)
            throw InternalInconsistencyError("tracking quota repair ran out of capacity");
        ++quota[pick];
        ++total;
    }

    ds.tracked.clear();
    ds.splits.train.clear();
    ds.splits.dev.clear();
    ds.splits.test.clear();
    for (std::size_t c = 0; c < classes; ++c) {
        std::vector<NodeId>& pool = by_class[c];
        Rng rng(mix_seed(seed, 0x7472ULL, static_cast<std::uint64_t>(c)));
        rng.shuffle(pool);
        std::size_t q = quota[c];
        std::size_t n_test = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                          std::llround(0.2 * static_cast<double>(q))));
        std::size_t n_dev = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                         std::llround(0.1 * static_cast<double>(q))));
        std::size_t n_train = q - n_test - n_dev;
        for (std::size_t i = 0; i < q; ++i) {
            NodeId node = pool[i];
            ds.tracked.push_back(node);
            if (i < n_train)
                ds.splits.train.push_back(node);
            else if (i < n_train + n_dev)
                ds.splits.dev.push_back(node);
            else
                ds.splits.test.push_back(node);
        }
    }
    std::sort(ds.tracked.begin(), ds.tracked.end());
    std::sort(ds.splits.train.begin(), ds.splits.train.end());
    std::sort(ds.splits.dev.begin(), ds.splits.dev.end());
    std::sort(ds.splits.test.begin(), ds.splits.test.end());
}

NoiseConfig make_noise_config(const FeatureMatrix& X, double lambda_base, std::uint64_t seed) {
    if (lambda_base < 0.0 || lambda_base > 1.0)
        throw std::invalid_argument("lambda_base must lie in [0, 1]");
    NoiseConfig cfg;
    cfg.lambda_base = lambda_base;
    cfg.seed = seed;
    double n = static_cast<double>(X.data.size());
    if (n > 0.0) {
        double sum = 0.0;
        for (float v : X.data) sum += static_cast<double>(v);
        cfg.mu = sum / n;
        double ss = 0.0;
        for (float v : X.data) {
            double d = static_cast<double>(v) - cfg.mu;
            ss += d * d;
        }
        cfg.sigma = std::sqrt(ss / n);
    }
    return cfg;
}

double noise_lambda(std::size_t t, std::size_t T, const NoiseConfig& cfg) {
    double frac = (T == 0) ? 1.0 : static_cast<double>(t) / static_cast<double>(T);
    return std::clamp(frac + cfg.lambda_base, 0.0, 1.0);
}

FeatureMatrix apply_noise(const FeatureMatrix& X, std::size_t t, std::size_t T,
                          const NoiseConfig& cfg) {
    if (t > T) throw std::invalid_argument("snapshot index past the schedule");
    FeatureMatrix out = X;
    double lam = noise_lambda(t, T, cfg);
    if (lam >= 1.0) return out;
    Rng rng(mix_seed(cfg.seed, 0x6e6fULL, static_cast<std::uint64_t>(t)));
    for (float& v : out.data)
        v = static_cast<float>(lam * static_cast<double>(v) +
                               (1.0 - lam) * (cfg.mu + cfg.sigma * rng.normal()));
    return out;
}

} // namespace pprdyn
