#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pprdyn/embedding.hpp"
#include "pprdyn/graph.hpp"
#include "pprdyn/mlp.hpp"

namespace pprdyn {

// A labeled edge stream with node features. labels[i] == -1 marks an
// unlabeled node; label ids are dense in [0, label_count). tracked holds the
// sources whose PPR vectors the harness maintains; it and the splits are
// derived from the base graph of a schedule and contain only labeled nodes
// that are non-dangling there.
struct Dataset {
    std::string name;
    std::size_t node_count = 0;
    std::vector<EdgeEvent> events;
    FeatureMatrix X;
    std::vector<int> labels;
    int label_count = 0;
    std::vector<NodeId> tracked;
    SplitSpec splits;

    std::size_t feature_dim() const { return X.dim; }
    std::size_t edge_count() const { return events.size(); }
};

// Reads edges.txt, features.bin and labels.txt from dir; the dataset name is
// the directory basename. Node count comes from the feature matrix; edge
// endpoints and label ids are validated against it and the label set must be
// gap-free. Tracking is initialized for the default major schedule; call
// build_tracking to re-derive it for another schedule.
Dataset load_dataset(const std::string& dir, std::uint64_t seed = 1,
                     std::size_t track_cap = 1000);

// Selects min(track_cap, #eligible) labeled nodes that are non-dangling in
// the schedule's base graph, stratified by label, then splits them 70/10/20
// per label so every label lands in every part. Deterministic per seed.
void build_tracking(Dataset& ds, const SnapshotSchedule& schedule,
                    std::uint64_t seed, std::size_t track_cap = 1000);

// Element-wise mix of the features toward Gaussian noise, heaviest at the
// first snapshot: lambda_t = clamp(t/T + lambda_base, 0, 1) and
// x_hat = lambda_t * x + (1 - lambda_t) * N(mu, sigma^2). mu and sigma are
// the moments of the clean feature matrix, computed once and reused for
// every snapshot.
struct NoiseConfig {
    double lambda_base = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    std::uint64_t seed = 1;
};

NoiseConfig make_noise_config(const FeatureMatrix& X, double lambda_base,
                              std::uint64_t seed);

double noise_lambda(std::size_t t, std::size_t T, const NoiseConfig& cfg);

// Deterministic per (cfg.seed, t); a lambda of one returns X unchanged.
FeatureMatrix apply_noise(const FeatureMatrix& X, std::size_t t, std::size_t T,
                          const NoiseConfig& cfg);

} // namespace pprdyn
