#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pprdyn/dataset.hpp"
#include "pprdyn/embedding.hpp"
#include "pprdyn/graph.hpp"

namespace pprdyn {

// Knobs for the synthetic corpus. Graphs arrive edge by edge: sources are
// uniform, targets stay homophilous and favor the source's own community,
// a small slice of its class; features are either a bag-of-words draw from
// per-class vocabulary ranges, Gaussian blobs around class means, or a
// one-hot class indicator.
struct SynthProfile {
    enum class Features { Bow, Blobs, OneHot };

    std::string name;
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::size_t dim = 0;
    int classes = 0;
    double homophily = 0.8;        // chance the second endpoint shares the class
    double attach_bias = 0.4;      // chance a homophilous target stays in the community
    int community_size = 0;        // members per community (0 = one community per class)
    int words_per_node = 20;       // bag-of-words draws per node
    double class_word_frac = 0.5;  // chance a draw comes from the class range
    Features features = Features::Bow;
    bool paired = false;           // emit disjoint pairs instead of sampling
};

// Named profiles: cora, citeseer, blobs, k2.
SynthProfile synth_profile(const std::string& name);

struct GeneratedDataset {
    std::vector<EdgeEvent> events;
    DenseMatrixF features;  // node rows, feature columns
    std::vector<int> labels;
};

GeneratedDataset generate(const SynthProfile& profile, std::uint64_t seed);

// Writes edges.txt, features.bin and labels.txt under dir, creating it.
void write_dataset(const std::string& dir, const GeneratedDataset& gen);

// In-memory equivalent of write_dataset + load_dataset, without tracking.
Dataset to_dataset(const GeneratedDataset& gen, const std::string& name);

} // namespace pprdyn
