#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pprdyn/common.hpp"
#include "pprdyn/ppr.hpp"

namespace pprdyn {

// Dense node attribute matrix, feature dimension d by node count n. Stored
// column-major so one node's attribute vector is contiguous.
struct FeatureMatrix {
    std::size_t dim = 0;
    std::size_t nodes = 0;
    std::vector<float> data;

    const float* col(std::size_t j) const { return data.data() + j * dim; }
    float at(std::size_t k, std::size_t j) const { return data[j * dim + k]; }
    void resize(std::size_t d, std::size_t n) {
        dim = d;
        nodes = n;
        data.assign(d * n, 0.0f);
    }
};

// Hash-compressed location signature of a PPR vector.
struct PositionalEncoding {
    std::vector<double> vec;
    std::uint64_t seed = 0;

    std::size_t dim() const { return vec.size(); }
};

enum class FusionMode { Additive, Concat, PeOnly, FeatOnly };

const char* fusion_mode_name(FusionMode mode);
FusionMode parse_fusion_mode(const std::string& name);   // invalid_argument on unknown

// Per-node representation pair plus the fusion rule the classifier applies.
// Additive fusion holds both halves: the learned mixing matrix lives in the
// classifier and maps pe into feature space before the sum.
struct EmbeddingBundle {
    std::vector<double> h;
    PositionalEncoding pe;
    FusionMode mode = FusionMode::Concat;

    // Length of the classifier input this bundle produces.
    std::size_t input_dim() const;
};

// Contextual aggregation h = X pi over the support of pi.
// Accumulates in double regardless of storage precision.
std::vector<double> aggregate(const FeatureMatrix& X, const PprVector& pi);

// Feature hashing of pi into d_pe buckets with an independent sign hash.
PositionalEncoding hash_reduce(const PprVector& pi, std::size_t d_pe, std::uint64_t seed);

// Sparse random projection: entries of R drawn per (row, node) from
// {+sqrt(3): 1/6, 0: 2/3, -sqrt(3): 1/6}, never materialized; the output is
// scaled by 1/sqrt(d_pe) so distances are preserved in expectation.
PositionalEncoding sparse_random_project(const PprVector& pi, std::size_t d_pe,
                                         std::uint64_t seed);

// 512 for large graphs, min(n, 256) below ten thousand nodes.
std::size_t default_pe_dim(std::size_t n);

// Validates that the halves a mode consumes are present.
EmbeddingBundle bundle(std::vector<double> h, PositionalEncoding pe, FusionMode mode);

// Binary dense real matrix files: 16-byte header (magic "EMB1", u32 rows,
// u32 cols, u32 reserved), then row-major float32 payload.
struct DenseMatrixF {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;

    float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    float& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

void write_emb1(const std::string& path, std::size_t rows, std::size_t cols, const float* data);
DenseMatrixF read_emb1(const std::string& path);   // LoadError on bad files

// Matrix as rows = nodes plus a sidecar id list at <path>.ids, one per line.
void write_embeddings(const std::string& path, const DenseMatrixF& mat,
                      const std::vector<NodeId>& ids);

// Reads an EMB1 file of shape n x d into column-major storage, checking the
// expected node count (0 skips the check) and rejecting non-finite entries.
FeatureMatrix load_feature_matrix(const std::string& path, std::size_t expect_nodes = 0);

} // namespace pprdyn
