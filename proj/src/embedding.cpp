#include "pprdyn/embedding.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "pprdyn/rng.hpp"

namespace pprdyn {

const char* fusion_mode_name(FusionMode mode) {
    switch (mode) {
        case FusionMode::Additive: return "additive";
        case FusionMode::Concat: return "concat";
        case FusionMode::PeOnly: return "pe_only";
        case FusionMode::FeatOnly: return "feat_only";
    }
    return "?";
}

FusionMode parse_fusion_mode(const std::string& name) {
    if (name == "additive") return FusionMode::Additive;
    if (name == "concat") return FusionMode::Concat;
    if (name == "pe_only") return FusionMode::PeOnly;
    if (name == "feat_only") return FusionMode::FeatOnly;
    throw std::invalid_argument("unknown fusion mode: " + name);
}

std::size_t EmbeddingBundle::input_dim() const {
    switch (mode) {
        case FusionMode::Additive: return h.size();
        case FusionMode::Concat: return h.size() + pe.dim();
        case FusionMode::PeOnly: return pe.dim();
        case FusionMode::FeatOnly: return h.size();
    }
    return 0;
}

std::vector<double> aggregate(const FeatureMatrix& X, const PprVector& pi) {
    std::vector<double> h(X.dim, 0.0);
    const SparseVec& e = pi.entries;
    if (!e.empty() && e.idx.back() >= X.nodes)
        throw std::invalid_argument("aggregate: node id " + std::to_string(e.idx.back()) +
                                    " outside feature matrix with " + std::to_string(X.nodes) +
                                    " columns");
    for (std::size_t k = 0; k < e.size(); ++k) {
        double w = e.val[k];
        const float* colp = X.col(e.idx[k]);
        for (std::size_t f = 0; f < X.dim; ++f) h[f] += w * static_cast<double>(colp[f]);
    }
    return h;
}

PositionalEncoding hash_reduce(const PprVector& pi, std::size_t d_pe, std::uint64_t seed) {
    if (d_pe == 0) throw std::invalid_argument("d_pe must be positive");
    PositionalEncoding out;
    out.seed = seed;
    out.vec.assign(d_pe, 0.0);
    std::uint64_t bucket_seed = mix_seed(seed, 1);
    std::uint64_t sign_seed = mix_seed(seed, 2);
    const SparseVec& e = pi.entries;
    for (std::size_t k = 0; k < e.size(); ++k) {
        std::uint64_t j = e.idx[k];
        std::size_t bucket = static_cast<std::size_t>(mix_seed(bucket_seed, j) % d_pe);
        double sign = (mix_seed(sign_seed, j) & 1) ? 1.0 : -1.0;
        out.vec[bucket] += sign * e.val[k];
    }
    return out;
}

PositionalEncoding sparse_random_project(const PprVector& pi, std::size_t d_pe,
                                         std::uint64_t seed) {
    if (d_pe == 0) throw std::invalid_argument("d_pe must be positive");
    PositionalEncoding out;
    out.seed = seed;
    out.vec.assign(d_pe, 0.0);
    const double pos = std::sqrt(3.0) / std::sqrt(static_cast<double>(d_pe));
    const SparseVec& e = pi.entries;
    for (std::size_t k = 0; k < e.size(); ++k) {
        std::uint64_t node_stream = mix_seed(seed, e.idx[k]);
        double v = e.val[k];
        for (std::size_t row = 0; row < d_pe; ++row) {
            switch (splitmix64(node_stream + row) % 6) {
                case 0: out.vec[row] += pos * v; break;
                case 1: out.vec[row] -= pos * v; break;
                default: break;
            }
        }
    }
    return out;
}

std::size_t default_pe_dim(std::size_t n) {
    if (n >= 10000) return 512;
    return std::min<std::size_t>(n, 256);
}

EmbeddingBundle bundle(std::vector<double> h, PositionalEncoding pe, FusionMode mode) {
    bool needs_h = mode != FusionMode::PeOnly;
    bool needs_pe = mode != FusionMode::FeatOnly;
    if (needs_h && h.empty())
        throw std::invalid_argument(std::string(fusion_mode_name(mode)) +
                                    " fusion requires aggregated features");
    if (needs_pe && pe.vec.empty())
        throw std::invalid_argument(std::string(fusion_mode_name(mode)) +
                                    " fusion requires a positional encoding");
    EmbeddingBundle out;
    out.h = std::move(h);
    out.pe = std::move(pe);
    out.mode = mode;
    return out;
}

// ---- EMB1 io ----

namespace {
constexpr char kEmbMagic[4] = {'E', 'M', 'B', '1'};
}

void write_emb1(const std::string& path, std::size_t rows, std::size_t cols, const float* data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot write matrix file: " + path);
    std::uint32_t r = static_cast<std::uint32_t>(rows);
    std::uint32_t c = static_cast<std::uint32_t>(cols);
    std::uint32_t reserved = 0;
    out.write(kEmbMagic, 4);
    out.write(reinterpret_cast<const char*>(&r), 4);
    out.write(reinterpret_cast<const char*>(&c), 4);
    out.write(reinterpret_cast<const char*>(&reserved), 4);
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(sizeof(float) * rows * cols));
    if (!out) throw LoadError("short write on matrix file: " + path);
}

DenseMatrixF read_emb1(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open matrix file: " + path);
    char magic[4];
    std::uint32_t r = 0, c = 0, reserved = 0;
    if (!in.read(magic, 4) || std::memcmp(magic, kEmbMagic, 4) != 0)
        throw LoadError("bad matrix magic in " + path);
    if (!in.read(reinterpret_cast<char*>(&r), 4) || !in.read(reinterpret_cast<char*>(&c), 4) ||
        !in.read(reinterpret_cast<char*>(&reserved), 4))
        throw LoadError("truncated matrix header in " + path);
    DenseMatrixF mat;
    mat.rows = r;
    mat.cols = c;
    mat.data.resize(static_cast<std::size_t>(r) * c);
    if (!in.read(reinterpret_cast<char*>(mat.data.data()),
                 static_cast<std::streamsize>(sizeof(float) * mat.data.size())))
        throw LoadError("truncated matrix payload in " + path);
    return mat;
}

void write_embeddings(const std::string& path, const DenseMatrixF& mat,
                      const std::vector<NodeId>& ids) {
    if (ids.size() != mat.rows)
        throw std::invalid_argument("id sidecar length does not match matrix rows");
    write_emb1(path, mat.rows, mat.cols, mat.data.data());
    std::ofstream out(path + ".ids");
    if (!out) throw LoadError("cannot write id sidecar: " + path + ".ids");
    for (NodeId id : ids) out << id << "\n";
}

FeatureMatrix load_feature_matrix(const std::string& path, std::size_t expect_nodes) {
    DenseMatrixF raw = read_emb1(path);
    if (expect_nodes != 0 && raw.rows != expect_nodes)
        throw LoadError("feature matrix has " + std::to_string(raw.rows) + " rows, expected " +
                        std::to_string(expect_nodes));
    for (float v : raw.data)
        if (!std::isfinite(v)) throw LoadError("non-finite feature entry in " + path);
    FeatureMatrix X;
    X.resize(raw.cols, raw.rows);
    for (std::size_t node = 0; node < raw.rows; ++node)
        for (std::size_t f = 0; f < raw.cols; ++f) X.data[node * X.dim + f] = raw.at(node, f);
    return X;
}

} // namespace pprdyn
