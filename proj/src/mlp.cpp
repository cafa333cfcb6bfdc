#include "pprdyn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace pprdyn {

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be nonnegative");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
    if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
}

std::size_t MlpModel::parameter_count() const {
    std::size_t total = W_pe.size();
    for (std::size_t l = 0; l < W.size(); ++l) total += W[l].size() + b[l].size();
    return total;
}

namespace {

void check_dims(const std::vector<std::size_t>& dims) {
    if (dims.size() < 2) throw std::invalid_argument("need at least input and output widths");
    for (std::size_t d : dims)
        if (d == 0) throw std::invalid_argument("zero-width layer");
}

void fill_uniform(std::vector<double>& w, std::size_t fan_in, Rng& rng) {
    double half = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : w) v = rng.uniform(-half, half);
}

// Parameter tensors in flattening order: W0, b0, W1, b1, ..., mix.
template <class Model>
auto param_spans(Model& m) {
    using Ptr = decltype(m.W[0].data());
    std::vector<std::pair<Ptr, std::size_t>> spans;
    for (std::size_t l = 0; l < m.W.size(); ++l) {
        spans.emplace_back(m.W[l].data(), m.W[l].size());
        spans.emplace_back(m.b[l].data(), m.b[l].size());
    }
    if (m.pe_dim > 0) spans.emplace_back(m.W_pe.data(), m.W_pe.size());
    return spans;
}

struct Scratch {
    std::vector<std::vector<double>> act;    // act[0] = fused input, act[L] = logits
    std::vector<std::vector<double>> mask;   // dropout scale per hidden layer
    std::vector<std::vector<double>> delta;  // backprop buffers per layer output

    void ensure(const MlpModel& m) {
        std::size_t layers = m.W.size();
        act.resize(layers + 1);
        mask.resize(layers);
        delta.resize(layers + 1);
        act[0].resize(m.dims[0]);
        delta[0].resize(m.dims[0]);
        for (std::size_t l = 0; l < layers; ++l) {
            act[l + 1].resize(m.dims[l + 1]);
            delta[l + 1].resize(m.dims[l + 1]);
            mask[l].assign(m.dims[l + 1], 1.0);
        }
    }
};

void fuse_input(const MlpModel& m, const double* x, std::vector<double>& fused) {
    std::size_t d = m.dims[0];
    std::copy(x, x + d, fused.begin());
    if (m.pe_dim == 0) return;
    const double* pe = x + d;
    for (std::size_t f = 0; f < d; ++f) {
        const double* row = m.W_pe.data() + f * m.pe_dim;
        double acc = 0.0;
        for (std::size_t q = 0; q < m.pe_dim; ++q) acc += row[q] * pe[q];
        fused[f] += acc;
    }
}

// Forward through all layers. rng non-null applies inverted dropout to
// hidden activations and records the masks for backward.
void forward_pass(const MlpModel& m, const double* x, Scratch& s, Rng* rng, double p) {
    fuse_input(m, x, s.act[0]);
    std::size_t layers = m.W.size();
    for (std::size_t l = 0; l < layers; ++l) {
        const std::vector<double>& a = s.act[l];
        std::vector<double>& z = s.act[l + 1];
        std::size_t in = m.dims[l], out = m.dims[l + 1];
        for (std::size_t o = 0; o < out; ++o) {
            const double* row = m.W[l].data() + o * in;
            double acc = m.b[l][o];
            for (std::size_t i = 0; i < in; ++i) acc += row[i] * a[i];
            z[o] = acc;
        }
        if (l + 1 == layers) break;   // logits stay linear
        if (rng != nullptr && p > 0.0) {
            double keep_scale = 1.0 / (1.0 - p);
            for (std::size_t o = 0; o < out; ++o) {
                double mk = (rng->uniform() < p) ? 0.0 : keep_scale;
                s.mask[l][o] = mk;
                z[o] = (z[o] > 0.0) ? z[o] * mk : 0.0;
            }
        } else {
            for (std::size_t o = 0; o < out; ++o) {
                s.mask[l][o] = 1.0;
                if (z[o] < 0.0) z[o] = 0.0;
            }
        }
    }
}

// Cross-entropy of the logits in s.act.back() against label; fills the
// softmax-minus-onehot delta for backward.
double softmax_loss(const std::vector<double>& logits, int label, std::vector<double>& delta) {
    double zmax = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double z : logits) denom += std::exp(z - zmax);
    for (std::size_t k = 0; k < logits.size(); ++k) delta[k] = std::exp(logits[k] - zmax) / denom;
    delta[static_cast<std::size_t>(label)] -= 1.0;
    return std::log(denom) + zmax - logits[static_cast<std::size_t>(label)];
}

// Accumulates dLoss/dParams into grads (flat layout of param_spans).
void backward_pass(const MlpModel& m, const double* x, Scratch& s, std::vector<double>& grads) {
    std::size_t layers = m.W.size();
    // Flat offsets per tensor mirror param_spans order.
    std::size_t off = 0;
    std::vector<std::size_t> w_off(layers), b_off(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        w_off[l] = off;
        off += m.W[l].size();
        b_off[l] = off;
        off += m.b[l].size();
    }
    std::size_t pe_off = off;

    for (std::size_t l = layers; l-- > 0;) {
        std::size_t in = m.dims[l], out = m.dims[l + 1];
        const std::vector<double>& a = s.act[l];
        std::vector<double>& d_out = s.delta[l + 1];
        double* gW = grads.data() + w_off[l];
        double* gb = grads.data() + b_off[l];
        for (std::size_t o = 0; o < out; ++o) {
            double dv = d_out[o];
            if (dv == 0.0) continue;
            double* row = gW + o * in;
            for (std::size_t i = 0; i < in; ++i) row[i] += dv * a[i];
            gb[o] += dv;
        }
        bool need_input_delta = l > 0 || m.pe_dim > 0;
        if (!need_input_delta) continue;
        std::vector<double>& d_in = s.delta[l];
        std::fill(d_in.begin(), d_in.end(), 0.0);
        for (std::size_t o = 0; o < out; ++o) {
            double dv = d_out[o];
            if (dv == 0.0) continue;
            const double* row = m.W[l].data() + o * in;
            for (std::size_t i = 0; i < in; ++i) d_in[i] += row[i] * dv;
        }
        if (l > 0) {
            // Through dropout and the rectifier: post-activation > 0 exactly
            // when the unit was kept and its pre-activation was positive.
            for (std::size_t i = 0; i < in; ++i)
                d_in[i] = (a[i] > 0.0) ? d_in[i] * s.mask[l - 1][i] : 0.0;
        }
    }
    if (m.pe_dim > 0) {
        const double* pe = x + m.dims[0];
        double* gpe = grads.data() + pe_off;
        const std::vector<double>& d_fused = s.delta[0];
        for (std::size_t f = 0; f < m.dims[0]; ++f) {
            double dv = d_fused[f];
            if (dv == 0.0) continue;
            double* row = gpe + f * m.pe_dim;
            for (std::size_t q = 0; q < m.pe_dim; ++q) row[q] += dv * pe[q];
        }
    }
}

double ce_loss_eval(const MlpModel& m, const double* x, int label) {
    std::vector<double> logits = forward_eval(m, x);
    std::vector<double> delta(logits.size());
    return softmax_loss(logits, label, delta);
}

void check_input(const MlpModel& m, std::size_t dim) {
    if (dim != m.input_dim())
        throw std::invalid_argument("input length " + std::to_string(dim) + " does not match model input " +
                                    std::to_string(m.input_dim()));
}

void check_labels(const MlpModel& m, const SampleSet& data) {
    for (int label : data.y)
        if (label < 0 || static_cast<std::size_t>(label) >= m.label_count())
            throw std::invalid_argument("label " + std::to_string(label) + " outside model range");
}

} // namespace

MlpModel init_mlp(const std::vector<std::size_t>& dims, std::uint64_t seed) {
    return init_mlp_additive(dims, 0, seed);
}

MlpModel init_mlp_additive(const std::vector<std::size_t>& dims, std::size_t pe_dim,
                           std::uint64_t seed) {
    check_dims(dims);
    MlpModel m;
    m.dims = dims;
    m.seed = seed;
    m.pe_dim = pe_dim;
    m.dropout_rng = Rng(mix_seed(seed, 0xd0));
    Rng wr(mix_seed(seed, 0x11));
    std::size_t layers = dims.size() - 1;
    m.W.resize(layers);
    m.b.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        m.W[l].resize(dims[l + 1] * dims[l]);
        m.b[l].assign(dims[l + 1], 0.0);
        fill_uniform(m.W[l], dims[l], wr);
    }
    if (pe_dim > 0) {
        m.W_pe.resize(dims[0] * pe_dim);
        fill_uniform(m.W_pe, pe_dim, wr);
    }
    return m;
}

std::vector<double> forward_eval(const MlpModel& model, const double* x) {
    Scratch s;
    s.ensure(model);
    forward_pass(model, x, s, nullptr, 0.0);
    return s.act.back();
}

std::vector<double> forward_train(MlpModel& model, const double* x, double dropout) {
    if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
    Scratch s;
    s.ensure(model);
    forward_pass(model, x, s, &model.dropout_rng, dropout);
    return s.act.back();
}

double mean_loss(const MlpModel& model, const SampleSet& data) {
    check_input(model, data.dim);
    check_labels(model, data);
    double total = 0.0;
    for (std::size_t i = 0; i < data.count(); ++i) total += ce_loss_eval(model, data.row(i), data.y[i]);
    return data.count() ? total / static_cast<double>(data.count()) : 0.0;
}

TrainResult train_mlp(MlpModel& model, const SampleSet& train, const SampleSet& dev,
                      const TrainConfig& cfg) {
    cfg.validate();
    check_input(model, train.dim);
    check_labels(model, train);
    if (dev.count() > 0) {
        check_input(model, dev.dim);
        check_labels(model, dev);
    }
    if (train.count() == 0) throw std::invalid_argument("empty training set");

    std::size_t n = train.count();
    std::size_t batch = n <= cfg.full_batch_limit ? n : cfg.batch_size;
    bool minibatch = batch < n;

    auto spans = param_spans(model);
    std::size_t total_params = model.parameter_count();
    std::vector<double> grads(total_params, 0.0);
    std::vector<double> m1(total_params, 0.0), m2(total_params, 0.0);
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    double b1t = 1.0, b2t = 1.0;

    model.dropout_rng = Rng(mix_seed(cfg.seed, model.seed, 0xd1));
    Rng shuffle_rng(mix_seed(cfg.seed, model.seed, 0x5f));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    Scratch s;
    s.ensure(model);

    TrainResult result;
    std::vector<double> best_params;
    double best_acc = -1.0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (minibatch) shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            std::size_t stop = std::min(n, start + batch);
            std::fill(grads.begin(), grads.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t k = start; k < stop; ++k) {
                const double* x = train.row(order[k]);
                int label = train.y[order[k]];
                forward_pass(model, x, s, cfg.dropout > 0.0 ? &model.dropout_rng : nullptr,
                             cfg.dropout);
                batch_loss += softmax_loss(s.act.back(), label, s.delta.back());
                backward_pass(model, x, s, grads);
            }
            if (!std::isfinite(batch_loss)) throw DivergenceError(epoch);
            epoch_loss += batch_loss;

            double inv = 1.0 / static_cast<double>(stop - start);
            b1t *= beta1;
            b2t *= beta2;
            std::size_t off = 0;
            for (auto& [ptr, len] : spans) {
                for (std::size_t i = 0; i < len; ++i) {
                    double g = grads[off + i] * inv;
                    double& mm = m1[off + i];
                    double& vv = m2[off + i];
                    mm = beta1 * mm + (1.0 - beta1) * g;
                    vv = beta2 * vv + (1.0 - beta2) * g * g;
                    double mhat = mm / (1.0 - b1t);
                    double vhat = vv / (1.0 - b2t);
                    ptr[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + adam_eps);
                }
                off += len;
            }
        }
        result.loss_trace.push_back(epoch_loss / static_cast<double>(n));

        if (dev.count() > 0) {
            double acc = evaluate(model, dev).accuracy;
            if (acc > best_acc) {
                best_acc = acc;
                result.best_epoch = epoch;
                best_params = flat_parameters(model);
            }
        }
    }

    if (dev.count() > 0) {
        set_flat_parameters(model, best_params);
        result.best_dev_accuracy = best_acc;
    } else {
        result.best_epoch = cfg.epochs - 1;
        result.best_dev_accuracy = 0.0;
    }
    return result;
}

EvalResult evaluate(const MlpModel& model, const SampleSet& data) {
    check_input(model, data.dim);
    check_labels(model, data);
    EvalResult out;
    if (data.count() == 0) return out;
    std::size_t labels = model.label_count();
    std::vector<std::size_t> tp(labels, 0), fp(labels, 0), fn(labels, 0);
    std::size_t correct = 0;
    Scratch s;
    s.ensure(model);
    for (std::size_t i = 0; i < data.count(); ++i) {
        forward_pass(model, data.row(i), s, nullptr, 0.0);
        const std::vector<double>& logits = s.act.back();
        std::size_t pred = 0;
        for (std::size_t k = 1; k < logits.size(); ++k)
            if (logits[k] > logits[pred]) pred = k;
        std::size_t truth = static_cast<std::size_t>(data.y[i]);
        if (pred == truth) {
            ++correct;
            ++tp[truth];
        } else {
            ++fp[pred];
            ++fn[truth];
        }
    }
    out.accuracy = static_cast<double>(correct) / static_cast<double>(data.count());
    double f1_sum = 0.0;
    for (std::size_t c = 0; c < labels; ++c) {
        std::size_t denom = 2 * tp[c] + fp[c] + fn[c];
        f1_sum += denom ? 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom) : 0.0;
    }
    out.macro_f1 = f1_sum / static_cast<double>(labels);
    return out;
}

std::vector<double> flat_parameters(const MlpModel& model) {
    auto spans = param_spans(model);
    std::vector<double> out;
    out.reserve(model.parameter_count());
    for (auto& [ptr, len] : spans) out.insert(out.end(), ptr, ptr + len);
    return out;
}

void set_flat_parameters(MlpModel& model, const std::vector<double>& params) {
    if (params.size() != model.parameter_count())
        throw std::invalid_argument("parameter vector length mismatch");
    auto spans = param_spans(model);
    std::size_t off = 0;
    for (auto& [ptr, len] : spans) {
        std::copy(params.begin() + off, params.begin() + off + len, ptr);
        off += len;
    }
}

std::vector<double> flat_gradient(const MlpModel& model, const double* x, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= model.label_count())
        throw std::invalid_argument("label outside model range");
    Scratch s;
    s.ensure(model);
    std::vector<double> grads(model.parameter_count(), 0.0);
    forward_pass(model, x, s, nullptr, 0.0);
    softmax_loss(s.act.back(), label, s.delta.back());
    backward_pass(model, x, s, grads);
    return grads;
}

double grad_check(const MlpModel& model, const double* x, int label) {
    std::vector<double> analytic = flat_gradient(model, x, label);
    MlpModel probe = model;
    std::vector<double*> flat;
    for (auto& [ptr, len] : param_spans(probe))
        for (std::size_t i = 0; i < len; ++i) flat.push_back(ptr + i);

    Rng pick(mix_seed(model.seed, 0x6c));
    const double h = 1e-4;
    double worst = 0.0;
    std::size_t samples = std::min<std::size_t>(50, flat.size());
    for (std::size_t k = 0; k < samples; ++k) {
        std::size_t idx = static_cast<std::size_t>(pick.below(flat.size()));
        double* p = flat[idx];
        double saved = *p;
        *p = saved + h;
        double up = ce_loss_eval(probe, x, label);
        *p = saved - h;
        double down = ce_loss_eval(probe, x, label);
        *p = saved;
        double numeric = (up - down) / (2.0 * h);
        double denom = std::max({std::fabs(numeric), std::fabs(analytic[idx]), 1e-6});
        worst = std::max(worst, std::fabs(numeric - analytic[idx]) / denom);
    }
    return worst;
}

// ---- checkpoint io ----

namespace {
constexpr char kMlpMagic[4] = {'M', 'L', 'P', '1'};

template <class T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void read_pod(std::ifstream& in, T& v, const std::string& path) {
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw LoadError("truncated model file: " + path);
}
} // namespace

void save_model(const MlpModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot write model file: " + path);
    out.write(kMlpMagic, 4);
    write_pod(out, static_cast<std::uint32_t>(model.dims.size()));
    for (std::size_t d : model.dims) write_pod(out, static_cast<std::uint64_t>(d));
    write_pod(out, static_cast<std::uint64_t>(model.seed));
    write_pod(out, static_cast<std::uint64_t>(model.pe_dim));
    std::vector<double> params = flat_parameters(model);
    write_pod(out, static_cast<std::uint64_t>(params.size()));
    out.write(reinterpret_cast<const char*>(params.data()),
              static_cast<std::streamsize>(sizeof(double) * params.size()));
    if (!out) throw LoadError("short write on model file: " + path);
}

MlpModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open model file: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMlpMagic, 4) != 0)
        throw LoadError("bad model magic in " + path);
    std::uint32_t ndims = 0;
    read_pod(in, ndims, path);
    if (ndims < 2 || ndims > 64) throw LoadError("implausible layer count in " + path);
    std::vector<std::size_t> dims(ndims);
    for (auto& d : dims) {
        std::uint64_t v = 0;
        read_pod(in, v, path);
        d = static_cast<std::size_t>(v);
    }
    std::uint64_t seed = 0, pe_dim = 0, plen = 0;
    read_pod(in, seed, path);
    read_pod(in, pe_dim, path);
    read_pod(in, plen, path);
    MlpModel m = init_mlp_additive(dims, static_cast<std::size_t>(pe_dim), seed);
    if (plen != m.parameter_count()) throw LoadError("parameter count mismatch in " + path);
    std::vector<double> params(plen);
    if (!in.read(reinterpret_cast<char*>(params.data()),
                 static_cast<std::streamsize>(sizeof(double) * plen)))
        throw LoadError("truncated model file: " + path);
    set_flat_parameters(m, params);
    return m;
}

} // namespace pprdyn
