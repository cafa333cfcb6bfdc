#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pprdyn/common.hpp"
#include "pprdyn/rng.hpp"

namespace pprdyn {

// Row-major training matrix with one label per row.
struct SampleSet {
    std::size_t dim = 0;
    std::vector<double> X;
    std::vector<int> y;

    std::size_t count() const { return y.size(); }
    const double* row(std::size_t i) const { return X.data() + i * dim; }
    void push(const double* x, int label) {
        X.insert(X.end(), x, x + dim);
        y.push_back(label);
    }
};

struct TrainConfig {
    int epochs = 250;
    double learning_rate = 1e-3;
    double dropout = 0.15;
    std::size_t batch_size = 512;          // applies above the full-batch limit
    std::size_t full_batch_limit = 4096;
    std::uint64_t seed = 0;

    void validate() const;
};

// Train/dev/test node id lists in 70/10/20 proportions, stratified so every
// label appears in every split. Construction lives with the dataset code.
struct SplitSpec {
    std::vector<NodeId> train, dev, test;
};

// Rectifier MLP with per-block dropout. When pe_dim > 0 the raw input is the
// pair [features | encoding] and the first layer consumes
// features + mix * encoding with a learned mix matrix.
class MlpModel {
public:
    std::vector<std::size_t> dims;          // [in, hidden..., labels]
    std::vector<std::vector<double>> W;     // row-major dims[l+1] x dims[l]
    std::vector<std::vector<double>> b;
    std::size_t pe_dim = 0;
    std::vector<double> W_pe;               // dims[0] x pe_dim when pe_dim > 0
    std::uint64_t seed = 0;
    Rng dropout_rng{0};

    std::size_t label_count() const { return dims.back(); }
    // Length of the expected raw input row.
    std::size_t input_dim() const { return dims.front() + pe_dim; }
    std::size_t parameter_count() const;
};

// Uniform init centered at zero, half-width 1/sqrt(fan_in); biases zero.
MlpModel init_mlp(const std::vector<std::size_t>& dims, std::uint64_t seed);
MlpModel init_mlp_additive(const std::vector<std::size_t>& dims, std::size_t pe_dim,
                           std::uint64_t seed);

// Deterministic inference-mode logits.
std::vector<double> forward_eval(const MlpModel& model, const double* x);
// Applies inverted dropout from the model's mask stream.
std::vector<double> forward_train(MlpModel& model, const double* x, double dropout);

// Mean cross-entropy of eval-mode predictions.
double mean_loss(const MlpModel& model, const SampleSet& data);

struct TrainResult {
    std::vector<double> loss_trace;   // per-epoch mean training loss
    int best_epoch = -1;              // epoch whose dev score was kept
    double best_dev_accuracy = 0.0;
};

// Runs the full epoch budget with Adam-style moment updates, then restores
// the dev-best parameters (final parameters when dev is empty). Throws
// DivergenceError when the loss leaves the reals.
TrainResult train_mlp(MlpModel& model, const SampleSet& train, const SampleSet& dev,
                      const TrainConfig& cfg);

struct EvalResult {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
};

EvalResult evaluate(const MlpModel& model, const SampleSet& data);

// All parameters (then all gradients) flattened as W0,b0,W1,b1,...,mix.
std::vector<double> flat_parameters(const MlpModel& model);
void set_flat_parameters(MlpModel& model, const std::vector<double>& params);
std::vector<double> flat_gradient(const MlpModel& model, const double* x, int label);

// Central-difference audit of the analytic gradient on 50 parameters chosen
// deterministically from the model seed; returns the worst relative error.
double grad_check(const MlpModel& model, const double* x, int label);

// Checkpoint io (magic "MLP1"). The dropout stream restarts from the seed.
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

} // namespace pprdyn
