#pragma once

#include "hadfl/dataset.hpp"
#include "hadfl/param_vector.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hadfl {

enum class ModelKind { linear_regression, logistic_regression, mlp_1hidden };
enum class LossKind { squared_error, cross_entropy };

std::string_view to_string(ModelKind kind);
std::string_view to_string(LossKind loss);
ModelKind parse_model_kind(std::string_view text);
LossKind parse_loss_kind(std::string_view text);

// Parameter layout (row-major):
//   linear / logistic:  W[out x in], then b[out] when `bias`
//   mlp-1hidden (tanh): W1[hidden x in], b1[hidden], W2[out x hidden], b2[out]
// Cross-entropy uses a sigmoid for output_dim == 1 (labels 0/1) and softmax otherwise
// (label = class index). Squared error needs output_dim == 1 and is (z - y)^2 per sample.
struct ModelSpec {
    ModelKind kind = ModelKind::logistic_regression;
    std::size_t input_dim = 1;
    std::size_t hidden_dim = 0;
    std::size_t output_dim = 1;
    LossKind loss = LossKind::cross_entropy;
    bool bias = true;

    std::size_t param_count() const;
    void validate() const;
    bool is_classifier() const noexcept { return loss == LossKind::cross_entropy; }

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct HyperParams {
    double learning_rate = 0.01;
    std::size_t batch_size = 64;
    double warmup_lr = 0.001;

    void validate() const;
    friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

// Zeros for linear models; small seeded uniform values for the MLP so hidden units break symmetry.
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

// f(x_i, w) for one sample.
double sample_loss(const ParamVector& w, const ModelSpec& spec, const Sample& sample);

// (1/|batch|) sum of per-sample gradients.
ParamVector compute_gradient(const ParamVector& w, const ModelSpec& spec, std::span<const Sample> batch);

// w - lr * g.
ParamVector sgd_step(const ParamVector& w, const ParamVector& g, double lr);

// B indices drawn uniformly with replacement from [0, n).
std::vector<std::size_t> sample_batch_indices(std::size_t n, std::size_t batch_size, std::mt19937_64& rng);

struct TrainResult {
    ParamVector params;
    std::size_t steps_done = 0;
};

// Exactly `steps` mini-batch SGD iterations with hp.learning_rate. The batch generator is
// std::mt19937_64(rng_seed) consumed by sample_batch_indices once per step.
TrainResult local_train(const ParamVector& w, const ModelSpec& spec, const DataPartition& partition,
                        std::size_t steps, const HyperParams& hp, std::uint64_t rng_seed);

// Iterations in one local epoch: ceil(n_k / B).
std::size_t iterations_per_epoch(std::size_t n_k, std::size_t batch_size);

struct EvalResult {
    double loss = 0.0;
    // Fraction correct for classifiers, 0 for regression.
    double accuracy = 0.0;
};

// Mean per-sample loss and accuracy. Exact prediction ties are broken by a hash of the
// sample index, so the result stays a pure function of its inputs.
EvalResult evaluate(const ParamVector& w, const ModelSpec& spec, std::span<const Sample> data);

}  // namespace hadfl
