#include "hadfl/model.hpp"

#include "hadfl/errors.hpp"
#include "hadfl/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hadfl {

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::linear_regression: return "linear-regression";
        case ModelKind::logistic_regression: return "logistic-regression";
        case ModelKind::mlp_1hidden: return "mlp-1hidden";
    }
    return "?";
}

std::string_view to_string(LossKind loss) {
    return loss == LossKind::squared_error ? "squared-error" : "cross-entropy";
}

ModelKind parse_model_kind(std::string_view text) {
    if (text == "linear-regression") return ModelKind::linear_regression;
    if (text == "logistic-regression") return ModelKind::logistic_regression;
    if (text == "mlp-1hidden") return ModelKind::mlp_1hidden;
    throw InvalidArgument("unknown model kind '" + std::string(text) + "'");
}

LossKind parse_loss_kind(std::string_view text) {
    if (text == "squared-error") return LossKind::squared_error;
    if (text == "cross-entropy") return LossKind::cross_entropy;
    throw InvalidArgument("unknown loss '" + std::string(text) + "'");
}

std::size_t ModelSpec::param_count() const {
    const std::size_t b = bias ? 1 : 0;
    if (kind == ModelKind::mlp_1hidden)
        return hidden_dim * input_dim + b * hidden_dim + output_dim * hidden_dim + b * output_dim;
    return output_dim * input_dim + b * output_dim;
}

void ModelSpec::validate() const {
    if (input_dim < 1) throw InvalidArgument("model: input_dim must be >= 1");
    if (output_dim < 1) throw InvalidArgument("model: output_dim must be >= 1");
    if (kind == ModelKind::mlp_1hidden && hidden_dim < 1)
        throw InvalidArgument("model: mlp-1hidden needs hidden_dim >= 1");
    if (loss == LossKind::squared_error && output_dim != 1)
        throw InvalidArgument("model: squared-error supports output_dim == 1 only");
    if (kind == ModelKind::logistic_regression && loss != LossKind::cross_entropy)
        throw InvalidArgument("model: logistic-regression requires cross-entropy loss");
    if (kind == ModelKind::linear_regression && loss != LossKind::squared_error)
        throw InvalidArgument("model: linear-regression requires squared-error loss");
}

void HyperParams::validate() const {
    if (!(learning_rate > 0.0)) throw InvalidArgument("hyper-params: learning_rate must be > 0");
    if (batch_size < 1) throw InvalidArgument("hyper-params: batch_size must be >= 1");
    if (!(warmup_lr > 0.0)) throw InvalidArgument("hyper-params: warmup_lr must be > 0");
    if (warmup_lr > learning_rate) throw InvalidArgument("hyper-params: warmup_lr must not exceed learning_rate");
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParamVector w(spec.param_count());
    if (spec.kind != ModelKind::mlp_1hidden) return w;
    std::mt19937_64 rng(seed);
    const double scale1 = 1.0 / std::sqrt(static_cast<double>(spec.input_dim));
    const double scale2 = 1.0 / std::sqrt(static_cast<double>(spec.hidden_dim));
    std::uniform_real_distribution<double> u1(-scale1, scale1);
    std::uniform_real_distribution<double> u2(-scale2, scale2);
    std::size_t i = 0;
    for (std::size_t k = 0; k < spec.hidden_dim * spec.input_dim; ++k) w[i++] = u1(rng);
    if (spec.bias) i += spec.hidden_dim;
    for (std::size_t k = 0; k < spec.output_dim * spec.hidden_dim; ++k) w[i++] = u2(rng);
    return w;
}

namespace {

// Offsets of each block inside the flat parameter vector.
struct Layout {
    std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
};

Layout layout_of(const ModelSpec& spec) {
    Layout l;
    if (spec.kind == ModelKind::mlp_1hidden) {
        l.w1 = 0;
        l.b1 = spec.hidden_dim * spec.input_dim;
        l.w2 = l.b1 + (spec.bias ? spec.hidden_dim : 0);
        l.b2 = l.w2 + spec.output_dim * spec.hidden_dim;
    } else {
        l.w1 = 0;
        l.b1 = spec.output_dim * spec.input_dim;
    }
    return l;
}

void check_inputs(const ParamVector& w, const ModelSpec& spec) {
    spec.validate();
    if (w.dim() != spec.param_count())
        throw InvalidArgument("model: parameter dimension " + std::to_string(w.dim()) + " does not match spec (" +
                              std::to_string(spec.param_count()) + ")");
}

void check_sample(const ModelSpec& spec, const Sample& s) {
    if (s.features.size() != spec.input_dim)
        throw InvalidArgument("model: sample has " + std::to_string(s.features.size()) + " features, spec expects " +
                              std::to_string(spec.input_dim));
    if (spec.loss == LossKind::cross_entropy) {
        if (spec.output_dim == 1) {
            if (s.label != 0.0 && s.label != 1.0) throw InvalidArgument("model: binary label must be 0 or 1");
        } else if (s.label < 0 || s.label >= static_cast<double>(spec.output_dim) ||
                   s.label != std::floor(s.label)) {
            throw InvalidArgument("model: class label out of range");
        }
    }
}

// Scratch buffers reused across samples.
struct Workspace {
    std::vector<double> hidden;
    std::vector<double> z;
    std::vector<double> dz;
    std::vector<double> dhidden;
};

void forward(const ParamVector& w, const ModelSpec& spec, const Layout& l, const Sample& s, Workspace& ws) {
    const auto& x = s.features;
    ws.z.assign(spec.output_dim, 0.0);
    if (spec.kind == ModelKind::mlp_1hidden) {
        ws.hidden.assign(spec.hidden_dim, 0.0);
        for (std::size_t h = 0; h < spec.hidden_dim; ++h) {
            double acc = spec.bias ? w[l.b1 + h] : 0.0;
            const double* row = &w.values()[l.w1 + h * spec.input_dim];
            for (std::size_t d = 0; d < spec.input_dim; ++d) acc += row[d] * x[d];
            ws.hidden[h] = std::tanh(acc);
        }
        for (std::size_t o = 0; o < spec.output_dim; ++o) {
            double acc = spec.bias ? w[l.b2 + o] : 0.0;
            const double* row = &w.values()[l.w2 + o * spec.hidden_dim];
            for (std::size_t h = 0; h < spec.hidden_dim; ++h) acc += row[h] * ws.hidden[h];
            ws.z[o] = acc;
        }
    } else {
        for (std::size_t o = 0; o < spec.output_dim; ++o) {
            double acc = spec.bias ? w[l.b1 + o] : 0.0;
            const double* row = &w.values()[l.w1 + o * spec.input_dim];
            for (std::size_t d = 0; d < spec.input_dim; ++d) acc += row[d] * x[d];
            ws.z[o] = acc;
        }
    }
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))); }

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Loss of the current forward pass; fills dz = dL/dz when `want_grad`.
double loss_and_dz(const ModelSpec& spec, const Sample& s, Workspace& ws, bool want_grad) {
    if (spec.loss == LossKind::squared_error) {
        const double r = ws.z[0] - s.label;
        if (want_grad) ws.dz.assign(1, 2.0 * r);
        return r * r;
    }
    if (spec.output_dim == 1) {
        const double z = ws.z[0];
        if (want_grad) ws.dz.assign(1, sigmoid(z) - s.label);
        return softplus(z) - s.label * z;
    }
    const auto label = static_cast<std::size_t>(s.label);
    const double zmax = *std::max_element(ws.z.begin(), ws.z.end());
    double sum = 0.0;
    for (const double z : ws.z) sum += std::exp(z - zmax);
    const double lse = zmax + std::log(sum);
    if (want_grad) {
        ws.dz.resize(spec.output_dim);
        for (std::size_t o = 0; o < spec.output_dim; ++o)
            ws.dz[o] = std::exp(ws.z[o] - lse) - (o == label ? 1.0 : 0.0);
    }
    return lse - ws.z[label];
}

void backward(const ParamVector& w, const ModelSpec& spec, const Layout& l, const Sample& s, Workspace& ws,
              std::vector<double>& grad) {
    const auto& x = s.features;
    if (spec.kind == ModelKind::mlp_1hidden) {
        ws.dhidden.assign(spec.hidden_dim, 0.0);
        for (std::size_t o = 0; o < spec.output_dim; ++o) {
            const double d = ws.dz[o];
            double* grow = &grad[l.w2 + o * spec.hidden_dim];
            const double* wrow = &w.values()[l.w2 + o * spec.hidden_dim];
            for (std::size_t h = 0; h < spec.hidden_dim; ++h) {
                grow[h] += d * ws.hidden[h];
                ws.dhidden[h] += d * wrow[h];
            }
            if (spec.bias) grad[l.b2 + o] += d;
        }
        for (std::size_t h = 0; h < spec.hidden_dim; ++h) {
            const double d = ws.dhidden[h] * (1.0 - ws.hidden[h] * ws.hidden[h]);
            double* grow = &grad[l.w1 + h * spec.input_dim];
            for (std::size_t dd = 0; dd < spec.input_dim; ++dd) grow[dd] += d * x[dd];
            if (spec.bias) grad[l.b1 + h] += d;
        }
    } else {
        for (std::size_t o = 0; o < spec.output_dim; ++o) {
            const double d = ws.dz[o];
            double* grow = &grad[l.w1 + o * spec.input_dim];
            for (std::size_t dd = 0; dd < spec.input_dim; ++dd) grow[dd] += d * x[dd];
            if (spec.bias) grad[l.b1 + o] += d;
        }
    }
}

std::uint64_t tie_hash(std::size_t index) { return mix_seed(0x7469652d627265ULL, index); }

}  // namespace

double sample_loss(const ParamVector& w, const ModelSpec& spec, const Sample& sample) {
    check_inputs(w, spec);
    check_sample(spec, sample);
    Workspace ws;
    forward(w, spec, layout_of(spec), sample, ws);
    const double loss = loss_and_dz(spec, sample, ws, false);
    if (!std::isfinite(loss)) throw NumericError("sample_loss: non-finite loss");
    return loss;
}

ParamVector compute_gradient(const ParamVector& w, const ModelSpec& spec, std::span<const Sample> batch) {
    check_inputs(w, spec);
    if (batch.empty()) throw InvalidArgument("compute_gradient: empty batch");
    const Layout l = layout_of(spec);
    Workspace ws;
    std::vector<double> grad(w.dim(), 0.0);
    for (const auto& s : batch) {
        check_sample(spec, s);
        forward(w, spec, l, s, ws);
        const double loss = loss_and_dz(spec, s, ws, true);
        if (!std::isfinite(loss)) throw NumericError("compute_gradient: non-finite loss");
        backward(w, spec, l, s, ws, grad);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (auto& g : grad) g *= inv;
    ParamVector out(std::move(grad));
    require_finite(out, "compute_gradient");
    return out;
}

ParamVector sgd_step(const ParamVector& w, const ParamVector& g, double lr) {
    require_same_dim(w, g, "sgd_step");
    ParamVector out(w.dim());
    for (std::size_t i = 0; i < w.dim(); ++i) out[i] = w[i] - lr * g[i];
    require_finite(out, "sgd_step");
    return out;
}

std::vector<std::size_t> sample_batch_indices(std::size_t n, std::size_t batch_size, std::mt19937_64& rng) {
    if (n == 0) throw InvalidArgument("sample_batch_indices: empty partition");
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> idx(batch_size);
    for (auto& i : idx) i = pick(rng);
    return idx;
}

TrainResult local_train(const ParamVector& w, const ModelSpec& spec, const DataPartition& partition,
                        std::size_t steps, const HyperParams& hp, std::uint64_t rng_seed) {
    if (steps < 1) throw InvalidArgument("local_train: steps must be >= 1");
    hp.validate();
    if (partition.size() == 0) throw InvalidArgument("local_train: empty partition");
    std::mt19937_64 rng(rng_seed);
    TrainResult result{w, 0};
    std::vector<Sample> batch(hp.batch_size);
    for (std::size_t step = 0; step < steps; ++step) {
        const auto idx = sample_batch_indices(partition.size(), hp.batch_size, rng);
        for (std::size_t b = 0; b < idx.size(); ++b) batch[b] = partition.samples[idx[b]];
        const ParamVector g = compute_gradient(result.params, spec, batch);
        result.params = sgd_step(result.params, g, hp.learning_rate);
        ++result.steps_done;
    }
    return result;
}

std::size_t iterations_per_epoch(std::size_t n_k, std::size_t batch_size) {
    if (batch_size < 1) throw InvalidArgument("iterations_per_epoch: batch_size must be >= 1");
    return (n_k + batch_size - 1) / batch_size;
}

EvalResult evaluate(const ParamVector& w, const ModelSpec& spec, std::span<const Sample> data) {
    check_inputs(w, spec);
    if (data.empty()) throw InvalidArgument("evaluate: empty dataset");
    const Layout l = layout_of(spec);
    Workspace ws;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& s = data[i];
        check_sample(spec, s);
        forward(w, spec, l, s, ws);
        const double loss = loss_and_dz(spec, s, ws, false);
        if (!std::isfinite(loss)) throw NumericError("evaluate: non-finite loss");
        loss_sum += loss;
        if (!spec.is_classifier()) continue;
        std::size_t predicted = 0;
        if (spec.output_dim == 1) {
            const double z = ws.z[0];
            predicted = z > 0 ? 1 : (z < 0 ? 0 : static_cast<std::size_t>(tie_hash(i) & 1));
        } else {
            const double zmax = *std::max_element(ws.z.begin(), ws.z.end());
            std::vector<std::size_t> tied;
            for (std::size_t o = 0; o < spec.output_dim; ++o)
                if (ws.z[o] == zmax) tied.push_back(o);
            predicted = tied[tie_hash(i) % tied.size()];
        }
        if (static_cast<double>(predicted) == s.label) ++correct;
    }
    EvalResult r;
    r.loss = loss_sum / static_cast<double>(data.size());
    r.accuracy = spec.is_classifier() ? static_cast<double>(correct) / static_cast<double>(data.size()) : 0.0;
    return r;
}

}  // namespace hadfl
