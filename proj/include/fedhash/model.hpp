#pragma once

// Small differentiable classifiers whose weights live behind virtual views.
// Forward and backward run in virtual space; gradients reach real space
// through scatter_grad. Exempt layers (biases by default) skip the map.

#include <cstdint>
#include <string>
#include <vector>

#include "fedhash/compression.hpp"
#include "fedhash/params.hpp"

namespace fedhash {

enum class ModelKind { LinearSoftmax, Mlp1h };

struct ModelSpec {
    ModelKind kind = ModelKind::LinearSoftmax;
    uint32_t input_dim = 0;
    uint32_t hidden_dim = 0;  // mlp-1h only
    uint32_t num_classes = 0;
    bool exempt_biases = true;

    // Deterministic layer list: linear-softmax -> [W, b]; mlp-1h ->
    // [W1, b1, W2, b2]. Bias layers carry the exempt flag.
    std::vector<LayerDesc> layers() const;
};

ModelKind parse_model_kind(const std::string& text);
std::string to_string(ModelKind kind);

template <typename T>
struct BatchT {
    std::vector<T> features;       // batch_size x input_dim, row-major
    std::vector<uint32_t> labels;  // class ids in [0, num_classes)
    size_t batch_size = 0;
    size_t input_dim = 0;
};

using Batch = BatchT<float>;

using IndexMaps = std::vector<std::optional<IndexMap>>;

template <typename T>
struct LossGrad {
    T loss{};
    std::vector<std::vector<T>> grads;  // real-space layout, one array per layer
};

// Mean cross-entropy over the batch (log-sum-exp stabilized) and real-space
// gradients. Pure function of its inputs. Throws IncompatibleParametersError
// on digest mismatch, ShapeError on dimension mismatch, NumericError (with
// the layer name) if the loss or a gradient is non-finite.
template <typename T>
LossGrad<T> forward_loss_grad(const ModelSpec& spec, const ParameterSchema& schema,
                              const Params<T>& params, const IndexMaps& maps,
                              const BatchT<T>& batch, Exec exec = Exec::Auto);

// Forward pass only: logits for every example, row-major batch x classes.
template <typename T>
std::vector<T> forward_logits(const ModelSpec& spec, const ParameterSchema& schema,
                              const Params<T>& params, const IndexMaps& maps,
                              const BatchT<T>& batch, Exec exec = Exec::Auto);

// Argmax-class accuracy over an evaluation batch; ties break to the lowest
// class index.
template <typename T>
double evaluate(const ModelSpec& spec, const ParameterSchema& schema, const Params<T>& params,
                const IndexMaps& maps, const BatchT<T>& eval_batch, Exec exec = Exec::Auto);

// Initializes real vectors in place: rank >= 2 compressed layers get
// uniform(-s, s) with s = sqrt(6 / (fan_in + fan_out)) from the layer's
// init stream; everything else (biases, exempt layers) starts at zero, so
// exempt layers never consume their seed.
template <typename T>
void init_params(const ParameterSchema& schema, Params<T>& params);

}  // namespace fedhash
