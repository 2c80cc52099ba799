#include "fedhash/model.hpp"

#include <algorithm>
#include <cmath>

#include "fedhash/prng.hpp"

namespace fedhash {

std::vector<LayerDesc> ModelSpec::layers() const {
    std::vector<LayerDesc> out;
    switch (kind) {
        case ModelKind::LinearSoftmax:
            out.push_back({"w", {num_classes, input_dim}, false});
            out.push_back({"b", {num_classes}, exempt_biases});
            break;
        case ModelKind::Mlp1h:
            out.push_back({"w1", {hidden_dim, input_dim}, false});
            out.push_back({"b1", {hidden_dim}, exempt_biases});
            out.push_back({"w2", {num_classes, hidden_dim}, false});
            out.push_back({"b2", {num_classes}, exempt_biases});
            break;
    }
    return out;
}

ModelKind parse_model_kind(const std::string& text) {
    if (text == "linear-softmax") return ModelKind::LinearSoftmax;
    if (text == "mlp-1h") return ModelKind::Mlp1h;
    throw ConfigError("model.kind", "unknown model kind '" + text + "'");
}

std::string to_string(ModelKind kind) {
    return kind == ModelKind::LinearSoftmax ? "linear-softmax" : "mlp-1h";
}

namespace {

template <typename T>
struct LayerViews {
    // Virtual view per layer; exempt layers alias the real array.
    std::vector<std::vector<T>> scratch;
    std::vector<const T*> view;

    LayerViews(const ParameterSchema& schema, const Params<T>& params, const IndexMaps& maps,
               Exec exec) {
        scratch.resize(schema.layers.size());
        view.resize(schema.layers.size());
        for (size_t l = 0; l < schema.layers.size(); ++l) {
            if (schema.layers[l].compressed) {
                scratch[l] = expand(params.layers[l], *maps[l], exec);
                view[l] = scratch[l].data();
            } else {
                view[l] = params.layers[l].data();
            }
        }
    }
};

template <typename T>
void check_inputs(const ModelSpec& spec, const ParameterSchema& schema, const Params<T>& params,
                  const IndexMaps& maps, const BatchT<T>& batch) {
    if (params.schema_digest != schema.digest) {
        throw IncompatibleParametersError("parameters do not match the model schema");
    }
    if (maps.size() != schema.layers.size()) {
        throw ShapeError("index map count does not match schema layer count");
    }
    if (batch.batch_size == 0) {
        throw ShapeError("empty batch");
    }
    if (batch.input_dim != spec.input_dim ||
        batch.features.size() != batch.batch_size * batch.input_dim) {
        throw ShapeError("batch feature dimensions do not match the model input");
    }
    if (batch.labels.size() != batch.batch_size) {
        throw ShapeError("batch label count does not match batch size");
    }
    for (uint32_t y : batch.labels) {
        if (y >= spec.num_classes) throw ShapeError("label out of range");
    }
}

// Mean cross-entropy and dloss/dlogits, log-sum-exp stabilized. Serial over
// the batch so the reduction order never depends on thread count.
template <typename T>
T softmax_xent(const std::vector<T>& logits, const std::vector<uint32_t>& labels, size_t batch,
               size_t classes, std::vector<T>& dlogits) {
    dlogits.assign(batch * classes, T{0});
    double loss = 0.0;
    const T inv_batch = T{1} / static_cast<T>(batch);
    for (size_t b = 0; b < batch; ++b) {
        const T* row = logits.data() + b * classes;
        T m = row[0];
        for (size_t c = 1; c < classes; ++c) m = std::max(m, row[c]);
        T sum{0};
        for (size_t c = 0; c < classes; ++c) sum += std::exp(row[c] - m);
        const T lse = m + std::log(sum);
        loss += static_cast<double>(lse - row[labels[b]]);
        T* drow = dlogits.data() + b * classes;
        for (size_t c = 0; c < classes; ++c) {
            const T p = std::exp(row[c] - lse);
            drow[c] = (p - (c == labels[b] ? T{1} : T{0})) * inv_batch;
        }
    }
    return static_cast<T>(loss / static_cast<double>(batch));
}

template <typename T>
void check_finite(const std::vector<T>& values, const std::string& layer_name) {
    for (T v : values) {
        if (!std::isfinite(static_cast<double>(v))) {
            throw NumericError("non-finite value in layer '" + layer_name + "'");
        }
    }
}

// Virtual gradient -> real gradient for one layer.
template <typename T>
std::vector<T> to_real_grad(const ParameterSchema& schema, const IndexMaps& maps, size_t l,
                            std::vector<T>&& virtual_grad, Exec exec) {
    if (!schema.layers[l].compressed) return std::move(virtual_grad);
    return scatter_grad(virtual_grad, *maps[l], exec);
}

}  // namespace

template <typename T>
std::vector<T> forward_logits(const ModelSpec& spec, const ParameterSchema& schema,
                              const Params<T>& params, const IndexMaps& maps,
                              const BatchT<T>& batch, Exec exec) {
    check_inputs(spec, schema, params, maps, batch);
    LayerViews<T> views(schema, params, maps, exec);
    const size_t n = batch.batch_size;
    std::vector<T> logits(n * spec.num_classes);
    if (spec.kind == ModelKind::LinearSoftmax) {
        linear_forward(batch.features.data(), views.view[0], views.view[1], n, spec.input_dim,
                       spec.num_classes, logits.data(), exec);
    } else {
        std::vector<T> hidden_pre(n * spec.hidden_dim);
        linear_forward(batch.features.data(), views.view[0], views.view[1], n, spec.input_dim,
                       spec.hidden_dim, hidden_pre.data(), exec);
        std::vector<T> hidden(n * spec.hidden_dim);
        relu_forward(hidden_pre.data(), hidden_pre.size(), hidden.data(), exec);
        linear_forward(hidden.data(), views.view[2], views.view[3], n, spec.hidden_dim,
                       spec.num_classes, logits.data(), exec);
    }
    return logits;
}

template <typename T>
LossGrad<T> forward_loss_grad(const ModelSpec& spec, const ParameterSchema& schema,
                              const Params<T>& params, const IndexMaps& maps,
                              const BatchT<T>& batch, Exec exec) {
    check_inputs(spec, schema, params, maps, batch);
    LayerViews<T> views(schema, params, maps, exec);
    const size_t n = batch.batch_size;
    LossGrad<T> result;
    result.grads.resize(schema.layers.size());

    if (spec.kind == ModelKind::LinearSoftmax) {
        std::vector<T> logits(n * spec.num_classes);
        linear_forward(batch.features.data(), views.view[0], views.view[1], n, spec.input_dim,
                       spec.num_classes, logits.data(), exec);
        std::vector<T> dlogits;
        result.loss = softmax_xent(logits, batch.labels, n, spec.num_classes, dlogits);

        std::vector<T> dw(spec.num_classes * spec.input_dim);
        linear_grad_weights(dlogits.data(), batch.features.data(), n, spec.input_dim,
                            spec.num_classes, dw.data(), exec);
        std::vector<T> db(spec.num_classes);
        linear_grad_bias(dlogits.data(), n, spec.num_classes, db.data(), exec);
        result.grads[0] = to_real_grad(schema, maps, 0, std::move(dw), exec);
        result.grads[1] = to_real_grad(schema, maps, 1, std::move(db), exec);
    } else {
        std::vector<T> hidden_pre(n * spec.hidden_dim);
        linear_forward(batch.features.data(), views.view[0], views.view[1], n, spec.input_dim,
                       spec.hidden_dim, hidden_pre.data(), exec);
        std::vector<T> hidden(n * spec.hidden_dim);
        relu_forward(hidden_pre.data(), hidden_pre.size(), hidden.data(), exec);
        std::vector<T> logits(n * spec.num_classes);
        linear_forward(hidden.data(), views.view[2], views.view[3], n, spec.hidden_dim,
                       spec.num_classes, logits.data(), exec);

        std::vector<T> dlogits;
        result.loss = softmax_xent(logits, batch.labels, n, spec.num_classes, dlogits);

        std::vector<T> dw2(spec.num_classes * spec.hidden_dim);
        linear_grad_weights(dlogits.data(), hidden.data(), n, spec.hidden_dim, spec.num_classes,
                            dw2.data(), exec);
        std::vector<T> db2(spec.num_classes);
        linear_grad_bias(dlogits.data(), n, spec.num_classes, db2.data(), exec);

        std::vector<T> dhidden(n * spec.hidden_dim);
        linear_grad_input(dlogits.data(), views.view[2], n, spec.hidden_dim, spec.num_classes,
                          dhidden.data(), exec);
        std::vector<T> dhidden_pre(n * spec.hidden_dim);
        relu_backward(hidden_pre.data(), dhidden.data(), dhidden.size(), dhidden_pre.data(), exec);

        std::vector<T> dw1(spec.hidden_dim * spec.input_dim);
        linear_grad_weights(dhidden_pre.data(), batch.features.data(), n, spec.input_dim,
                            spec.hidden_dim, dw1.data(), exec);
        std::vector<T> db1(spec.hidden_dim);
        linear_grad_bias(dhidden_pre.data(), n, spec.hidden_dim, db1.data(), exec);

        result.grads[0] = to_real_grad(schema, maps, 0, std::move(dw1), exec);
        result.grads[1] = to_real_grad(schema, maps, 1, std::move(db1), exec);
        result.grads[2] = to_real_grad(schema, maps, 2, std::move(dw2), exec);
        result.grads[3] = to_real_grad(schema, maps, 3, std::move(db2), exec);
    }

    if (!std::isfinite(static_cast<double>(result.loss))) {
        throw NumericError("non-finite loss at output layer '" + schema.layers.back().name + "'");
    }
    for (size_t l = 0; l < result.grads.size(); ++l) {
        check_finite(result.grads[l], schema.layers[l].name);
    }
    return result;
}

template <typename T>
double evaluate(const ModelSpec& spec, const ParameterSchema& schema, const Params<T>& params,
                const IndexMaps& maps, const BatchT<T>& eval_batch, Exec exec) {
    const std::vector<T> logits = forward_logits(spec, schema, params, maps, eval_batch, exec);
    const size_t n = eval_batch.batch_size;
    const size_t classes = spec.num_classes;
    uint64_t correct = 0;
    for (size_t b = 0; b < n; ++b) {
        const T* row = logits.data() + b * classes;
        size_t best = 0;
        for (size_t c = 1; c < classes; ++c) {
            if (row[c] > row[best]) best = c;  // strict: ties keep the lowest index
        }
        if (best == eval_batch.labels[b]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

template <typename T>
void init_params(const ParameterSchema& schema, Params<T>& params) {
    if (params.schema_digest != schema.digest) {
        throw IncompatibleParametersError("parameters do not match the schema");
    }
    for (size_t l = 0; l < schema.layers.size(); ++l) {
        const LayerSchema& layer = schema.layers[l];
        auto& values = params.layers[l];
        if (layer.rank() >= 2 && layer.compressed) {
            const double fan_out = layer.shape[0];
            double fan_in = 1;
            for (size_t d = 1; d < layer.shape.size(); ++d) fan_in *= layer.shape[d];
            const double s = std::sqrt(6.0 / (fan_in + fan_out));
            Xoshiro256ss rng(derive_init_seed(layer.seed));
            for (auto& v : values) {
                v = static_cast<T>(-s + 2.0 * s * rng.next_double());
            }
        } else {
            std::fill(values.begin(), values.end(), T{0});
        }
    }
}

template std::vector<float> forward_logits<float>(const ModelSpec&, const ParameterSchema&,
                                                  const Params<float>&, const IndexMaps&,
                                                  const BatchT<float>&, Exec);
template std::vector<double> forward_logits<double>(const ModelSpec&, const ParameterSchema&,
                                                    const Params<double>&, const IndexMaps&,
                                                    const BatchT<double>&, Exec);
template LossGrad<float> forward_loss_grad<float>(const ModelSpec&, const ParameterSchema&,
                                                  const Params<float>&, const IndexMaps&,
                                                  const BatchT<float>&, Exec);
template LossGrad<double> forward_loss_grad<double>(const ModelSpec&, const ParameterSchema&,
                                                    const Params<double>&, const IndexMaps&,
                                                    const BatchT<double>&, Exec);
template double evaluate<float>(const ModelSpec&, const ParameterSchema&, const Params<float>&,
                                const IndexMaps&, const BatchT<float>&, Exec);
template double evaluate<double>(const ModelSpec&, const ParameterSchema&, const Params<double>&,
                                 const IndexMaps&, const BatchT<double>&, Exec);
template void init_params<float>(const ParameterSchema&, Params<float>&);
template void init_params<double>(const ParameterSchema&, Params<double>&);

}  // namespace fedhash
