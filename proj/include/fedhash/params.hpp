#pragma once

// Flat per-layer parameter storage. The real vectors are the authoritative
// trainable state; everything on the wire is a set of these arrays plus
// metadata.

#include <cstdint>
#include <vector>

#include "fedhash/errors.hpp"
#include "fedhash/schema.hpp"

namespace fedhash {

template <typename T>
struct Params {
    uint64_t schema_digest = 0;
    std::vector<std::vector<T>> layers;

    static Params zeros(const ParameterSchema& schema) {
        Params p;
        p.schema_digest = schema.digest;
        p.layers.reserve(schema.layers.size());
        for (const auto& l : schema.layers) {
            p.layers.emplace_back(l.real_size, T{0});
        }
        return p;
    }

    uint64_t total_elements() const {
        uint64_t n = 0;
        for (const auto& l : layers) n += l.size();
        return n;
    }
};

using RealParams = Params<float>;

// One client's per-round upload: trained real params minus the round-start
// global params, elementwise, in the same layout as RealParams.
struct RoundIncrement {
    uint64_t round = 0;
    uint64_t client_id = 0;
    uint64_t schema_digest = 0;
    std::vector<std::vector<float>> deltas;
};

namespace detail {

template <typename T>
void check_compatible(const Params<T>& a, const Params<T>& b) {
    if (a.schema_digest != b.schema_digest) {
        throw IncompatibleParametersError("parameter digest mismatch");
    }
    if (a.layers.size() != b.layers.size()) {
        throw ShapeError("parameter layer count mismatch");
    }
    for (size_t l = 0; l < a.layers.size(); ++l) {
        if (a.layers[l].size() != b.layers[l].size()) {
            throw ShapeError("parameter layer length mismatch at layer " + std::to_string(l));
        }
    }
}

}  // namespace detail

// dst[k] += alpha * src[k] for every element, layer by layer, ascending k.
// Exact per-element IEEE arithmetic, no reordering.
template <typename T>
void params_axpy(Params<T>& dst, T alpha, const Params<T>& src) {
    detail::check_compatible(dst, src);
    for (size_t l = 0; l < dst.layers.size(); ++l) {
        auto& d = dst.layers[l];
        const auto& s = src.layers[l];
        for (size_t k = 0; k < d.size(); ++k) {
            d[k] += alpha * s[k];
        }
    }
}

template <typename To, typename From>
Params<To> params_cast(const Params<From>& src) {
    Params<To> out;
    out.schema_digest = src.schema_digest;
    out.layers.reserve(src.layers.size());
    for (const auto& layer : src.layers) {
        out.layers.emplace_back(layer.begin(), layer.end());
    }
    return out;
}

}  // namespace fedhash
