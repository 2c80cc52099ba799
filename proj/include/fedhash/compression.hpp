#pragma once

// Expansion of real weight vectors into virtual weight views, and the adjoint
// scatter that folds virtual-space gradients back onto real indices. The real
// vector is the authoritative store; a virtual view is always a derived
// gather, never independent truth.

#include <vector>

#include "fedhash/errors.hpp"
#include "fedhash/kernels.hpp"

namespace fedhash {

// Virtual view of one layer: out[p] = real[indices[p]].
template <typename T>
std::vector<T> expand(const std::vector<T>& real, const IndexMap& map, Exec exec = Exec::Auto) {
    if (real.size() != map.real_size) {
        throw ShapeError("expand: real vector length " + std::to_string(real.size()) +
                         " does not match map real_size " + std::to_string(map.real_size));
    }
    std::vector<T> out(map.virtual_size);
    gather(real.data(), map, out.data(), exec);
    return out;
}

// Real-space gradient: out[k] = sum of virtual_grad over positions mapped to
// k, accumulated in ascending virtual position with 64-bit accumulators.
template <typename T>
std::vector<T> scatter_grad(const std::vector<T>& virtual_grad, const IndexMap& map,
                            Exec exec = Exec::Auto) {
    if (virtual_grad.size() != map.virtual_size) {
        throw ShapeError("scatter_grad: gradient length " + std::to_string(virtual_grad.size()) +
                         " does not match map virtual_size " + std::to_string(map.virtual_size));
    }
    std::vector<T> out(map.real_size);
    scatter_sum(virtual_grad.data(), map, out.data(), exec);
    return out;
}

}  // namespace fedhash
