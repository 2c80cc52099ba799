#pragma once

// Data-parallel compute kernels. Every kernel has a serial reference
// implementation (namespace serial) and an OpenMP implementation (namespace
// par) that is bitwise identical to it: parallelism is always across
// independent output elements, and the summation order behind each output
// element is fixed. Dispatch wrappers pick one by execution policy.
//
// scatter_sum is the adjoint of gather. The serial form walks virtual
// positions in ascending order and adds into 64-bit accumulators; the
// parallel form walks each real index's bucket (positions ascending), which
// performs the same per-accumulator addition sequence.

#include <cstddef>
#include <cstdint>

#include "fedhash/index_map.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fedhash {

enum class Exec {
    Auto,      // parallel for large arrays when compiled with OpenMP
    Serial,
    Parallel,
};

// Smallest output size worth a parallel region.
inline constexpr size_t kParallelCutoff = 1 << 13;

inline bool use_parallel(Exec exec, size_t n) {
#ifdef _OPENMP
    switch (exec) {
        case Exec::Serial: return false;
        case Exec::Parallel: return true;
        case Exec::Auto: return n >= kParallelCutoff;
    }
    return false;
#else
    (void)exec;
    (void)n;
    return false;
#endif
}

namespace serial {

// out[p] = real[map.indices[p]]; pure gather.
template <typename T>
void gather(const T* real, const IndexMap& map, T* out) {
    for (uint64_t p = 0; p < map.virtual_size; ++p) {
        out[p] = real[map.indices[p]];
    }
}

// out[k] = sum over p with indices[p] == k of vgrad[p], ascending p,
// 64-bit accumulation.
template <typename T>
void scatter_sum(const T* vgrad, const IndexMap& map, T* out) {
    std::vector<double> acc(map.real_size, 0.0);
    for (uint64_t p = 0; p < map.virtual_size; ++p) {
        acc[map.indices[p]] += static_cast<double>(vgrad[p]);
    }
    for (uint64_t k = 0; k < map.real_size; ++k) {
        out[k] = static_cast<T>(acc[k]);
    }
}

// y[b,o] = sum_i x[b,i] * w[o,i] + bias[o]   (bias may be null)
template <typename T>
void linear_forward(const T* x, const T* w, const T* bias, size_t batch, size_t in_dim,
                    size_t out_dim, T* y) {
    for (size_t b = 0; b < batch; ++b) {
        for (size_t o = 0; o < out_dim; ++o) {
            T acc = bias ? bias[o] : T{0};
            const T* xr = x + b * in_dim;
            const T* wr = w + o * in_dim;
            for (size_t i = 0; i < in_dim; ++i) acc += xr[i] * wr[i];
            y[b * out_dim + o] = acc;
        }
    }
}

// dw[o,i] = sum_b dy[b,o] * x[b,i]
template <typename T>
void linear_grad_weights(const T* dy, const T* x, size_t batch, size_t in_dim, size_t out_dim,
                         T* dw) {
    for (size_t o = 0; o < out_dim; ++o) {
        for (size_t i = 0; i < in_dim; ++i) {
            T acc{0};
            for (size_t b = 0; b < batch; ++b) acc += dy[b * out_dim + o] * x[b * in_dim + i];
            dw[o * in_dim + i] = acc;
        }
    }
}

// db[o] = sum_b dy[b,o]
template <typename T>
void linear_grad_bias(const T* dy, size_t batch, size_t out_dim, T* db) {
    for (size_t o = 0; o < out_dim; ++o) {
        T acc{0};
        for (size_t b = 0; b < batch; ++b) acc += dy[b * out_dim + o];
        db[o] = acc;
    }
}

// dx[b,i] = sum_o dy[b,o] * w[o,i]
template <typename T>
void linear_grad_input(const T* dy, const T* w, size_t batch, size_t in_dim, size_t out_dim,
                       T* dx) {
    for (size_t b = 0; b < batch; ++b) {
        for (size_t i = 0; i < in_dim; ++i) {
            T acc{0};
            for (size_t o = 0; o < out_dim; ++o) acc += dy[b * out_dim + o] * w[o * in_dim + i];
            dx[b * in_dim + i] = acc;
        }
    }
}

template <typename T>
void relu_forward(const T* x, size_t n, T* y) {
    for (size_t i = 0; i < n; ++i) y[i] = x[i] > T{0} ? x[i] : T{0};
}

template <typename T>
void relu_backward(const T* x, const T* dy, size_t n, T* dx) {
    for (size_t i = 0; i < n; ++i) dx[i] = x[i] > T{0} ? dy[i] : T{0};
}

// out[k] = (1/count) * sum_c inputs[c][k], 64-bit accumulation in ascending
// input order.
template <typename T>
void mean_stack(const T* const* inputs, size_t count, size_t n, T* out) {
    for (size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (size_t c = 0; c < count; ++c) acc += static_cast<double>(inputs[c][k]);
        out[k] = static_cast<T>(acc / static_cast<double>(count));
    }
}

template <typename T>
void axpy(T* dst, T alpha, const T* src, size_t n) {
    for (size_t k = 0; k < n; ++k) dst[k] += alpha * src[k];
}

}  // namespace serial

namespace par {

template <typename T>
void gather(const T* real, const IndexMap& map, T* out) {
    const int64_t n = static_cast<int64_t>(map.virtual_size);
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < n; ++p) {
        out[p] = real[map.indices[p]];
    }
}

template <typename T>
void scatter_sum(const T* vgrad, const IndexMap& map, T* out) {
    const int64_t nk = static_cast<int64_t>(map.real_size);
#pragma omp parallel for schedule(static)
    for (int64_t k = 0; k < nk; ++k) {
        double acc = 0.0;
        const uint64_t begin = map.bucket_offsets[k];
        const uint64_t end = map.bucket_offsets[k + 1];
        for (uint64_t j = begin; j < end; ++j) {
            acc += static_cast<double>(vgrad[map.positions[j]]);
        }
        out[k] = static_cast<T>(acc);
    }
}

template <typename T>
void linear_forward(const T* x, const T* w, const T* bias, size_t batch, size_t in_dim,
                    size_t out_dim, T* y) {
    const int64_t total = static_cast<int64_t>(batch * out_dim);
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < total; ++t) {
        const size_t b = static_cast<size_t>(t) / out_dim;
        const size_t o = static_cast<size_t>(t) % out_dim;
        T acc = bias ? bias[o] : T{0};
        const T* xr = x + b * in_dim;
        const T* wr = w + o * in_dim;
        for (size_t i = 0; i < in_dim; ++i) acc += xr[i] * wr[i];
        y[t] = acc;
    }
}

template <typename T>
void linear_grad_weights(const T* dy, const T* x, size_t batch, size_t in_dim, size_t out_dim,
                         T* dw) {
    const int64_t total = static_cast<int64_t>(out_dim * in_dim);
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < total; ++t) {
        const size_t o = static_cast<size_t>(t) / in_dim;
        const size_t i = static_cast<size_t>(t) % in_dim;
        T acc{0};
        for (size_t b = 0; b < batch; ++b) acc += dy[b * out_dim + o] * x[b * in_dim + i];
        dw[t] = acc;
    }
}

template <typename T>
void linear_grad_bias(const T* dy, size_t batch, size_t out_dim, T* db) {
    const int64_t n = static_cast<int64_t>(out_dim);
#pragma omp parallel for schedule(static)
    for (int64_t o = 0; o < n; ++o) {
        T acc{0};
        for (size_t b = 0; b < batch; ++b) acc += dy[b * out_dim + o];
        db[o] = acc;
    }
}

template <typename T>
void linear_grad_input(const T* dy, const T* w, size_t batch, size_t in_dim, size_t out_dim,
                       T* dx) {
    const int64_t total = static_cast<int64_t>(batch * in_dim);
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < total; ++t) {
        const size_t b = static_cast<size_t>(t) / in_dim;
        const size_t i = static_cast<size_t>(t) % in_dim;
        T acc{0};
        for (size_t o = 0; o < out_dim; ++o) acc += dy[b * out_dim + o] * w[o * in_dim + i];
        dx[t] = acc;
    }
}

template <typename T>
void relu_forward(const T* x, size_t n, T* y) {
    const int64_t nn = static_cast<int64_t>(n);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < nn; ++i) y[i] = x[i] > T{0} ? x[i] : T{0};
}

template <typename T>
void relu_backward(const T* x, const T* dy, size_t n, T* dx) {
    const int64_t nn = static_cast<int64_t>(n);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < nn; ++i) dx[i] = x[i] > T{0} ? dy[i] : T{0};
}

template <typename T>
void mean_stack(const T* const* inputs, size_t count, size_t n, T* out) {
    const int64_t nn = static_cast<int64_t>(n);
#pragma omp parallel for schedule(static)
    for (int64_t k = 0; k < nn; ++k) {
        double acc = 0.0;
        for (size_t c = 0; c < count; ++c) acc += static_cast<double>(inputs[c][k]);
        out[k] = static_cast<T>(acc / static_cast<double>(count));
    }
}

template <typename T>
void axpy(T* dst, T alpha, const T* src, size_t n) {
    const int64_t nn = static_cast<int64_t>(n);
#pragma omp parallel for schedule(static)
    for (int64_t k = 0; k < nn; ++k) dst[k] += alpha * src[k];
}

}  // namespace par

// --- Dispatchers --------------------------------------------------------

template <typename T>
void gather(const T* real, const IndexMap& map, T* out, Exec exec = Exec::Auto) {
    if (use_parallel(exec, map.virtual_size)) {
        par::gather(real, map, out);
    } else {
        serial::gather(real, map, out);
    }
}

template <typename T>
void scatter_sum(const T* vgrad, const IndexMap& map, T* out, Exec exec = Exec::Auto) {
    if (use_parallel(exec, map.virtual_size)) {
        par::scatter_sum(vgrad, map, out);
    } else {
        serial::scatter_sum(vgrad, map, out);
    }
}

template <typename T>
void linear_forward(const T* x, const T* w, const T* bias, size_t batch, size_t in_dim,
                    size_t out_dim, T* y, Exec exec = Exec::Auto) {
    if (use_parallel(exec, batch * out_dim * in_dim)) {
        par::linear_forward(x, w, bias, batch, in_dim, out_dim, y);
    } else {
        serial::linear_forward(x, w, bias, batch, in_dim, out_dim, y);
    }
}

template <typename T>
void linear_grad_weights(const T* dy, const T* x, size_t batch, size_t in_dim, size_t out_dim,
                         T* dw, Exec exec = Exec::Auto) {
    if (use_parallel(exec, batch * out_dim * in_dim)) {
        par::linear_grad_weights(dy, x, batch, in_dim, out_dim, dw);
    } else {
        serial::linear_grad_weights(dy, x, batch, in_dim, out_dim, dw);
    }
}

template <typename T>
void linear_grad_bias(const T* dy, size_t batch, size_t out_dim, T* db, Exec exec = Exec::Auto) {
    if (use_parallel(exec, batch * out_dim)) {
        par::linear_grad_bias(dy, batch, out_dim, db);
    } else {
        serial::linear_grad_bias(dy, batch, out_dim, db);
    }
}

template <typename T>
void linear_grad_input(const T* dy, const T* w, size_t batch, size_t in_dim, size_t out_dim,
                       T* dx, Exec exec = Exec::Auto) {
    if (use_parallel(exec, batch * out_dim * in_dim)) {
        par::linear_grad_input(dy, w, batch, in_dim, out_dim, dx);
    } else {
        serial::linear_grad_input(dy, w, batch, in_dim, out_dim, dx);
    }
}

template <typename T>
void relu_forward(const T* x, size_t n, T* y, Exec exec = Exec::Auto) {
    if (use_parallel(exec, n)) {
        par::relu_forward(x, n, y);
    } else {
        serial::relu_forward(x, n, y);
    }
}

template <typename T>
void relu_backward(const T* x, const T* dy, size_t n, T* dx, Exec exec = Exec::Auto) {
    if (use_parallel(exec, n)) {
        par::relu_backward(x, dy, n, dx);
    } else {
        serial::relu_backward(x, dy, n, dx);
    }
}

template <typename T>
void mean_stack(const T* const* inputs, size_t count, size_t n, T* out, Exec exec = Exec::Auto) {
    if (use_parallel(exec, n * count)) {
        par::mean_stack(inputs, count, n, out);
    } else {
        serial::mean_stack(inputs, count, n, out);
    }
}

template <typename T>
void axpy_kernel(T* dst, T alpha, const T* src, size_t n, Exec exec = Exec::Auto) {
    if (use_parallel(exec, n)) {
        par::axpy(dst, alpha, src, n);
    } else {
        serial::axpy(dst, alpha, src, n);
    }
}

}  // namespace fedhash
