// Micro-benchmark comparing the serial reference kernels against their
// OpenMP counterparts. Each kernel runs repeatedly at several sizes; the
// table reports the median wall time per call and the speedup.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "fedhash/kernels.hpp"
#include "fedhash/prng.hpp"

using namespace fedhash;

namespace {

double median_seconds(const std::function<void()>& fn, int reps) {
    std::vector<double> times;
    times.reserve(reps);
    for (int r = 0; r < reps; ++r) {
        const auto start = std::chrono::steady_clock::now();
        fn();
        times.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

void report(const std::string& label, double serial_s, double parallel_s) {
    std::printf("%-28s %12.3f us %12.3f us %8.2fx\n", label.c_str(), serial_s * 1e6,
                parallel_s * 1e6, serial_s / parallel_s);
}

template <typename T>
std::vector<T> random_values(size_t n, uint64_t seed) {
    std::vector<T> v(n);
    Xoshiro256ss rng(seed);
    for (auto& x : v) x = static_cast<T>(rng.next_double() * 2 - 1);
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    int reps = 11;
    if (argc > 1) reps = std::max(3, std::atoi(argv[1]));
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads %d, %d reps per measurement\n",
                omp_get_max_threads(), reps);
#else
    std::printf("built without OpenMP; both columns run the serial path\n");
#endif
    std::printf("%-28s %15s %15s %9s\n", "kernel", "serial", "parallel", "speedup");

    for (const uint64_t t : {1ull << 18, 1ull << 21, 1ull << 23}) {
        const IndexMap map = make_index_map(t, {1, 4}, 7);
        const auto real = random_values<float>(map.real_size, 1);
        const auto vgrad = random_values<float>(t, 2);
        std::vector<float> virt(t), out(map.real_size);
        const std::string suffix = " T=2^" + std::to_string(63 - __builtin_clzll(t));

        report("gather" + suffix,
               median_seconds([&] { serial::gather(real.data(), map, virt.data()); }, reps),
               median_seconds([&] { par::gather(real.data(), map, virt.data()); }, reps));
        report("scatter_sum" + suffix,
               median_seconds([&] { serial::scatter_sum(vgrad.data(), map, out.data()); }, reps),
               median_seconds([&] { par::scatter_sum(vgrad.data(), map, out.data()); }, reps));
    }

    {
        const size_t batch = 256, in_dim = 512, out_dim = 256;
        const auto x = random_values<float>(batch * in_dim, 3);
        const auto w = random_values<float>(out_dim * in_dim, 4);
        const auto bias = random_values<float>(out_dim, 5);
        const auto dy = random_values<float>(batch * out_dim, 6);
        std::vector<float> y(batch * out_dim), dw(out_dim * in_dim), dx(batch * in_dim);

        report("linear_forward 256x512x256",
               median_seconds(
                   [&] {
                       serial::linear_forward(x.data(), w.data(), bias.data(), batch, in_dim,
                                              out_dim, y.data());
                   },
                   reps),
               median_seconds(
                   [&] {
                       par::linear_forward(x.data(), w.data(), bias.data(), batch, in_dim,
                                           out_dim, y.data());
                   },
                   reps));
        report("linear_grad_weights",
               median_seconds(
                   [&] {
                       serial::linear_grad_weights(dy.data(), x.data(), batch, in_dim, out_dim,
                                                   dw.data());
                   },
                   reps),
               median_seconds(
                   [&] {
                       par::linear_grad_weights(dy.data(), x.data(), batch, in_dim, out_dim,
                                                dw.data());
                   },
                   reps));
        report("linear_grad_input",
               median_seconds(
                   [&] {
                       serial::linear_grad_input(dy.data(), w.data(), batch, in_dim, out_dim,
                                                 dx.data());
                   },
                   reps),
               median_seconds(
                   [&] {
                       par::linear_grad_input(dy.data(), w.data(), batch, in_dim, out_dim,
                                              dx.data());
                   },
                   reps));
    }

    {
        const size_t n = 1 << 22;
        const size_t clients = 5;
        std::vector<std::vector<float>> stacks;
        std::vector<const float*> ptrs;
        for (size_t c = 0; c < clients; ++c) {
            stacks.push_back(random_values<float>(n, 10 + c));
            ptrs.push_back(stacks.back().data());
        }
        std::vector<float> mean(n);
        report("mean_stack C=5 n=2^22",
               median_seconds(
                   [&] { serial::mean_stack(ptrs.data(), clients, n, mean.data()); }, reps),
               median_seconds([&] { par::mean_stack(ptrs.data(), clients, n, mean.data()); },
                              reps));

        auto dst_s = random_values<float>(n, 20);
        auto dst_p = dst_s;
        report("axpy n=2^22",
               median_seconds([&] { serial::axpy(dst_s.data(), 0.5f, mean.data(), n); }, reps),
               median_seconds([&] { par::axpy(dst_p.data(), 0.5f, mean.data(), n); }, reps));
    }
    return 0;
}
