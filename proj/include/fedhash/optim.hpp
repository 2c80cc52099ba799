#pragma once

// SGD and Adadelta with a round-keyed learning-rate multiplier schedule. The
// multiplier is constant within a round; lookup takes the entry with the
// largest round not exceeding the current one.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedhash/params.hpp"

namespace fedhash {

enum class OptKind { Sgd, Adadelta };

OptKind parse_opt_kind(const std::string& text);
std::string to_string(OptKind kind);

struct LrSchedule {
    // (round, multiplier) pairs, strictly ascending rounds. A round before
    // the first entry uses multiplier 1.0.
    std::vector<std::pair<uint64_t, double>> entries;

    double multiplier(uint64_t round) const;

    static LrSchedule constant() { return LrSchedule{{{0, 1.0}}}; }
    // 1.0 from round 0, 0.1 from round 5, 0.01 from round 30.
    static LrSchedule step_5_30() { return LrSchedule{{{0, 1.0}, {5, 0.1}, {30, 0.01}}}; }
};

template <typename T>
struct OptState {
    OptKind kind = OptKind::Sgd;
    T base_lr = T{1};
    T rho = T{0.9};     // adadelta decay
    T eps = T{1e-6};    // adadelta damping
    LrSchedule schedule = LrSchedule::constant();

    // Adadelta accumulators, RealParams layout. Empty for SGD.
    std::vector<std::vector<T>> avg_sq_grad;
    std::vector<std::vector<T>> avg_sq_update;

    static OptState sgd(const ParameterSchema& schema, T lr, LrSchedule sched);
    static OptState adadelta(const ParameterSchema& schema, T lr, LrSchedule sched);
};

// One update step in place.
//   SGD:      p -= base_lr * mult(round) * g
//   Adadelta: Eg = rho*Eg + (1-rho)*g^2
//             u  = sqrt((Ex + eps) / (Eg + eps)) * g
//             Ex = rho*Ex + (1-rho)*u^2
//             p -= base_lr * mult(round) * u
// Throws NumericError on a non-finite gradient element.
template <typename T>
void optimizer_step(OptState<T>& state, Params<T>& params,
                    const std::vector<std::vector<T>>& grads, uint64_t round);

}  // namespace fedhash
