#include "fedhash/optim.hpp"

#include <cmath>

namespace fedhash {

OptKind parse_opt_kind(const std::string& text) {
    if (text == "sgd") return OptKind::Sgd;
    if (text == "adadelta") return OptKind::Adadelta;
    throw ConfigError("optimizer", "unknown optimizer '" + text + "'");
}

std::string to_string(OptKind kind) {
    return kind == OptKind::Sgd ? "sgd" : "adadelta";
}

double LrSchedule::multiplier(uint64_t round) const {
    double mult = 1.0;
    for (const auto& [r, m] : entries) {
        if (r > round) break;
        mult = m;
    }
    return mult;
}

template <typename T>
OptState<T> OptState<T>::sgd(const ParameterSchema& schema, T lr, LrSchedule sched) {
    OptState state;
    state.kind = OptKind::Sgd;
    state.base_lr = lr;
    state.schedule = std::move(sched);
    (void)schema;
    return state;
}

template <typename T>
OptState<T> OptState<T>::adadelta(const ParameterSchema& schema, T lr, LrSchedule sched) {
    OptState state;
    state.kind = OptKind::Adadelta;
    state.base_lr = lr;
    state.schedule = std::move(sched);
    for (const auto& layer : schema.layers) {
        state.avg_sq_grad.emplace_back(layer.real_size, T{0});
        state.avg_sq_update.emplace_back(layer.real_size, T{0});
    }
    return state;
}

template <typename T>
void optimizer_step(OptState<T>& state, Params<T>& params,
                    const std::vector<std::vector<T>>& grads, uint64_t round) {
    if (grads.size() != params.layers.size()) {
        throw ShapeError("gradient layer count does not match parameters");
    }
    const T step = state.base_lr * static_cast<T>(state.schedule.multiplier(round));
    for (size_t l = 0; l < params.layers.size(); ++l) {
        auto& p = params.layers[l];
        const auto& g = grads[l];
        if (g.size() != p.size()) {
            throw ShapeError("gradient length mismatch at layer " + std::to_string(l));
        }
        for (T v : g) {
            if (!std::isfinite(static_cast<double>(v))) {
                throw NumericError("non-finite gradient at layer " + std::to_string(l));
            }
        }
        if (state.kind == OptKind::Sgd) {
            for (size_t k = 0; k < p.size(); ++k) {
                p[k] -= step * g[k];
            }
        } else {
            auto& eg = state.avg_sq_grad[l];
            auto& ex = state.avg_sq_update[l];
            const T rho = state.rho;
            const T eps = state.eps;
            for (size_t k = 0; k < p.size(); ++k) {
                eg[k] = rho * eg[k] + (T{1} - rho) * g[k] * g[k];
                const T u = std::sqrt((ex[k] + eps) / (eg[k] + eps)) * g[k];
                ex[k] = rho * ex[k] + (T{1} - rho) * u * u;
                p[k] -= step * u;
            }
        }
    }
}

template struct OptState<float>;
template struct OptState<double>;
template void optimizer_step<float>(OptState<float>&, Params<float>&,
                                    const std::vector<std::vector<float>>&, uint64_t);
template void optimizer_step<double>(OptState<double>&, Params<double>&,
                                     const std::vector<std::vector<double>>&, uint64_t);

}  // namespace fedhash
