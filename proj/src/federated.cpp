#include "fedhash/federated.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "fedhash/log.hpp"
#include "fedhash/prng.hpp"

namespace fedhash {

LocalTrainResult local_train(ClientState& client, const TrainSetup& setup,
                             const RealParams& global, uint64_t round) {
    if (global.schema_digest != setup.schema.digest) {
        throw IncompatibleParametersError("global parameters do not match the shared schema");
    }
    if (client.shard.empty()) {
        throw ConfigError("partition",
                          "client " + std::to_string(client.client_id) + " has an empty dataset");
    }
    client.params = global;  // bitwise overwrite at round start

    const size_t n = client.shard.size();
    const size_t batch_size = std::min<size_t>(setup.batch_size, n);
    double loss_sum = 0.0;
    uint64_t step_count = 0;

    for (uint32_t epoch = 0; epoch < setup.local_epochs; ++epoch) {
        std::vector<uint32_t> order = client.shard;
        Xoshiro256ss rng(derive_epoch_seed(client.data_seed, round, epoch));
        fisher_yates(order, rng);
        for (size_t start = 0; start < n; start += batch_size) {
            const size_t end = std::min(start + batch_size, n);
            const std::vector<uint32_t> chunk(order.begin() + start, order.begin() + end);
            const Batch batch = setup.data->batch(chunk);
            LossGrad<float> fg = forward_loss_grad(setup.model, setup.schema, client.params,
                                                   *setup.maps, batch, setup.exec);
            optimizer_step(client.opt, client.params, fg.grads, round);
            loss_sum += static_cast<double>(fg.loss);
            ++step_count;
        }
    }

    LocalTrainResult result;
    result.mean_step_loss = loss_sum / static_cast<double>(step_count);
    result.increment.round = round;
    result.increment.client_id = client.client_id;
    result.increment.schema_digest = setup.schema.digest;
    result.increment.deltas.resize(client.params.layers.size());
    for (size_t l = 0; l < client.params.layers.size(); ++l) {
        const auto& trained = client.params.layers[l];
        const auto& start_vals = global.layers[l];
        auto& delta = result.increment.deltas[l];
        delta.resize(trained.size());
        for (size_t k = 0; k < trained.size(); ++k) {
            delta[k] = trained[k] - start_vals[k];
        }
    }
    return result;
}

RealParams mean_increments(const std::vector<const RoundIncrement*>& sorted_increments,
                           const ParameterSchema& schema, Exec exec) {
    if (sorted_increments.empty()) {
        throw IncompleteRoundError("no increments to average");
    }
    RealParams mean;
    mean.schema_digest = schema.digest;
    mean.layers.resize(schema.layers.size());
    std::vector<const float*> ptrs(sorted_increments.size());
    for (size_t l = 0; l < schema.layers.size(); ++l) {
        for (size_t c = 0; c < sorted_increments.size(); ++c) {
            const auto& deltas = sorted_increments[c]->deltas;
            if (deltas.size() != schema.layers.size() ||
                deltas[l].size() != schema.layers[l].real_size) {
                throw ShapeError("increment layout does not match the schema");
            }
            ptrs[c] = deltas[l].data();
        }
        mean.layers[l].resize(schema.layers[l].real_size);
        mean_stack(ptrs.data(), ptrs.size(), schema.layers[l].real_size, mean.layers[l].data(),
                   exec);
    }
    return mean;
}

void apply_round_update(RealParams& global, const RealParams& delta) {
    params_axpy(global, 1.0f, delta);
}

void aggregate(std::vector<RoundIncrement> increments, GlobalState& state, Exec exec) {
    for (const auto& inc : increments) {
        if (inc.schema_digest != state.schema.digest) {
            throw IncompatibleParametersError("increment from client " +
                                              std::to_string(inc.client_id) +
                                              " carries a foreign schema digest");
        }
        if (inc.round != state.round) {
            throw StaleIncrementError("increment from client " + std::to_string(inc.client_id) +
                                      " is for round " + std::to_string(inc.round) +
                                      ", current round is " + std::to_string(state.round));
        }
    }
    std::sort(increments.begin(), increments.end(),
              [](const RoundIncrement& a, const RoundIncrement& b) {
                  return a.client_id < b.client_id;
              });
    if (increments.size() != state.num_clients) {
        throw IncompleteRoundError("expected " + std::to_string(state.num_clients) +
                                   " increments, got " + std::to_string(increments.size()));
    }
    for (size_t i = 0; i < increments.size(); ++i) {
        if (increments[i].client_id != i) {
            throw IncompleteRoundError("round " + std::to_string(state.round) +
                                       " is missing an increment from client " +
                                       std::to_string(i));
        }
    }

    std::vector<const RoundIncrement*> sorted;
    sorted.reserve(increments.size());
    uint64_t bytes = 0;
    for (const auto& inc : increments) {
        sorted.push_back(&inc);
        bytes += serialized_size(increment_to_wire(inc));
    }
    const RealParams delta = mean_increments(sorted, state.schema, exec);
    apply_round_update(state.global, delta);
    state.round += 1;
    state.cumulative_uploaded_bytes += bytes;
}

Manner parse_manner(const std::string& text) {
    if (text == "single") return Manner::Single;
    if (text == "centralized") return Manner::Centralized;
    if (text == "federated") return Manner::Federated;
    throw ConfigError("mode", "unknown training manner '" + text + "'");
}

std::string to_string(Manner manner) {
    switch (manner) {
        case Manner::Single: return "single";
        case Manner::Centralized: return "centralized";
        case Manner::Federated: return "federated";
    }
    return "?";
}

namespace {

OptState<float> make_opt_state(const RunPlan& plan) {
    return plan.opt_kind == OptKind::Sgd
               ? OptState<float>::sgd(plan.schema, plan.base_lr, plan.schedule)
               : OptState<float>::adadelta(plan.schema, plan.base_lr, plan.schedule);
}

TrainSetup phase_setup(const RunPlan& plan, const PhasePlan& phase) {
    TrainSetup setup;
    setup.model = plan.model;
    setup.schema = plan.schema;
    setup.maps = plan.maps;
    setup.data = phase.data;
    setup.local_epochs = plan.local_epochs;
    setup.batch_size = plan.batch_size;
    setup.exec = plan.exec;
    return setup;
}

double eval_global(const RunPlan& plan, const PhasePlan& phase, const RealParams& global) {
    return evaluate(plan.model, plan.schema, global, *plan.maps, phase.eval_batch, plan.exec);
}

void check_plan(const RunPlan& plan) {
    if (plan.phases.empty()) throw ConfigError("rounds", "plan has no phases");
    if (plan.maps == nullptr) throw ConfigError("model", "plan has no index maps");
    const size_t clients = plan.phases.front().shards.size();
    if (clients == 0) throw ConfigError("clients", "need at least one client");
    for (const auto& phase : plan.phases) {
        if (phase.shards.size() != clients) {
            throw ConfigError("phases", "client count changes between phases");
        }
        if (phase.data == nullptr) throw ConfigError("phases", "phase without a dataset");
    }
}

}  // namespace

RunArtifacts run_federated(const RunPlan& plan) {
    check_plan(plan);
    const size_t num_clients = plan.num_clients();

    GlobalState state;
    state.schema = plan.schema;
    state.num_clients = num_clients;
    state.global = RealParams::zeros(plan.schema);
    init_params(plan.schema, state.global);

    std::unique_ptr<Exchange> exchange;
    std::vector<std::unique_ptr<ClientChannel>> channels;
    switch (plan.transport) {
        case TransportKind::Memory: {
            auto mem = std::make_unique<MemoryExchange>();
            for (size_t i = 0; i < num_clients; ++i) channels.push_back(mem->make_channel());
            exchange = std::move(mem);
            break;
        }
        case TransportKind::Fs: {
            auto fse = std::make_unique<FsExchange>(plan.fs_root, state.schema.digest);
            for (size_t i = 0; i < num_clients; ++i) channels.push_back(fse->make_channel());
            exchange = std::move(fse);
            break;
        }
        case TransportKind::Socket: {
            auto server = std::make_unique<SocketExchange>(state.schema.digest, plan.socket_port);
            for (size_t i = 0; i < num_clients; ++i) {
                auto ch = std::make_unique<SocketChannel>(plan.socket_host, server->port());
                ch->digest = state.schema.digest;
                ch->client_id = i;
                channels.push_back(std::move(ch));
            }
            exchange = std::move(server);
            break;
        }
    }

    std::vector<ClientState> clients(num_clients);
    for (size_t i = 0; i < num_clients; ++i) {
        clients[i].client_id = i;
        clients[i].params = RealParams::zeros(plan.schema);
        clients[i].data_seed = derive_client_seed(plan.master_seed, i);
        clients[i].opt = make_opt_state(plan);
    }

    RunArtifacts artifacts;
    uint64_t t = 0;
    for (const PhasePlan& phase : plan.phases) {
        const TrainSetup setup = phase_setup(plan, phase);
        for (size_t i = 0; i < num_clients; ++i) clients[i].shard = phase.shards[i];

        for (uint64_t r = 0; r < phase.rounds; ++r, ++t) {
            const auto round_start = std::chrono::steady_clock::now();
            exchange->broadcast(global_to_wire(state.global, t));

            std::vector<double> losses(num_clients, 0.0);
            std::vector<std::exception_ptr> failures(num_clients);
            {
                std::vector<std::thread> workers;
                workers.reserve(num_clients);
                for (size_t i = 0; i < num_clients; ++i) {
                    workers.emplace_back([&, i] {
                        try {
                            const WireMessage gmsg = channels[i]->fetch_global(t);
                            const RealParams downloaded = wire_to_global(gmsg);
                            LocalTrainResult res = local_train(clients[i], setup, downloaded, t);
                            losses[i] = res.mean_step_loss;
                            channels[i]->push_increment(increment_to_wire(res.increment));
                        } catch (...) {
                            failures[i] = std::current_exception();
                        }
                    });
                }
                for (auto& w : workers) w.join();
            }
            for (size_t i = 0; i < num_clients; ++i) {
                if (failures[i]) {
                    try {
                        std::rethrow_exception(failures[i]);
                    } catch (const std::exception& e) {
                        throw Error("round " + std::to_string(t) + ", client " +
                                    std::to_string(i) + ": " + e.what());
                    }
                }
            }

            std::vector<RoundIncrement> increments;
            increments.reserve(num_clients);
            for (size_t i = 0; i < num_clients; ++i) {
                increments.push_back(wire_to_increment(exchange->collect(t, i)));
            }
            aggregate(std::move(increments), state, plan.exec);

            MetricsRecord rec;
            rec.round = t;
            rec.cumulative_uploaded_bytes = state.cumulative_uploaded_bytes;
            rec.accuracy = eval_global(plan, phase, state.global);
            log_info("round %llu: acc %.4f, uploaded %llu bytes",
                     static_cast<unsigned long long>(t), rec.accuracy,
                     static_cast<unsigned long long>(rec.cumulative_uploaded_bytes));
            double loss_acc = 0.0;
            for (double l : losses) loss_acc += l;
            rec.mean_train_loss = loss_acc / static_cast<double>(num_clients);
            if (plan.record_wall_time) {
                rec.seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - round_start)
                        .count();
            }
            artifacts.metrics.push_back(rec);
        }
    }

    artifacts.final_params = std::move(state.global);
    return artifacts;
}

RunArtifacts run_local_manner(const RunPlan& plan, Manner manner, uint64_t single_client_id) {
    check_plan(plan);
    if (manner == Manner::Federated) {
        throw ConfigError("mode", "run_local_manner handles single and centralized only");
    }
    if (manner == Manner::Single && single_client_id >= plan.num_clients()) {
        throw ConfigError("single_client_id", "no such client");
    }

    GlobalState state;
    state.schema = plan.schema;
    state.num_clients = 1;
    state.global = RealParams::zeros(plan.schema);
    init_params(plan.schema, state.global);

    ClientState client;
    client.client_id = manner == Manner::Single ? single_client_id : 0;
    client.params = RealParams::zeros(plan.schema);
    client.data_seed = derive_client_seed(plan.master_seed, client.client_id);
    client.opt = make_opt_state(plan);

    RunArtifacts artifacts;
    uint64_t t = 0;
    for (const PhasePlan& phase : plan.phases) {
        const TrainSetup setup = phase_setup(plan, phase);
        if (manner == Manner::Single) {
            client.shard = phase.shards[single_client_id];
        } else {
            client.shard.clear();
            for (const auto& shard : phase.shards) {
                client.shard.insert(client.shard.end(), shard.begin(), shard.end());
            }
        }

        for (uint64_t r = 0; r < phase.rounds; ++r, ++t) {
            const auto round_start = std::chrono::steady_clock::now();
            LocalTrainResult res = local_train(client, setup, state.global, t);
            const RoundIncrement& inc = res.increment;
            const RealParams delta = mean_increments({&inc}, plan.schema, plan.exec);
            apply_round_update(state.global, delta);
            state.round += 1;

            MetricsRecord rec;
            rec.round = t;
            rec.cumulative_uploaded_bytes = 0;  // nothing crosses a transport
            rec.accuracy = eval_global(plan, phase, state.global);
            rec.mean_train_loss = res.mean_step_loss;
            if (plan.record_wall_time) {
                rec.seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - round_start)
                        .count();
            }
            artifacts.metrics.push_back(rec);
        }
    }
    artifacts.final_params = std::move(state.global);
    return artifacts;
}

}  // namespace fedhash
