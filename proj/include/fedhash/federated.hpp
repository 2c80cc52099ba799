#pragma once

// Round orchestration: broadcast the global parameters, train locally for a
// fixed number of epochs, upload increments, aggregate by unweighted mean.
// Aggregation always consumes increments in ascending client id with 64-bit
// accumulation, so results are independent of arrival order and scheduling.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fedhash/dataset.hpp"
#include "fedhash/model.hpp"
#include "fedhash/optim.hpp"
#include "fedhash/transport.hpp"

namespace fedhash {

struct GlobalState {
    uint64_t round = 0;
    RealParams global;
    ParameterSchema schema;
    uint64_t num_clients = 1;
    uint64_t cumulative_uploaded_bytes = 0;
};

struct ClientState {
    uint64_t client_id = 0;
    RealParams params;
    std::vector<uint32_t> shard;  // indices into the shared dataset
    OptState<float> opt;
    uint64_t data_seed = 0;
};

// Everything read-only that local training needs during one phase.
struct TrainSetup {
    ModelSpec model;
    ParameterSchema schema;
    const IndexMaps* maps = nullptr;
    const GlyphDataset* data = nullptr;
    uint32_t local_epochs = 3;
    uint32_t batch_size = 64;
    Exec exec = Exec::Auto;
};

struct LocalTrainResult {
    RoundIncrement increment;
    double mean_step_loss = 0.0;
};

// Overwrites the client's parameters with the downloaded global ones, runs
// local_epochs epochs of shuffled minibatches (epoch order seeded by the
// client's data seed, the round, and the epoch; final batch may be partial),
// and returns the elementwise increment (trained minus round-start). The
// client keeps its trained parameters and advanced optimizer state.
LocalTrainResult local_train(ClientState& client, const TrainSetup& setup,
                             const RealParams& global, uint64_t round);

// Unweighted elementwise mean of the increments, which must arrive sorted by
// ascending client id. 64-bit accumulation; result layout equals RealParams.
RealParams mean_increments(const std::vector<const RoundIncrement*>& sorted_increments,
                           const ParameterSchema& schema, Exec exec = Exec::Auto);

// global += delta, exact elementwise f32 addition.
void apply_round_update(RealParams& global, const RealParams& delta);

// Validates one increment per registered client for the current round, then
// applies the mean update, advances the round, and meters the serialized
// upload bytes. Throws StaleIncrementError on a wrong round,
// IncompatibleParametersError (naming the client) on a digest mismatch, and
// IncompleteRoundError when a client is missing or duplicated.
void aggregate(std::vector<RoundIncrement> increments, GlobalState& state,
               Exec exec = Exec::Auto);

enum class Manner { Single, Centralized, Federated };

Manner parse_manner(const std::string& text);
std::string to_string(Manner manner);

struct MetricsRecord {
    uint64_t round = 0;
    uint64_t cumulative_uploaded_bytes = 0;
    double accuracy = 0.0;
    double mean_train_loss = 0.0;
    double seconds = 0.0;
};

enum class TransportKind { Memory, Fs, Socket };

// One contiguous block of rounds over one dataset. Most runs have a single
// phase; multi-phase runs swap the training data at phase boundaries while
// the round counter, optimizer state, and learning-rate schedule continue.
struct PhasePlan {
    uint64_t rounds = 0;
    const GlyphDataset* data = nullptr;
    std::vector<std::vector<uint32_t>> shards;  // one per client
    Batch eval_batch;                           // held-out split of this phase's data
};

struct RunPlan {
    ModelSpec model;
    ParameterSchema schema;
    const IndexMaps* maps = nullptr;
    std::vector<PhasePlan> phases;
    uint32_t local_epochs = 3;
    uint32_t batch_size = 64;
    uint64_t master_seed = 0;
    OptKind opt_kind = OptKind::Adadelta;
    float base_lr = 1.0f;
    LrSchedule schedule = LrSchedule::constant();

    // Federated only.
    TransportKind transport = TransportKind::Memory;
    std::string fs_root;
    std::string socket_host = "127.0.0.1";
    uint16_t socket_port = 0;  // 0 -> ephemeral

    bool record_wall_time = false;
    Exec exec = Exec::Auto;

    uint64_t total_rounds() const {
        uint64_t n = 0;
        for (const auto& p : phases) n += p.rounds;
        return n;
    }
    size_t num_clients() const { return phases.empty() ? 0 : phases.front().shards.size(); }
};

struct RunArtifacts {
    RealParams final_params;
    std::vector<MetricsRecord> metrics;

    double final_accuracy() const { return metrics.empty() ? 0.0 : metrics.back().accuracy; }
};

// Runs the full federated loop: per round, broadcast through the configured
// transport, train all clients concurrently, collect and aggregate the
// increments, evaluate the global model on the current phase's held-out
// batch. A failure in any client aborts the round with the client named.
RunArtifacts run_federated(const RunPlan& plan);

// Single-manner and centralized-manner runs: the same round engine with one
// participant and no transport, so uploaded bytes stay zero. Single trains on
// that client's shard; centralized trains on the union of all shards.
RunArtifacts run_local_manner(const RunPlan& plan, Manner manner, uint64_t single_client_id = 0);

}  // namespace fedhash
