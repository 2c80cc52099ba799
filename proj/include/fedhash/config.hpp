#pragma once

// Run configuration: a JSON file with explicitly named keys plus key=value
// overrides. Validation happens before any work and reports the offending
// field.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedhash/federated.hpp"

namespace fedhash {

struct DatasetConfig {
    std::optional<std::string> file;  // load an exported dataset instead of generating
    uint64_t n = 5000;
    uint64_t seed = 7;
    float p_flip = 0.05f;
    uint32_t max_shift = 1;
};

struct PhaseConfig {
    uint64_t rounds = 0;
    DatasetConfig dataset;
};

struct TransportConfig {
    TransportKind kind = TransportKind::Memory;
    std::string path;                // fs
    std::string host = "127.0.0.1";  // socket
    uint16_t port = 0;               // socket; 0 picks an ephemeral port
};

struct PartitionConfig {
    PartitionKind kind = PartitionKind::Uniform;
    double alpha = 0.5;  // label-skew concentration
};

struct RunConfig {
    Manner mode = Manner::Federated;
    ModelSpec model{ModelKind::Mlp1h, 64, 32, 10, true};
    Ratio gamma = kRatioOne;
    uint32_t clients = 5;
    uint32_t local_epochs = 3;
    uint32_t batch_size = 64;
    uint64_t rounds = 10;
    OptKind optimizer = OptKind::Adadelta;
    float base_lr = 1.0f;
    LrSchedule lr_schedule = LrSchedule::constant();
    uint64_t master_seed = 1;
    TransportConfig transport;
    DatasetConfig dataset;
    PartitionConfig partition;
    std::vector<PhaseConfig> phases;  // optional; overrides rounds/dataset when present
    uint32_t single_client_id = 0;
    bool timing = false;  // wall-clock seconds in the CSV; breaks re-run byte equality
    std::string output_dir = ".";

    uint64_t total_rounds() const;
};

// Loads and validates a config file; overrides are dotted key=value pairs
// applied before validation, e.g. "gamma=1/4" or "dataset.n=2000".
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});
RunConfig parse_config_text(const std::string& json_text,
                            const std::vector<std::string>& overrides = {});

void validate(const RunConfig& config);

}  // namespace fedhash
