#pragma once

// Experiment driver: turns a validated RunConfig into datasets, partitions,
// schema, and maps, runs the requested training manner, and writes metrics
// CSVs.

#include <string>
#include <vector>

#include "fedhash/config.hpp"
#include "fedhash/metrics.hpp"

namespace fedhash {

// Owns everything a RunPlan points into.
class Experiment {
  public:
    explicit Experiment(RunConfig config);

    // Phase plans point into the owned datasets.
    Experiment(const Experiment&) = delete;
    Experiment& operator=(const Experiment&) = delete;

    const RunConfig& config() const { return config_; }
    const ParameterSchema& schema() const { return schema_; }
    const IndexMaps& maps() const { return maps_; }

    // Runs one training manner; identical seeds across manners, so
    // comparisons are controlled.
    RunArtifacts run(Manner manner, uint64_t single_client_id = 0) const;

    // Exact accounting for the configured model and gamma.
    uint64_t real_parameter_count() const { return schema_.total_real_size(); }
    uint64_t virtual_parameter_count() const { return schema_.total_virtual_size(); }
    // Serialized upload bytes for one full round (all clients).
    uint64_t upload_bytes_per_round() const;
    // 1 - real/virtual over the whole model, exempt layers included in both
    // totals.
    double reduction_fraction() const;

  private:
    RunPlan base_plan() const;

    RunConfig config_;
    ParameterSchema schema_;
    IndexMaps maps_;
    std::vector<GlyphDataset> datasets_;  // one per phase
    std::vector<PhasePlan> phases_;
};

// cmd_run: one manner (config.mode), or all three when all_manners is set.
// Writes metrics_<manner>.csv (and metrics_single_client{i}.csv per client
// when all_manners), final params as a wire-format file, and prints a
// summary. Returns the process exit code.
int cmd_run(const RunConfig& config, bool all_manners);

struct GammaSweepRow {
    Ratio gamma;
    uint64_t real_params = 0;
    uint64_t virtual_params = 0;
    double reduction_pct = 0.0;
    uint64_t upload_bytes_per_round = 0;
    double final_accuracy = 0.0;
};

// cmd_sweep-gamma: federated run per gamma, comparison table on stdout and
// sweep.csv plus per-gamma metrics files in the output directory.
int cmd_sweep_gamma(const RunConfig& base, const std::vector<Ratio>& gammas);

// cmd_curve: runs every config and merges the per-round rows keyed by
// cumulative uploaded bytes into one plot-ready CSV.
int cmd_curve(const std::vector<RunConfig>& configs, const std::vector<std::string>& labels,
              const std::string& output_path);

}  // namespace fedhash
