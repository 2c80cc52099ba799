#include "fedhash/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fedhash/prng.hpp"

namespace fedhash {

namespace fs = std::filesystem;

namespace {

GlyphDataset load_or_generate(const DatasetConfig& ds) {
    if (ds.file) return read_glyph_file(*ds.file);
    return generate_glyphs(ds.n, ds.seed, ds.p_flip, ds.max_shift);
}

uint64_t partition_seed(uint64_t master_seed, size_t phase_index) {
    return mix64(mix64(master_seed ^ kDataSeedTag) ^ phase_index);
}

}  // namespace

Experiment::Experiment(RunConfig config) : config_(std::move(config)) {
    validate(config_);
    schema_ = build_schema(config_.model.layers(), config_.gamma, config_.master_seed);
    maps_ = build_index_maps(schema_);

    std::vector<PhaseConfig> phase_cfgs = config_.phases;
    if (phase_cfgs.empty()) {
        phase_cfgs.push_back({config_.rounds, config_.dataset});
    }
    datasets_.reserve(phase_cfgs.size());
    for (size_t pi = 0; pi < phase_cfgs.size(); ++pi) {
        datasets_.push_back(load_or_generate(phase_cfgs[pi].dataset));
        const GlyphDataset& data = datasets_.back();

        const TrainEvalSplit split = train_eval_split(data.size());
        if (split.eval.empty() || split.train.size() < config_.clients) {
            throw ConfigError("dataset.n", "too few examples for " +
                                               std::to_string(config_.clients) +
                                               " clients plus a held-out split");
        }
        const uint64_t pseed = partition_seed(config_.master_seed, pi);
        Partition part;
        if (config_.partition.kind == PartitionKind::Uniform) {
            part = split_uniform(split.train.size(), config_.clients, pseed);
        } else {
            std::vector<uint32_t> train_labels(split.train.size());
            for (size_t i = 0; i < split.train.size(); ++i) {
                train_labels[i] = data.labels[split.train[i]];
            }
            part = split_label_skew(train_labels, config_.clients, config_.partition.alpha, pseed);
        }

        PhasePlan phase;
        phase.rounds = phase_cfgs[pi].rounds;
        phase.data = &data;
        phase.shards.resize(part.shards.size());
        for (size_t c = 0; c < part.shards.size(); ++c) {
            phase.shards[c].reserve(part.shards[c].size());
            for (uint32_t local : part.shards[c]) {
                phase.shards[c].push_back(split.train[local]);
            }
        }
        phase.eval_batch = data.batch(split.eval);
        phases_.push_back(std::move(phase));
    }
}

RunPlan Experiment::base_plan() const {
    RunPlan plan;
    plan.model = config_.model;
    plan.schema = schema_;
    plan.maps = &maps_;
    plan.phases = phases_;
    plan.local_epochs = config_.local_epochs;
    plan.batch_size = config_.batch_size;
    plan.master_seed = config_.master_seed;
    plan.opt_kind = config_.optimizer;
    plan.base_lr = config_.base_lr;
    plan.schedule = config_.lr_schedule;
    plan.transport = config_.transport.kind;
    plan.fs_root = config_.transport.path;
    plan.socket_host = config_.transport.host;
    plan.socket_port = config_.transport.port;
    plan.record_wall_time = config_.timing;
    return plan;
}

RunArtifacts Experiment::run(Manner manner, uint64_t single_client_id) const {
    const RunPlan plan = base_plan();
    if (manner == Manner::Federated) return run_federated(plan);
    return run_local_manner(plan, manner, single_client_id);
}

uint64_t Experiment::upload_bytes_per_round() const {
    WireMessage probe;
    probe.kind = MsgKind::Increment;
    probe.schema_digest = schema_.digest;
    probe.payload.reserve(schema_.layers.size());
    for (const auto& layer : schema_.layers) {
        probe.payload.emplace_back(layer.real_size, 0.0f);
    }
    return config_.clients * serialized_size(probe);
}

double Experiment::reduction_fraction() const {
    const double real = static_cast<double>(schema_.total_real_size());
    const double virt = static_cast<double>(schema_.total_virtual_size());
    return 1.0 - real / virt;
}

namespace {

void write_params_file(const std::string& path, const RealParams& params) {
    const std::vector<uint8_t> bytes = serialize(global_to_wire(params, 0));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

double final_acc_from_csv(const std::string& path) {
    const auto metrics = read_metrics_csv(path);
    return metrics.empty() ? 0.0 : metrics.back().accuracy;
}

std::string metrics_path(const RunConfig& cfg, const std::string& stem) {
    return (fs::path(cfg.output_dir) / (stem + ".csv")).string();
}

}  // namespace

int cmd_run(const RunConfig& config, bool all_manners) {
    if (!fs::is_directory(config.output_dir)) {
        std::fprintf(stderr, "error: output dir '%s' does not exist\n",
                     config.output_dir.c_str());
        return 2;
    }
    Experiment experiment(config);

    if (!all_manners) {
        const Manner manner = config.mode;
        const RunArtifacts art = experiment.run(manner, config.single_client_id);
        const std::string csv = metrics_path(config, "metrics_" + to_string(manner));
        write_metrics_csv(csv, art.metrics);
        write_params_file(
            (fs::path(config.output_dir) / ("params_" + to_string(manner) + ".bin")).string(),
            art.final_params);
        const std::string examples = manner == Manner::Single
                                         ? "shard " + std::to_string(config.single_client_id)
                                         : std::string("all");
        std::printf("manner %s: rounds=%llu examples=%s final_acc=%.4f uploaded_bytes=%llu\n",
                    to_string(manner).c_str(),
                    static_cast<unsigned long long>(config.total_rounds()), examples.c_str(),
                    art.final_accuracy(),
                    static_cast<unsigned long long>(
                        art.metrics.empty() ? 0 : art.metrics.back().cumulative_uploaded_bytes));
        std::printf("metrics: %s\n", csv.c_str());
        return 0;
    }

    // All three manners under identical seeds; single is run once per client
    // and reported as the mean.
    std::vector<std::string> single_csvs;
    for (uint32_t i = 0; i < config.clients; ++i) {
        const RunArtifacts art = experiment.run(Manner::Single, i);
        const std::string csv =
            metrics_path(config, "metrics_single_client" + std::to_string(i));
        write_metrics_csv(csv, art.metrics);
        single_csvs.push_back(csv);
    }
    const RunArtifacts sum_art = experiment.run(Manner::Centralized);
    const std::string sum_csv = metrics_path(config, "metrics_centralized");
    write_metrics_csv(sum_csv, sum_art.metrics);

    const RunArtifacts fed_art = experiment.run(Manner::Federated);
    const std::string fed_csv = metrics_path(config, "metrics_federated");
    write_metrics_csv(fed_csv, fed_art.metrics);
    write_params_file((fs::path(config.output_dir) / "params_federated.bin").string(),
                      fed_art.final_params);

    // Summary values come back out of the CSVs, not the in-memory runs.
    double acc_single = 0.0;
    for (const auto& csv : single_csvs) acc_single += final_acc_from_csv(csv);
    acc_single /= static_cast<double>(single_csvs.size());
    const double acc_sum = final_acc_from_csv(sum_csv);
    const double acc_fed = final_acc_from_csv(fed_csv);

    std::printf("manner      accuracy\n");
    std::printf("single      %.4f (mean over %u clients)\n", acc_single, config.clients);
    std::printf("centralized %.4f\n", acc_sum);
    std::printf("federated   %.4f\n", acc_fed);
    std::printf("gap |federated - centralized| = %.4f\n", std::abs(acc_fed - acc_sum));
    return 0;
}

int cmd_sweep_gamma(const RunConfig& base, const std::vector<Ratio>& gammas) {
    if (!fs::is_directory(base.output_dir)) {
        std::fprintf(stderr, "error: output dir '%s' does not exist\n", base.output_dir.c_str());
        return 2;
    }
    std::vector<GammaSweepRow> rows;
    for (const Ratio gamma : gammas) {
        RunConfig cfg = base;
        cfg.gamma = gamma;
        cfg.mode = Manner::Federated;
        Experiment experiment(cfg);
        const RunArtifacts art = experiment.run(Manner::Federated);
        const std::string stem =
            "metrics_gamma_" + std::to_string(gamma.num) + "_" + std::to_string(gamma.den);
        write_metrics_csv(metrics_path(cfg, stem), art.metrics);

        GammaSweepRow row;
        row.gamma = gamma;
        row.real_params = experiment.real_parameter_count();
        row.virtual_params = experiment.virtual_parameter_count();
        row.reduction_pct = experiment.reduction_fraction() * 100.0;
        row.upload_bytes_per_round = experiment.upload_bytes_per_round();
        row.final_accuracy = art.final_accuracy();
        rows.push_back(row);
    }

    const std::string sweep_csv = (fs::path(base.output_dir) / "sweep.csv").string();
    {
        std::ofstream out(sweep_csv, std::ios::trunc);
        out << "gamma,real_params,virtual_params,reduction_pct,bytes_per_round,final_acc\n";
        char line[192];
        for (const auto& r : rows) {
            std::snprintf(line, sizeof(line), "%s,%llu,%llu,%.2f,%llu,%.9g\n",
                          to_string(r.gamma).c_str(),
                          static_cast<unsigned long long>(r.real_params),
                          static_cast<unsigned long long>(r.virtual_params), r.reduction_pct,
                          static_cast<unsigned long long>(r.upload_bytes_per_round),
                          r.final_accuracy);
            out << line;
        }
    }

    std::printf("%-8s %12s %12s %10s %14s %10s\n", "gamma", "real", "virtual", "reduction",
                "bytes/round", "acc");
    for (const auto& r : rows) {
        std::printf("%-8s %12llu %12llu %9.2f%% %14llu %10.4f\n", to_string(r.gamma).c_str(),
                    static_cast<unsigned long long>(r.real_params),
                    static_cast<unsigned long long>(r.virtual_params), r.reduction_pct,
                    static_cast<unsigned long long>(r.upload_bytes_per_round), r.final_accuracy);
    }
    std::printf("sweep table: %s\n", sweep_csv.c_str());
    return 0;
}

int cmd_curve(const std::vector<RunConfig>& configs, const std::vector<std::string>& labels,
              const std::string& output_path) {
    struct CurveRow {
        std::string label;
        MetricsRecord rec;
    };
    std::vector<CurveRow> rows;
    for (size_t i = 0; i < configs.size(); ++i) {
        Experiment experiment(configs[i]);
        const RunArtifacts art = experiment.run(configs[i].mode, configs[i].single_client_id);
        for (const auto& rec : art.metrics) {
            rows.push_back({labels[i], rec});
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const CurveRow& a, const CurveRow& b) {
        return a.rec.cumulative_uploaded_bytes < b.rec.cumulative_uploaded_bytes;
    });

    std::ofstream out(output_path, std::ios::trunc);
    if (!out) {
        std::fprintf(stderr, "error: cannot open '%s' for writing\n", output_path.c_str());
        return 2;
    }
    out << "label,bytes,round,acc,loss,secs\n";
    char line[224];
    for (const auto& row : rows) {
        std::snprintf(line, sizeof(line), "%s,%llu,%llu,%.9g,%.9g,%.3f\n", row.label.c_str(),
                      static_cast<unsigned long long>(row.rec.cumulative_uploaded_bytes),
                      static_cast<unsigned long long>(row.rec.round), row.rec.accuracy,
                      row.rec.mean_train_loss, row.rec.seconds);
        out << line;
    }
    std::printf("curve: %s (%zu rows from %zu runs)\n", output_path.c_str(), rows.size(),
                configs.size());
    return 0;
}

}  // namespace fedhash
