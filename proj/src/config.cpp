#include "fedhash/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fedhash {

using nlohmann::json;

uint64_t RunConfig::total_rounds() const {
    if (phases.empty()) return rounds;
    uint64_t n = 0;
    for (const auto& p : phases) n += p.rounds;
    return n;
}

namespace {

// Applies "a.b.c=value" onto the JSON tree. Values parse as JSON when they
// can (numbers, booleans, arrays), otherwise they are taken as strings.
void apply_override(json& root, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override", "expected key=value, got '" + spec + "'");
    }
    const std::string key = spec.substr(0, eq);
    const std::string value = spec.substr(eq + 1);

    json* node = &root;
    size_t start = 0;
    for (;;) {
        const size_t dot = key.find('.', start);
        const std::string part = key.substr(start, dot - start);
        if (part.empty()) throw ConfigError("override", "empty key segment in '" + key + "'");
        if (dot == std::string::npos) {
            json parsed = json::parse(value, nullptr, false);
            (*node)[part] = parsed.is_discarded() ? json(value) : parsed;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

DatasetConfig parse_dataset(const json& j, const std::string& field) {
    DatasetConfig ds;
    if (!j.is_object()) throw ConfigError(field, "expected an object");
    if (j.contains("file")) ds.file = j.at("file").get<std::string>();
    if (j.contains("n")) ds.n = j.at("n").get<uint64_t>();
    if (j.contains("seed")) ds.seed = j.at("seed").get<uint64_t>();
    if (j.contains("p_flip")) ds.p_flip = j.at("p_flip").get<float>();
    if (j.contains("shift")) ds.max_shift = j.at("shift").get<uint32_t>();
    return ds;
}

LrSchedule parse_schedule(const json& j) {
    if (j.is_string()) {
        const std::string name = j.get<std::string>();
        if (name == "constant") return LrSchedule::constant();
        if (name == "step-5-30") return LrSchedule::step_5_30();
        throw ConfigError("lr_schedule", "unknown preset '" + name + "'");
    }
    if (!j.is_array()) throw ConfigError("lr_schedule", "expected a preset name or an array");
    LrSchedule sched;
    for (const auto& entry : j) {
        if (!entry.is_array() || entry.size() != 2) {
            throw ConfigError("lr_schedule", "each entry must be [round, multiplier]");
        }
        sched.entries.emplace_back(entry[0].get<uint64_t>(), entry[1].get<double>());
    }
    return sched;
}

RunConfig from_json(const json& j) {
    RunConfig cfg;
    if (j.contains("mode")) cfg.mode = parse_manner(j.at("mode").get<std::string>());
    if (j.contains("model")) {
        const json& m = j.at("model");
        if (m.contains("kind")) cfg.model.kind = parse_model_kind(m.at("kind").get<std::string>());
        if (m.contains("input_dim")) cfg.model.input_dim = m.at("input_dim").get<uint32_t>();
        if (m.contains("hidden_dim")) cfg.model.hidden_dim = m.at("hidden_dim").get<uint32_t>();
        if (m.contains("num_classes")) {
            cfg.model.num_classes = m.at("num_classes").get<uint32_t>();
        }
        if (m.contains("exempt_biases")) {
            cfg.model.exempt_biases = m.at("exempt_biases").get<bool>();
        }
    }
    if (j.contains("gamma")) {
        const json& g = j.at("gamma");
        try {
            cfg.gamma = g.is_string() ? parse_ratio(g.get<std::string>())
                                      : Ratio{g.get<uint32_t>(), 1};
        } catch (const InvalidSchemaError& e) {
            throw ConfigError("gamma", e.what());
        }
    }
    if (j.contains("clients")) cfg.clients = j.at("clients").get<uint32_t>();
    if (j.contains("local_epochs")) cfg.local_epochs = j.at("local_epochs").get<uint32_t>();
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<uint32_t>();
    if (j.contains("rounds")) cfg.rounds = j.at("rounds").get<uint64_t>();
    if (j.contains("optimizer")) {
        cfg.optimizer = parse_opt_kind(j.at("optimizer").get<std::string>());
    }
    if (j.contains("base_lr")) cfg.base_lr = j.at("base_lr").get<float>();
    if (j.contains("lr_schedule")) cfg.lr_schedule = parse_schedule(j.at("lr_schedule"));
    if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<uint64_t>();
    if (j.contains("transport")) {
        const json& t = j.at("transport");
        const std::string kind = t.value("kind", "memory");
        if (kind == "memory") {
            cfg.transport.kind = TransportKind::Memory;
        } else if (kind == "fs") {
            cfg.transport.kind = TransportKind::Fs;
            if (!t.contains("path")) throw ConfigError("transport.path", "fs transport needs one");
            cfg.transport.path = t.at("path").get<std::string>();
        } else if (kind == "socket") {
            cfg.transport.kind = TransportKind::Socket;
            const std::string addr = t.value("addr", "127.0.0.1:0");
            const auto colon = addr.rfind(':');
            if (colon == std::string::npos) {
                throw ConfigError("transport.addr", "expected host:port, got '" + addr + "'");
            }
            cfg.transport.host = addr.substr(0, colon);
            cfg.transport.port = static_cast<uint16_t>(std::stoul(addr.substr(colon + 1)));
        } else {
            throw ConfigError("transport.kind", "unknown transport '" + kind + "'");
        }
    }
    if (j.contains("dataset")) cfg.dataset = parse_dataset(j.at("dataset"), "dataset");
    if (j.contains("partition")) {
        const json& p = j.at("partition");
        const std::string kind = p.value("kind", "uniform");
        if (kind == "uniform") {
            cfg.partition.kind = PartitionKind::Uniform;
        } else if (kind == "label-skew") {
            cfg.partition.kind = PartitionKind::LabelSkew;
            cfg.partition.alpha = p.value("alpha", 0.5);
        } else {
            throw ConfigError("partition.kind", "unknown partition '" + kind + "'");
        }
    }
    if (j.contains("phases")) {
        for (const auto& p : j.at("phases")) {
            PhaseConfig phase;
            if (!p.contains("rounds")) throw ConfigError("phases", "each phase needs rounds");
            phase.rounds = p.at("rounds").get<uint64_t>();
            phase.dataset = p.contains("dataset") ? parse_dataset(p.at("dataset"), "phases.dataset")
                                                  : cfg.dataset;
            cfg.phases.push_back(std::move(phase));
        }
    }
    if (j.contains("single_client_id")) {
        cfg.single_client_id = j.at("single_client_id").get<uint32_t>();
    }
    if (j.contains("timing")) cfg.timing = j.at("timing").get<bool>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    return cfg;
}

}  // namespace

RunConfig parse_config_text(const std::string& json_text,
                            const std::vector<std::string>& overrides) {
    json j = json::parse(json_text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("<config>", "not valid JSON");
    for (const auto& o : overrides) apply_override(j, o);
    RunConfig cfg;
    try {
        cfg = from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError("<config>", e.what());
    }
    validate(cfg);
    return cfg;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), overrides);
}

void validate(const RunConfig& config) {
    if (config.model.input_dim == 0) throw ConfigError("model.input_dim", "must be positive");
    if (config.model.num_classes == 0) throw ConfigError("model.num_classes", "must be positive");
    if (config.model.kind == ModelKind::Mlp1h && config.model.hidden_dim == 0) {
        throw ConfigError("model.hidden_dim", "must be positive for mlp-1h");
    }
    if (config.gamma.num == 0 || config.gamma.num > config.gamma.den) {
        throw ConfigError("gamma", "must lie in (0, 1]");
    }
    if (config.clients == 0) throw ConfigError("clients", "need at least one client");
    if (config.local_epochs == 0) throw ConfigError("local_epochs", "must be positive");
    if (config.batch_size == 0) throw ConfigError("batch_size", "must be positive");
    if (config.single_client_id >= config.clients) {
        throw ConfigError("single_client_id", "no such client");
    }
    auto check_dataset = [](const DatasetConfig& ds, const std::string& field) {
        if (ds.file) return;  // geometry comes from the file
        if (ds.n == 0) throw ConfigError(field + ".n", "must be positive");
        if (!(ds.p_flip >= 0.0f && ds.p_flip < 0.5f)) {
            throw ConfigError(field + ".p_flip", "must lie in [0, 0.5)");
        }
        if (ds.max_shift > 2) throw ConfigError(field + ".shift", "must be 0, 1 or 2");
    };
    check_dataset(config.dataset, "dataset");
    for (const auto& phase : config.phases) {
        if (phase.rounds == 0) throw ConfigError("phases.rounds", "must be positive");
        check_dataset(phase.dataset, "phases.dataset");
    }
    if (config.partition.kind == PartitionKind::LabelSkew && !(config.partition.alpha > 0.0)) {
        throw ConfigError("partition.alpha", "must be positive");
    }
    uint64_t prev_round = 0;
    bool first = true;
    for (const auto& [round, mult] : config.lr_schedule.entries) {
        if (!first && round <= prev_round) {
            throw ConfigError("lr_schedule", "rounds must be strictly ascending");
        }
        if (!(mult > 0.0)) throw ConfigError("lr_schedule", "multipliers must be positive");
        prev_round = round;
        first = false;
    }
}

}  // namespace fedhash
