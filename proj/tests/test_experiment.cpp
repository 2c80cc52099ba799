#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedhash/experiment.hpp"

using namespace fedhash;

namespace {

const char* kBaseConfig = R"JSON({
  "mode": "federated",
  "model": {"kind": "mlp-1h", "input_dim": 64, "hidden_dim": 16, "num_classes": 10},
  "gamma": "1/4",
  "clients": 3,
  "local_epochs": 2,
  "batch_size": 32,
  "rounds": 3,
  "optimizer": "adadelta",
  "base_lr": 1.0,
  "lr_schedule": "step-5-30",
  "master_seed": 11,
  "dataset": {"n": 500, "seed": 7, "p_flip": 0.05, "shift": 1},
  "partition": {"kind": "uniform"},
  "output_dir": "."
})JSON";

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("config parsing, defaults, and overrides") {
    const RunConfig cfg = parse_config_text(kBaseConfig);
    CHECK(cfg.mode == Manner::Federated);
    CHECK(cfg.gamma == Ratio{1, 4});
    CHECK(cfg.clients == 3);
    CHECK(cfg.lr_schedule.entries.size() == 3);
    CHECK(cfg.transport.kind == TransportKind::Memory);
    CHECK(cfg.timing == false);

    SUBCASE("defaults fill untouched fields") {
        const RunConfig d = parse_config_text("{}");
        CHECK(d.clients == 5);
        CHECK(d.local_epochs == 3);
        CHECK(d.batch_size == 64);
        CHECK(d.model.kind == ModelKind::Mlp1h);
        CHECK(d.optimizer == OptKind::Adadelta);
    }
    SUBCASE("overrides rewrite nested keys") {
        const RunConfig o = parse_config_text(
            kBaseConfig, {"gamma=1/2", "dataset.n=300", "mode=single", "clients=2"});
        CHECK(o.gamma == Ratio{1, 2});
        CHECK(o.dataset.n == 300);
        CHECK(o.mode == Manner::Single);
        CHECK(o.clients == 2);
    }
    SUBCASE("validation errors carry the field name") {
        try {
            parse_config_text(kBaseConfig, {"gamma=3/2"});
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.field_name == "gamma");
        }
        CHECK_THROWS_AS(parse_config_text(kBaseConfig, {"clients=0"}), ConfigError);
        CHECK_THROWS_AS(parse_config_text(kBaseConfig, {"dataset.p_flip=0.6"}), ConfigError);
        CHECK_THROWS_AS(parse_config_text(kBaseConfig, {"batch_size=0"}), ConfigError);
        CHECK_THROWS_AS(parse_config_text(kBaseConfig, {"model.kind=resnet"}), ConfigError);
        CHECK_THROWS_AS(parse_config_text(kBaseConfig, {"lr_schedule=[[5,0.1],[0,1.0]]"}),
                        ConfigError);
        CHECK_THROWS_AS(parse_config_text(kBaseConfig, {"single_client_id=99"}), ConfigError);
        CHECK_THROWS_AS(parse_config_text("not json"), ConfigError);
    }
    SUBCASE("socket transport address") {
        const RunConfig s =
            parse_config_text(kBaseConfig, {"transport.kind=socket", "transport.addr=127.0.0.1:0"});
        CHECK(s.transport.kind == TransportKind::Socket);
        CHECK(s.transport.host == "127.0.0.1");
        CHECK(s.transport.port == 0);
    }
}

TEST_CASE("metrics csv: deterministic bytes and parse round trip") {
    std::vector<MetricsRecord> rows = {
        {0, 100, 0.5, 2.302585093, 0.0},
        {1, 200, 0.625, 1.75, 0.0},
    };
    const std::string text = format_metrics_csv(rows);
    CHECK(text.substr(0, text.find('\n')) == "round,bytes,acc,loss,secs");

    const auto tmp = std::filesystem::temp_directory_path() / "fedhash_metrics.csv";
    write_metrics_csv(tmp.string(), rows);
    const auto back = read_metrics_csv(tmp.string());
    REQUIRE(back.size() == 2);
    CHECK(back[1].cumulative_uploaded_bytes == 200);
    CHECK(back[1].accuracy == 0.625);
    CHECK(format_metrics_csv(back) == text);
    std::filesystem::remove(tmp);
}

TEST_CASE("experiment accounting: counts, bytes, reduction") {
    RunConfig cfg = parse_config_text(kBaseConfig);
    Experiment ex(cfg);
    // mlp-1h 64 -> 16 -> 10, biases exempt, gamma = 1/4:
    //   w1: 1024 -> 256, b1: 16, w2: 160 -> 40, b2: 10
    CHECK(ex.virtual_parameter_count() == 1024 + 16 + 160 + 10);
    CHECK(ex.real_parameter_count() == 256 + 16 + 40 + 10);
    CHECK(ex.upload_bytes_per_round() == 3ull * (40 + 8 * 4 + 4 * (256 + 16 + 40 + 10)));
    CHECK(ex.reduction_fraction() ==
          doctest::Approx(1.0 - 322.0 / 1210.0).epsilon(1e-12));

    SUBCASE("gamma=1 reduces nothing") {
        RunConfig c1 = parse_config_text(kBaseConfig, {"gamma=1"});
        Experiment e1(c1);
        CHECK(e1.real_parameter_count() == e1.virtual_parameter_count());
        CHECK(e1.reduction_fraction() == 0.0);
    }
    SUBCASE("single compressed layer T=1000 at 1/4 reduces 75 percent") {
        const ParameterSchema schema = build_schema({{"w", {1000}, false}}, {1, 4}, 0);
        CHECK(schema.total_real_size() == 250);
        CHECK(1.0 - 250.0 / 1000.0 == 0.75);
    }
}

TEST_CASE("same config and seed reproduce the metrics CSV byte for byte") {
    const auto dir = fresh_dir("fedhash_determinism");
    RunConfig cfg = parse_config_text(kBaseConfig);
    cfg.output_dir = dir.string();

    REQUIRE(cmd_run(cfg, false) == 0);
    const std::string first = slurp(dir / "metrics_federated.csv");
    REQUIRE(cmd_run(cfg, false) == 0);
    const std::string second = slurp(dir / "metrics_federated.csv");
    CHECK(first == second);
    CHECK(first.find("round,bytes,acc,loss,secs") == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("cmd_run: missing output dir exits 2; single trains one shard") {
    RunConfig cfg = parse_config_text(kBaseConfig);
    cfg.output_dir = "/nonexistent/fedhash_nowhere";
    CHECK(cmd_run(cfg, false) == 2);

    const auto dir = fresh_dir("fedhash_single");
    RunConfig solo = parse_config_text(kBaseConfig, {"mode=single", "clients=5"});
    solo.output_dir = dir.string();
    REQUIRE(cmd_run(solo, false) == 0);
    CHECK(std::filesystem::exists(dir / "metrics_single.csv"));
    // One shard of the 400 training examples split five ways.
    Experiment ex(solo);
    const RunArtifacts art = ex.run(Manner::Single, 0);
    CHECK(art.metrics.size() == solo.rounds);
    std::filesystem::remove_all(dir);
}

TEST_CASE("cmd_run --all writes every manner and a gap recomputable from the CSVs") {
    const auto dir = fresh_dir("fedhash_all");
    RunConfig cfg = parse_config_text(kBaseConfig, {"clients=2", "rounds=2"});
    cfg.output_dir = dir.string();
    REQUIRE(cmd_run(cfg, true) == 0);

    CHECK(std::filesystem::exists(dir / "metrics_single_client0.csv"));
    CHECK(std::filesystem::exists(dir / "metrics_single_client1.csv"));
    CHECK(std::filesystem::exists(dir / "metrics_centralized.csv"));
    CHECK(std::filesystem::exists(dir / "metrics_federated.csv"));

    const auto fed = read_metrics_csv((dir / "metrics_federated.csv").string());
    const auto cen = read_metrics_csv((dir / "metrics_centralized.csv").string());
    CHECK(fed.size() == 2);
    CHECK(cen.size() == 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("sweep-gamma reports exact counts per ratio") {
    const auto dir = fresh_dir("fedhash_sweep");
    RunConfig cfg = parse_config_text(kBaseConfig, {"rounds=1", "clients=2"});
    cfg.output_dir = dir.string();
    REQUIRE(cmd_sweep_gamma(cfg, {Ratio{1, 1}, Ratio{1, 4}}) == 0);

    CHECK(std::filesystem::exists(dir / "sweep.csv"));
    CHECK(std::filesystem::exists(dir / "metrics_gamma_1_1.csv"));
    CHECK(std::filesystem::exists(dir / "metrics_gamma_1_4.csv"));

    std::ifstream in(dir / "sweep.csv");
    std::string header, row1, row4;
    std::getline(in, header);
    std::getline(in, row1);
    std::getline(in, row4);
    CHECK(header == "gamma,real_params,virtual_params,reduction_pct,bytes_per_round,final_acc");
    CHECK(row1.rfind("1,1210,1210,0.00,", 0) == 0);
    CHECK(row4.rfind("1/4,322,1210,73.39,", 0) == 0);  // 1 - 322/1210 = 73.388..%
    std::filesystem::remove_all(dir);
}

TEST_CASE("curve merges runs keyed by uploaded bytes") {
    const auto dir = fresh_dir("fedhash_curve");
    RunConfig a = parse_config_text(kBaseConfig, {"rounds=2", "clients=2"});
    a.output_dir = dir.string();
    RunConfig b = parse_config_text(kBaseConfig, {"rounds=2", "clients=2", "gamma=1"});
    b.output_dir = dir.string();

    const std::string merged = (dir / "curve.csv").string();
    REQUIRE(cmd_curve({a, b}, {"quarter", "full"}, merged) == 0);

    std::ifstream in(merged);
    std::string header;
    std::getline(in, header);
    CHECK(header == "label,bytes,round,acc,loss,secs");
    uint64_t prev_bytes = 0;
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const uint64_t bytes = std::stoull(line.substr(c1 + 1, c2 - c1 - 1));
        CHECK(bytes >= prev_bytes);
        prev_bytes = bytes;
        ++rows;
    }
    CHECK(rows == 4);
    std::filesystem::remove_all(dir);
}

TEST_CASE("a single-run curve carries the same rows as its metrics file") {
    const auto dir = fresh_dir("fedhash_curve_one");
    RunConfig cfg = parse_config_text(kBaseConfig, {"rounds=3", "clients=2"});
    cfg.output_dir = dir.string();

    Experiment ex(cfg);
    const RunArtifacts art = ex.run(Manner::Federated);
    write_metrics_csv((dir / "metrics_federated.csv").string(), art.metrics);

    const std::string merged = (dir / "curve.csv").string();
    REQUIRE(cmd_curve({cfg}, {"only"}, merged) == 0);

    const auto metrics = read_metrics_csv((dir / "metrics_federated.csv").string());
    std::ifstream in(merged);
    std::string line;
    std::getline(in, line);  // header
    size_t i = 0;
    while (std::getline(in, line)) {
        REQUIRE(i < metrics.size());
        std::stringstream want;
        char buf[160];
        std::snprintf(buf, sizeof(buf), "only,%llu,%llu,%.9g,%.9g,%.3f",
                      static_cast<unsigned long long>(metrics[i].cumulative_uploaded_bytes),
                      static_cast<unsigned long long>(metrics[i].round), metrics[i].accuracy,
                      metrics[i].mean_train_loss, metrics[i].seconds);
        CHECK(line == buf);
        ++i;
    }
    CHECK(i == metrics.size());
    std::filesystem::remove_all(dir);
}

TEST_CASE("learnability floor: linear model, 20 epochs centralized, default data") {
    // Calibrated once at 0.961 on these exact settings; the floor asserts
    // the frozen 90% bound.
    RunConfig cfg = parse_config_text(R"JSON({
      "mode": "centralized",
      "model": {"kind": "linear-softmax", "input_dim": 64, "num_classes": 10},
      "gamma": "1",
      "clients": 1,
      "local_epochs": 1,
      "batch_size": 64,
      "rounds": 20,
      "optimizer": "adadelta",
      "base_lr": 1.0,
      "master_seed": 1,
      "dataset": {"n": 5000, "seed": 7, "p_flip": 0.05, "shift": 1}
    })JSON");
    Experiment ex(cfg);
    const double acc = ex.run(Manner::Centralized).final_accuracy();
    CHECK(acc >= 0.90);
}

TEST_CASE("an exported dataset file feeds a run via dataset.file") {
    const auto dir = fresh_dir("fedhash_dataset_file");
    const auto file = dir / "glyphs.bin";
    write_glyph_file(file.string(), generate_glyphs(400, 3, 0.05f, 1));

    RunConfig cfg = parse_config_text(
        kBaseConfig, {"rounds=2", "clients=2", "dataset.file=" + file.string()});
    Experiment ex(cfg);
    const RunArtifacts art = ex.run(Manner::Federated);
    CHECK(art.metrics.size() == 2);

    // Same file, same seeds: identical runs.
    Experiment ex2(cfg);
    const RunArtifacts art2 = ex2.run(Manner::Federated);
    CHECK(art.final_accuracy() == art2.final_accuracy());
    std::filesystem::remove_all(dir);
}

TEST_CASE("phases hook: two-phase config runs the summed rounds") {
    const auto dir = fresh_dir("fedhash_phases");
    RunConfig cfg = parse_config_text(
        kBaseConfig,
        {"clients=2",
         R"(phases=[{"rounds":2,"dataset":{"n":300,"seed":1,"p_flip":0.0,"shift":0}},)"
         R"({"rounds":3,"dataset":{"n":300,"seed":2,"p_flip":0.2,"shift":1}}])"});
    cfg.output_dir = dir.string();
    CHECK(cfg.total_rounds() == 5);

    Experiment ex(cfg);
    const RunArtifacts art = ex.run(Manner::Federated);
    CHECK(art.metrics.size() == 5);
    std::filesystem::remove_all(dir);
}
