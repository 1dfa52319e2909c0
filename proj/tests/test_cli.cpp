#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "blockprune/cli.hpp"
#include "helpers.hpp"

using namespace blockprune;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "blockprune_cli");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream f(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(f, line)) {
        std::vector<std::string> cells;
        std::stringstream s(line);
        std::string cell;
        while (std::getline(s, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(std::move(cells));
    }
    return rows;
}

fs::path write_config(const fs::path& dir, int depth) {
    RunConfig c;
    c.arch = testutil::small_residual(depth, 4, 8);
    c.dataset.kind = "synthetic";
    c.dataset.synthetic.n_train = 640;
    c.dataset.synthetic.n_test = 200;
    c.dataset.synthetic.image_shape = {3, 8, 8};
    c.baseline.epochs = 4;
    c.baseline.batch_size = 32;
    c.baseline.lr_milestones = {{0, 0.1f}, {3, 0.01f}};
    c.probe.training.batch_size = 32;
    c.recovery.epochs_per_round = 1;
    c.latency.samples = 40;
    c.latency.warmup = 5;
    c.seed = 1;
    fs::create_directories(dir);
    std::ofstream(dir / "config.json") << to_json(c).dump(2);
    return dir / "config.json";
}

// Trained once per process and shared.
const fs::path& baseline(int depth) {
    static std::map<int, fs::path> cache;
    auto it = cache.find(depth);
    if (it != cache.end()) return it->second;
    const fs::path dir = testutil::temp_dir("cli_base" + std::to_string(depth));
    const fs::path cfg = write_config(dir, depth);
    Result r = invoke({"train-baseline", "--config", cfg.string(), "--out", dir.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return cache[depth] = dir / "baseline";
}

ExperimentManifest manifest_in(const fs::path& dir) { return load_manifest(dir / "manifest.json"); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help succeeds and usage errors exit with 2") {
    CHECK(invoke({"--help"}).code == 0);
    CHECK(invoke({}).code == cli::kExitUsage);
    CHECK(invoke({"frobnicate"}).code == cli::kExitUsage);
    CHECK(invoke({"run", "--mode", "greedy"}).code == cli::kExitUsage);
    CHECK(invoke({"run", "--G", "abc"}).code == cli::kExitUsage);
}

TEST_CASE("missing dataset path is a usage error with a message") {
    auto dir = testutil::temp_dir("cli_nodata");
    Result r = invoke({"train-baseline", "--dataset", "cifar10", "--out", dir.string()});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("data-dir") != std::string::npos);
    r = invoke({"train-baseline", "--dataset", "cifar10", "--data-dir", (dir / "absent").string(), "--out", dir.string()});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("not found") != std::string::npos);
    CHECK(invoke({"train-baseline", "--config", (dir / "nope.json").string()}).code == cli::kExitUsage);
    fs::remove_all(dir);
}

TEST_CASE("train-baseline writes a valid checkpoint and is seed-reproducible") {
    const fs::path& ck = baseline(8);
    BuiltModel m = load_checkpoint(ck);
    CHECK(validate_graph(m.graph).empty());
    CHECK(validate_weights(m.graph, m.weights).empty());
    CHECK(fs::exists(ck / "train_log.csv"));
    CHECK(read_csv(ck / "train_log.csv").size() == 5);

    auto a = testutil::temp_dir("cli_seed_a"), b = testutil::temp_dir("cli_seed_b");
    const fs::path cfg = write_config(a, 8);
    Result ra = invoke({"train-baseline", "--config", cfg.string(), "--seed", "7", "--deterministic", "--out", a.string()});
    Result rb = invoke({"train-baseline", "--config", cfg.string(), "--seed", "7", "--deterministic", "--out", b.string()});
    REQUIRE(ra.code == 0);
    REQUIRE(rb.code == 0);
    auto last = [](const std::string& s) {
        const auto at = s.find("accuracy ");
        return s.substr(at, s.find('\n', at) - at);
    };
    CHECK(last(ra.out) == last(rb.out));
    CHECK(load_checkpoint(a / "baseline").weights == load_checkpoint(b / "baseline").weights);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("probe curve has one row per block, telescopes, and flags negatives") {
    const fs::path& ck = baseline(8);
    auto dir = testutil::temp_dir("cli_probe");
    Result r = invoke({"probe", "--config", (ck / "config.json").string(), "--out", dir.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const BuiltModel m = load_checkpoint(ck);
    auto rows = read_csv(dir / "probe_curve.csv");
    REQUIRE(rows.size() == static_cast<std::size_t>(m.graph.size()) + 1);
    CHECK(rows[0] == std::vector<std::string>{"block_id", "accuracy", "contribution", "degraded"});
    double sum = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(std::stoi(rows[i][0]) == static_cast<int>(i - 1));
        const double c = std::stod(rows[i][2]);
        sum += c;
        CHECK(rows[i][3] == (c < 0 ? "1" : "0"));
    }
    CHECK(sum == doctest::Approx(std::stod(rows.back()[1]) - std::stod(rows[1][1])).epsilon(1e-8));
    CHECK(fs::exists(dir / "probe_report.json"));
    fs::remove_all(dir);
}

TEST_CASE("output directory defaults to the environment variable") {
    const fs::path& ck = baseline(8);
    auto dir = testutil::temp_dir("cli_env");
    ::setenv(kOutputDirEnv, dir.string().c_str(), 1);
    Result r = invoke({"probe", "--config", (ck / "config.json").string()});
    ::unsetenv(kOutputDirEnv);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(fs::exists(dir / "probe_curve.csv"));
    fs::remove_all(dir);
}

TEST_CASE("probe rejects a checkpoint built for another dataset") {
    const fs::path& ck = baseline(8);
    auto dir = testutil::temp_dir("cli_mismatch");
    RunConfig c = cli::load_config_or_manifest(ck / "config.json");
    c.dataset.synthetic.image_shape = {3, 16, 16};
    std::ofstream(dir / "c.json") << to_json(c).dump();
    CHECK(invoke({"probe", "--config", (dir / "c.json").string(), "--out", dir.string()}).code == cli::kExitUsage);
    fs::remove_all(dir);
}

TEST_CASE("run on the 27-unit model at G=0.5, R=3 keeps 14 units and reports per round") {
    const fs::path& ck = baseline(56);
    auto dir = testutil::temp_dir("cli_run56");
    Result r = invoke({"run", "--config", (ck / "config.json").string(), "--mode", "dbp", "--G", "0.5", "--R", "3",
                    "--out", dir.string(), "--plots"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const ExperimentManifest m = manifest_in(dir);
    CHECK(m.rounds.size() == 3);
    CHECK(m.baseline.units == 27);
    CHECK(m.final_units() == 14);

    auto census = read_csv(dir / "census.csv");
    CHECK(census.size() == 5);
    for (std::size_t k = 0; k < 4; ++k) {
        const auto rows = read_csv(dir / ("curve_model" + std::to_string(k) + ".csv"));
        const int blocks = k == 0 ? m.baseline.blocks : m.rounds[k - 1].blocks_after;
        CHECK(rows.size() == static_cast<std::size_t>(blocks) + 1);
        CHECK(std::stoi(census[k + 1][2]) == (k == 0 ? 27 : m.rounds[k - 1].units_after));
    }
    CHECK(fs::exists(dir / "probe_curves.svg"));
    CHECK(fs::exists(dir / "census.svg"));
    for (int k = 1; k <= 3; ++k) CHECK(fs::is_directory(dir / ("round" + std::to_string(k))));

    // Re-running from the manifest reproduces the pruned ids.
    auto again = testutil::temp_dir("cli_rerun56");
    Result r2 = invoke({"run", "--config", (dir / "manifest.json").string(), "--out", again.string()});
    REQUIRE_MESSAGE(r2.code == 0, r2.err);
    CHECK(manifest_in(again).pruned_id_sequence() == m.pruned_id_sequence());
    fs::remove_all(dir);
    fs::remove_all(again);
}

TEST_CASE("G = 0 yields a zero-surgery manifest and a one-row results table") {
    const fs::path& ck = baseline(8);
    auto dir = testutil::temp_dir("cli_g0");
    RunConfig c = cli::load_config_or_manifest(ck / "config.json");
    c.latency.enabled = true;
    c.rounds = 1;
    std::ofstream(dir / "c.json") << to_json(c).dump();
    Result r = invoke({"run", "--config", (dir / "c.json").string(), "--G", "0", "--out", (dir / "run").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const ExperimentManifest m = manifest_in(dir / "run");
    for (const auto& rr : m.rounds) CHECK(rr.pruned_ids.empty());
    Result rep = invoke({"report", (dir / "run" / "manifest.json").string(), "--out", (dir / "rep").string()});
    REQUIRE_MESSAGE(rep.code == 0, rep.err);
    auto rows = read_csv(dir / "rep" / "results.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"label", "mode", "dataset", "acc", "flops", "frr", "mean_ms", "ar"});
    CHECK(std::stod(rows[1][5]) == 0.0);
    CHECK(std::stod(rows[1][7]) == doctest::Approx(1.0).epsilon(0.3));
    fs::remove_all(dir);
}

TEST_CASE("schedule flags are validated") {
    const fs::path& ck = baseline(8);
    CHECK(invoke({"run", "--config", (ck / "config.json").string(), "--G", "1"}).code == cli::kExitUsage);
    CHECK(invoke({"run", "--config", (ck / "config.json").string(), "--R", "0"}).code == cli::kExitUsage);
    CHECK(invoke({"run", "--config", (ck / "config.json").string(), "--checkpoint", "/nonexistent"}).code == cli::kExitUsage);
}

TEST_CASE("report rejects manifests from different datasets") {
    const fs::path& ck = baseline(8);
    auto dir = testutil::temp_dir("cli_mix");
    REQUIRE(invoke({"run", "--config", (ck / "config.json").string(), "--G", "0.5", "--R", "1", "--out", (dir / "a").string()}).code == 0);
    fs::create_directories(dir / "b");
    nlohmann::json j = nlohmann::json::parse(std::ifstream(dir / "a" / "manifest.json"));
    j["dataset"] = "cifar10";
    std::ofstream(dir / "b" / "manifest.json") << j.dump();
    Result r = invoke({"report", (dir / "a" / "manifest.json").string(), (dir / "b" / "manifest.json").string(), "--out",
                    (dir / "rep").string()});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("different datasets") != std::string::npos);
    Result ok = invoke({"report", (dir / "a" / "manifest.json").string(), (dir / "a" / "manifest.json").string(), "--out",
                     (dir / "rep").string()});
    CHECK(ok.code == 0);
    CHECK(read_csv(dir / "rep" / "results.csv").size() == 3);
    fs::remove_all(dir);
}

TEST_CASE("bench prints a summary and appends to the results CSV") {
    const fs::path& ck = baseline(8);
    auto dir = testutil::temp_dir("cli_bench");
    REQUIRE(invoke({"run", "--config", (ck / "config.json").string(), "--G", "0.5", "--R", "1", "--out", (dir / "run").string()}).code == 0);
    const std::string csv = (dir / "results.csv").string();
    const std::string cfg = (ck / "config.json").string();
    Result a = invoke({"bench", "--config", cfg, "--checkpoint", ck.string(), "--samples", "20", "--warmup", "2", "--results", csv});
    REQUIRE_MESSAGE(a.code == 0, a.err);
    Result b = invoke({"bench", "--config", cfg, "--checkpoint", (dir / "run" / "round1").string(), "--reference", ck.string(),
                    "--samples", "20", "--warmup", "2", "--results", csv});
    REQUIRE_MESSAGE(b.code == 0, b.err);
    auto j = nlohmann::json::parse(b.out);
    CHECK(j.at("summary").at("frr").get<double>() > 0.0);
    CHECK(j.at("latency").at("mean_ms").get<double>() > 0.0);
    auto rows = read_csv(csv);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"model", "acc", "flops", "frr", "mean_ms", "ar"});
    CHECK(rows[1][0] == ck.string());
    CHECK(std::stod(rows[1][3]) == 0.0);
    CHECK(std::stoll(rows[2][2]) < std::stoll(rows[1][2]));
    CHECK(invoke({"bench", "--config", cfg}).code == cli::kExitUsage);
    fs::remove_all(dir);
}

TEST_CASE("ablate runs all five modes with shared seeds") {
    const fs::path& ck = baseline(8);
    auto dir = testutil::temp_dir("cli_ablate");
    Result r = invoke({"ablate", "--config", (ck / "config.json").string(), "--G", "0.5", "--R", "2", "--seeds", "3",
                    "--out", dir.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    auto summary = read_csv(dir / "ablation_summary.csv");
    CHECK(summary.size() == 6);
    for (const char* mode : {"dbp", "random", "dbp-a", "dbp-b", "dbp-c"}) {
        const ExperimentManifest m = manifest_in(dir / (std::string(mode) + "_seed3"));
        CHECK(m.mode == mode);
        CHECK(m.config.at("seed").get<std::uint64_t>() == 3);
    }
    CHECK(read_csv(dir / "results.csv").size() == 6);
    fs::remove_all(dir);
}

}
