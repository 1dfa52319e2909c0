#include "blockprune/recovery.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>

namespace blockprune {

namespace fs = std::filesystem;
using nlohmann::json;

float finetune_learning_rate(const FinetuneOptions& o, int epoch) {
    return 3 * epoch >= 2 * o.epochs ? o.learning_rate * 0.1f : o.learning_rate;
}

FitResult finetune(const BlockGraph& student_graph, WeightStore& student_weights, const BlockGraph& teacher_graph,
                   const WeightStore& teacher_weights, const Dataset& data, const FinetuneOptions& o) {
    if (student_graph.meta.num_classes != teacher_graph.meta.num_classes)
        throw std::invalid_argument("finetune: teacher and student disagree on num_classes");
    if (o.epochs < 0) throw std::invalid_argument("finetune: epochs must be non-negative");
    FitOptions f;
    f.epochs = o.epochs;
    f.learning_rate = [o](int e) { return finetune_learning_rate(o, e); };
    f.momentum = o.momentum;
    f.weight_decay = o.weight_decay;
    f.batch_size = o.batch_size;
    f.augmentation = o.augmentation;
    f.seed = o.seed;
    f.deterministic = o.deterministic;
    f.alpha = o.alpha;
    if (o.alpha > 0.0f) f.teacher = {&teacher_graph, &teacher_weights};
    f.eval_each_epoch = false;
    return fit(student_graph, student_weights, data, f);
}

std::set<int> random_prune_set(const std::set<int>& prunable, int count, std::mt19937_64& rng) {
    if (count < 0 || count > static_cast<int>(prunable.size()))
        throw std::invalid_argument("random_prune_set: count out of range");
    std::vector<int> ids(prunable.begin(), prunable.end());
    std::vector<int> chosen;
    std::sample(ids.begin(), ids.end(), std::back_inserter(chosen), count, rng);
    return {chosen.begin(), chosen.end()};
}

// ---------------------------------------------------------------------------
// Manifest

double ExperimentManifest::final_accuracy() const {
    return rounds.empty() ? baseline.accuracy : rounds.back().accuracy;
}

std::int64_t ExperimentManifest::final_flops() const { return rounds.empty() ? baseline.flops : rounds.back().flops; }

int ExperimentManifest::final_units() const { return rounds.empty() ? baseline.units : rounds.back().units_after; }

std::vector<std::vector<int>> ExperimentManifest::pruned_id_sequence() const {
    std::vector<std::vector<int>> out;
    for (const auto& r : rounds) out.push_back(r.pruned_ids);
    return out;
}

namespace {

json epoch_log_json(const std::vector<EpochLog>& log) {
    json a = json::array();
    for (const auto& e : log)
        a.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"test_accuracy", e.test_accuracy},
                     {"learning_rate", e.learning_rate}});
    return a;
}

std::vector<EpochLog> epoch_log_from_json(const json& a) {
    std::vector<EpochLog> log;
    for (const auto& e : a)
        log.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(), e.at("test_accuracy").get<double>(),
                       e.at("learning_rate").get<double>()});
    return log;
}

int count_degraded_units(const BlockGraph& g, const ContributionTable& t) {
    int n = 0;
    for (const auto& row : t.rows)
        if (row.degraded && is_unit(g.block(row.block_id).kind)) ++n;
    return n;
}

}  // namespace

json to_json(const ExperimentManifest& m) {
    json rounds = json::array();
    for (const auto& r : m.rounds) {
        json jr = {{"round", r.round},
                   {"probe_report", to_json(r.probe_report)},
                   {"contributions", to_json(r.contributions)},
                   {"pruned_ids", r.pruned_ids},
                   {"pruned_scopes", r.pruned_scopes},
                   {"id_map", r.id_map},
                   {"blocks_after", r.blocks_after},
                   {"units_after", r.units_after},
                   {"finetune_epochs", r.finetune_epochs},
                   {"loss", {{"mimic", r.mimic}, {"alpha", r.alpha}, {"cross_entropy", true}}},
                   {"teacher", r.teacher},
                   {"finetune_log", epoch_log_json(r.finetune_log)},
                   {"accuracy", r.accuracy},
                   {"flops", r.flops},
                   {"frr", r.frr},
                   {"checkpoint", r.checkpoint}};
        if (r.latency) jr["latency"] = to_json(*r.latency);
        if (r.ar) jr["ar"] = *r.ar;
        rounds.push_back(std::move(jr));
    }
    json census = json::array();
    for (const auto& c : m.census)
        census.push_back({{"model_index", c.model_index}, {"units", c.units}, {"degraded_units", c.degraded_units}});
    json baseline = {{"accuracy", m.baseline.accuracy}, {"flops", m.baseline.flops},     {"blocks", m.baseline.blocks},
                     {"units", m.baseline.units},       {"prunable", m.baseline.prunable}, {"checkpoint", m.baseline.checkpoint}};
    if (m.baseline.latency) baseline["latency"] = to_json(*m.baseline.latency);
    json out = {{"format", "blockprune.manifest/1"},
                {"config", m.config},
                {"mode", m.mode},
                {"dataset", m.dataset},
                {"schedule", to_json(m.schedule)},
                {"baseline", baseline},
                {"rounds", rounds},
                {"census", census},
                {"flops_convention", "2 FLOPs per multiply-accumulate; conv and linear layers only"},
                {"summary",
                 {{"accuracy", m.final_accuracy()},
                  {"flops", m.final_flops()},
                  {"units", m.final_units()},
                  {"frr", m.rounds.empty() ? 0.0 : m.rounds.back().frr}}}};
    if (m.final_probe_report) out["final_probe_report"] = to_json(*m.final_probe_report);
    if (m.error) out["error"] = *m.error;
    return out;
}

ExperimentManifest manifest_from_json(const json& j) {
    ExperimentManifest m;
    m.config = j.at("config");
    m.mode = j.at("mode").get<std::string>();
    m.dataset = j.value("dataset", std::string());
    const json& s = j.at("schedule");
    m.schedule = {s.at("G").get<double>(), s.at("R").get<int>(), s.at("beta").get<double>(),
                  s.at("round_counts").get<std::vector<int>>()};
    const json& b = j.at("baseline");
    m.baseline.accuracy = b.at("accuracy").get<double>();
    m.baseline.flops = b.at("flops").get<std::int64_t>();
    m.baseline.blocks = b.at("blocks").get<int>();
    m.baseline.units = b.at("units").get<int>();
    m.baseline.prunable = b.value("prunable", 0);
    m.baseline.checkpoint = b.value("checkpoint", std::string());
    if (b.contains("latency")) m.baseline.latency = latency_from_json(b.at("latency"));
    for (const auto& jr : j.at("rounds")) {
        RoundRecord r;
        r.round = jr.at("round").get<int>();
        r.probe_report = probe_report_from_json(jr.at("probe_report"));
        r.contributions = contribution_table_from_json(jr.at("contributions"));
        r.pruned_ids = jr.at("pruned_ids").get<std::vector<int>>();
        r.pruned_scopes = jr.at("pruned_scopes").get<std::vector<std::string>>();
        r.id_map = jr.at("id_map").get<std::vector<int>>();
        r.blocks_after = jr.at("blocks_after").get<int>();
        r.units_after = jr.at("units_after").get<int>();
        r.finetune_epochs = jr.at("finetune_epochs").get<int>();
        r.mimic = jr.at("loss").at("mimic").get<bool>();
        r.alpha = jr.at("loss").at("alpha").get<double>();
        r.teacher = jr.at("teacher").get<std::string>();
        r.finetune_log = epoch_log_from_json(jr.at("finetune_log"));
        r.accuracy = jr.at("accuracy").get<double>();
        r.flops = jr.at("flops").get<std::int64_t>();
        r.frr = jr.at("frr").get<double>();
        r.checkpoint = jr.value("checkpoint", std::string());
        if (jr.contains("latency")) r.latency = latency_from_json(jr.at("latency"));
        if (jr.contains("ar")) r.ar = jr.at("ar").get<double>();
        m.rounds.push_back(std::move(r));
    }
    for (const auto& c : j.at("census"))
        m.census.push_back({c.at("model_index").get<int>(), c.at("units").get<int>(), c.at("degraded_units").get<int>()});
    if (j.contains("final_probe_report")) m.final_probe_report = probe_report_from_json(j.at("final_probe_report"));
    if (j.contains("error")) m.error = j.at("error").get<std::string>();
    return m;
}

void save_manifest(const ExperimentManifest& m, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f << to_json(m).dump(2) << "\n";
}

ExperimentManifest load_manifest(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open manifest: " + path.string());
    try {
        return manifest_from_json(json::parse(f));
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed manifest " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Pipeline

ProbeReport probe_model(const ProbeSettings& settings, const BlockGraph& graph, const WeightStore& weights,
                        const Dataset& data, std::uint64_t seed) {
    ProbeSet set = attach_probes(graph, settings.reduction, settings.max_features);
    set = train_probes(graph, weights, std::move(set), data, seed, settings.training);
    return eval_probes(graph, weights, set, data.test);
}

namespace {

struct Stage {
    int round;
    std::string name;
};

template <typename F>
auto run_stage(const Stage& s, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(s.round, s.name, e.what());
    }
}

std::uint64_t round_seed(std::uint64_t base, int round, std::uint64_t salt) {
    return base * 1000003ull + static_cast<std::uint64_t>(round) * 7919ull + salt;
}

}  // namespace

ExperimentManifest run_pipeline(const RunConfig& config, PipelineMode mode, const Dataset& data,
                                const BuiltModel& baseline, const fs::path& output_dir) {
    if (data.num_classes != baseline.graph.meta.num_classes || data.image_shape != baseline.graph.meta.input_shape)
        throw std::invalid_argument("dataset does not match the baseline model");
    RunConfig resolved = config;
    resolved.mode = mode;

    const std::set<int> initial_prunable = prunable_blocks(baseline.graph);
    const int rounds = is_iterative(mode) ? config.rounds : 1;
    ExperimentManifest m;
    m.config = to_json(resolved);
    m.mode = std::string(to_string(mode));
    m.dataset = data.name;
    // The full schedule is computed for the configured R; one-shot modes take
    // the whole target in a single round.
    m.schedule = make_schedule(static_cast<int>(initial_prunable.size()), config.global_ratio, config.rounds);
    std::vector<int> counts = m.schedule.counts;
    if (!is_iterative(mode)) {
        int total = 0;
        for (int c : counts) total += c;
        counts = {total};
    }
    const int per_round_epochs = config.finetune_epochs_per_round();
    const int epochs_this_mode = is_iterative(mode) ? per_round_epochs : per_round_epochs * config.rounds;

    m.baseline.accuracy = evaluate_accuracy(baseline.graph, baseline.weights, data.test);
    m.baseline.flops = count_flops(baseline.graph);
    m.baseline.blocks = baseline.graph.size();
    m.baseline.units = unit_count(baseline.graph);
    m.baseline.prunable = static_cast<int>(initial_prunable.size());
    m.baseline.checkpoint = config.baseline_checkpoint;
    if (config.latency.enabled)
        m.baseline.latency = measure_latency(baseline.graph, baseline.weights, config.latency.samples, 1,
                                             config.latency.warmup);

    BlockGraph graph = baseline.graph;
    WeightStore weights = baseline.weights;
    std::mt19937_64 random_rng(round_seed(config.seed, 0, 0xABCDEFull));

    auto write = [&] {
        if (!output_dir.empty()) save_manifest(m, output_dir / "manifest.json");
    };

    try {
        for (int r = 0; r < rounds; ++r) {
            RoundRecord rec;
            rec.round = r + 1;
            rec.probe_report = run_stage({r + 1, "probe"}, [&] {
                return probe_model(config.probe, graph, weights, data, round_seed(config.seed, r + 1, 1));
            });
            const std::set<int> prunable = prunable_blocks(graph);
            rec.contributions = run_stage({r + 1, "score"}, [&] { return contributions(rec.probe_report, prunable); });
            m.census.push_back({r, unit_count(graph), count_degraded_units(graph, rec.contributions)});

            const int count = counts[static_cast<std::size_t>(r)];
            const std::set<int> chosen = run_stage({r + 1, "select"}, [&] {
                return uses_criterion(mode) ? select_prune_set(rec.contributions, count)
                                            : random_prune_set(prunable, count, random_rng);
            });
            rec.pruned_ids.assign(chosen.begin(), chosen.end());
            for (int id : chosen) rec.pruned_scopes.push_back(graph.block(id).scope);

            PruneResult cut = run_stage({r + 1, "surgery"}, [&] { return prune_blocks(graph, weights, chosen); });
            rec.id_map = cut.id_map;
            rec.blocks_after = cut.graph.size();
            rec.units_after = unit_count(cut.graph);

            rec.mimic = uses_mimic(mode);
            rec.alpha = rec.mimic ? config.recovery.alpha : 0.0;
            rec.teacher = std::string(to_string(config.recovery.teacher));
            rec.finetune_epochs = chosen.empty() ? 0 : epochs_this_mode;
            if (rec.finetune_epochs > 0) {
                FinetuneOptions fo;
                fo.epochs = rec.finetune_epochs;
                fo.alpha = static_cast<float>(rec.alpha);
                fo.learning_rate = config.recovery.learning_rate;
                fo.momentum = config.baseline.momentum;
                fo.weight_decay = config.baseline.weight_decay;
                fo.batch_size = config.baseline.batch_size;
                fo.augmentation = config.baseline.augmentation;
                fo.seed = round_seed(config.seed, r + 1, 2);
                fo.deterministic = config.deterministic;
                const bool original = config.recovery.teacher == TeacherPolicy::original;
                const BlockGraph& tg = original ? baseline.graph : graph;
                const WeightStore& tw = original ? baseline.weights : weights;
                FitResult fr = run_stage({r + 1, "finetune"},
                                         [&] { return finetune(cut.graph, cut.weights, tg, tw, data, fo); });
                rec.finetune_log = std::move(fr.log);
            }
            graph = std::move(cut.graph);
            weights = std::move(cut.weights);

            rec.accuracy = run_stage({r + 1, "evaluate"}, [&] { return evaluate_accuracy(graph, weights, data.test); });
            rec.flops = count_flops(graph);
            rec.frr = flops_reduction_ratio(m.baseline.flops, rec.flops);
            if (config.latency.enabled) {
                rec.latency = measure_latency(graph, weights, config.latency.samples, 1, config.latency.warmup);
                rec.ar = acceleration_ratio(m.baseline.latency->mean_ms, rec.latency->mean_ms);
            }
            if (!output_dir.empty()) {
                const fs::path ckpt = output_dir / ("round" + std::to_string(r + 1));
                run_stage({r + 1, "checkpoint"}, [&] {
                    save_checkpoint(ckpt, graph, weights);
                    return 0;
                });
                rec.checkpoint = ckpt.string();
            }
            m.rounds.push_back(std::move(rec));
            write();
        }
        if (config.probe_final_model) {
            m.final_probe_report = run_stage({rounds + 1, "probe"}, [&] {
                return probe_model(config.probe, graph, weights, data, round_seed(config.seed, rounds + 1, 1));
            });
            const auto table = contributions(*m.final_probe_report, prunable_blocks(graph));
            m.census.push_back({rounds, unit_count(graph), count_degraded_units(graph, table)});
        }
    } catch (const PipelineError& e) {
        m.error = e.what();
        write();
        throw;
    }
    write();
    return m;
}

ExperimentManifest run_pipeline(const RunConfig& config, PipelineMode mode) {
    if (config.baseline_checkpoint.empty()) throw std::invalid_argument("config names no baseline checkpoint");
    const BuiltModel baseline = load_checkpoint(config.baseline_checkpoint);
    const Dataset data = load_dataset(config.dataset);
    fs::path out = config.output_dir;
    return run_pipeline(config, mode, data, baseline, out);
}

}  // namespace blockprune
