#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "blockprune/backbones.hpp"
#include "blockprune/config.hpp"
#include "blockprune/criterion.hpp"
#include "blockprune/loss.hpp"
#include "blockprune/metrics.hpp"
#include "blockprune/probes.hpp"

namespace blockprune {

struct FinetuneOptions {
    int epochs = 1;
    float alpha = 1.0f;
    /// Constant rate, divided by 10 once 2/3 of the budget has elapsed.
    float learning_rate = 0.01f;
    float momentum = 0.9f;
    float weight_decay = 1e-4f;
    int batch_size = 128;
    Augmentation augmentation = Augmentation::pad_crop_flip;
    std::uint64_t seed = 0;
    bool deterministic = true;
};

float finetune_learning_rate(const FinetuneOptions& o, int epoch);

/// Trains the student on mimic_ce_loss against eval-mode teacher logits.
/// The teacher is only read.
FitResult finetune(const BlockGraph& student_graph, WeightStore& student_weights, const BlockGraph& teacher_graph,
                   const WeightStore& teacher_weights, const Dataset& data, const FinetuneOptions& options);

/// `count` distinct ids drawn uniformly from `prunable`.
std::set<int> random_prune_set(const std::set<int>& prunable, int count, std::mt19937_64& rng);

struct CensusEntry {
    /// 0 = un-pruned model, k = model after round k.
    int model_index = 0;
    int units = 0;
    int degraded_units = 0;
};

struct RoundRecord {
    int round = 0;
    ProbeReport probe_report;
    ContributionTable contributions;
    /// Ids in the pre-surgery graph of this round.
    std::vector<int> pruned_ids;
    std::vector<std::string> pruned_scopes;
    std::vector<int> id_map;
    int blocks_after = 0;
    int units_after = 0;
    int finetune_epochs = 0;
    bool mimic = false;
    double alpha = 0.0;
    std::string teacher;
    std::vector<EpochLog> finetune_log;
    double accuracy = 0.0;
    std::int64_t flops = 0;
    double frr = 0.0;
    std::optional<LatencyReport> latency;
    std::optional<double> ar;
    std::string checkpoint;
};

struct BaselineRecord {
    double accuracy = 0.0;
    std::int64_t flops = 0;
    int blocks = 0;
    int units = 0;
    int prunable = 0;
    std::optional<LatencyReport> latency;
    std::string checkpoint;
};

struct ExperimentManifest {
    nlohmann::json config;
    std::string mode;
    std::string dataset;
    PruneSchedule schedule;
    BaselineRecord baseline;
    std::vector<RoundRecord> rounds;
    std::optional<ProbeReport> final_probe_report;
    std::vector<CensusEntry> census;
    std::optional<std::string> error;

    /// Last round's record, or the baseline when nothing ran.
    double final_accuracy() const;
    std::int64_t final_flops() const;
    int final_units() const;
    /// Pruned ids of every round, in order.
    std::vector<std::vector<int>> pruned_id_sequence() const;
};

nlohmann::json to_json(const ExperimentManifest& m);
ExperimentManifest manifest_from_json(const nlohmann::json& j);
void save_manifest(const ExperimentManifest& m, const std::filesystem::path& path);
ExperimentManifest load_manifest(const std::filesystem::path& path);

/// Trains fresh probes on the training split and scores them on the test split.
ProbeReport probe_model(const ProbeSettings& settings, const BlockGraph& graph, const WeightStore& weights,
                        const Dataset& data, std::uint64_t seed);

class PipelineError : public std::runtime_error {
public:
    PipelineError(int round, const std::string& stage, const std::string& what)
        : std::runtime_error("round " + std::to_string(round) + ", " + stage + ": " + what), round_(round),
          stage_(stage) {}
    int round() const { return round_; }
    const std::string& stage() const { return stage_; }

private:
    int round_;
    std::string stage_;
};

/// Probe → score → select → surgery → fine-tune, for R rounds (one round in
/// one-shot modes). Writes round checkpoints and manifest.json under
/// `output_dir` when it is non-empty.
ExperimentManifest run_pipeline(const RunConfig& config, PipelineMode mode, const Dataset& data,
                                const BuiltModel& baseline, const std::filesystem::path& output_dir);

/// Loads the baseline checkpoint and dataset named by the config.
ExperimentManifest run_pipeline(const RunConfig& config, PipelineMode mode);

}  // namespace blockprune
