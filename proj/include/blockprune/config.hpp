#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "blockprune/backbones.hpp"
#include "blockprune/block_graph.hpp"
#include "blockprune/data.hpp"
#include "blockprune/probes.hpp"

namespace blockprune {

enum class PipelineMode { DBP, RANDOM, DBP_A, DBP_B, DBP_C };

std::string_view to_string(PipelineMode m);
/// Accepts the CLI spellings dbp, random, dbp-a, dbp-b, dbp-c (and the enum names).
PipelineMode parse_mode(std::string_view s);
bool is_iterative(PipelineMode m);
bool uses_mimic(PipelineMode m);
bool uses_criterion(PipelineMode m);

enum class TeacherPolicy { previous_round, original };

std::string_view to_string(TeacherPolicy p);
TeacherPolicy parse_teacher_policy(std::string_view s);

struct DatasetSpec {
    /// "cifar10" or "synthetic".
    std::string kind = "cifar10";
    std::string path;
    SyntheticSpec synthetic;
};

struct ProbeSettings {
    Reduction reduction = Reduction::flatten;
    ProbeTraining training;
    std::int64_t max_features = kDefaultMaxProbeFeatures;
};

struct RecoverySettings {
    float alpha = 1.0f;
    TeacherPolicy teacher = TeacherPolicy::previous_round;
    /// Fine-tune epochs per round; <= 0 means ceil(baseline epochs / 5).
    int epochs_per_round = 0;
    float learning_rate = 0.01f;
};

struct LatencySettings {
    bool enabled = false;
    int samples = 100;
    int warmup = 10;
};

struct RunConfig {
    ArchDesc arch;
    DatasetSpec dataset;
    std::uint64_t seed = 0;
    bool deterministic = true;
    TrainSchedule baseline;
    ProbeSettings probe;
    double global_ratio = 0.5;
    int rounds = 3;
    RecoverySettings recovery;
    LatencySettings latency;
    PipelineMode mode = PipelineMode::DBP;
    std::string output_dir = "runs";
    std::string baseline_checkpoint;
    /// Probe the final model too, so the degraded-block census covers it.
    bool probe_final_model = true;

    /// Resolved per-round fine-tune budget.
    int finetune_epochs_per_round() const;
};

nlohmann::json to_json(const RunConfig& c);
/// Missing fields keep their defaults.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const TrainSchedule& s);
TrainSchedule train_schedule_from_json(const nlohmann::json& j, TrainSchedule defaults = {});

Dataset load_dataset(const DatasetSpec& spec);

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "BLOCKPRUNE_OUTPUT_DIR";

}  // namespace blockprune
