#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockprune/recovery.hpp"

namespace blockprune::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Bad flags, unreadable config, incompatible inputs.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Parses argv and runs one subcommand. Returns the exit code; never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Reads a run config, or the config embedded in a manifest.
RunConfig load_config_or_manifest(const std::filesystem::path& path);

/// block_id,accuracy,contribution,degraded; one row per probed block.
void write_probe_curve(const ProbeReport& report, const std::filesystem::path& path);

/// Probe report of model k of a manifest: 0 = un-pruned, k = after round k.
std::vector<ProbeReport> model_probe_reports(const ExperimentManifest& m);

struct ResultRow {
    std::string label;
    std::string mode;
    std::string dataset;
    double accuracy = 0.0;
    std::int64_t flops = 0;
    double frr = 0.0;
    std::optional<double> mean_ms;
    std::optional<double> ar;
};

/// Final model of the manifest.
ResultRow result_row(const ExperimentManifest& m, const std::string& label);
void write_results_table(const std::vector<ResultRow>& rows, const std::filesystem::path& path);
void print_results_table(const std::vector<ResultRow>& rows, std::ostream& out);

/// label,model_index,units,degraded_units
void write_census_table(const std::vector<std::pair<std::string, ExperimentManifest>>& manifests,
                        const std::filesystem::path& path);

/// Throws UsageError when the manifests were run on different datasets.
void require_same_dataset(const std::vector<std::pair<std::string, ExperimentManifest>>& manifests);

/// Census, per-model curves and results under `dir`; SVG plots when asked.
void write_report(const std::vector<std::pair<std::string, ExperimentManifest>>& manifests,
                  const std::filesystem::path& dir, bool plots);

}  // namespace blockprune::cli
