#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <json.hpp>

#include "blockprune/block_graph.hpp"
#include "blockprune/data.hpp"

namespace blockprune {

enum class Reduction { flatten, global_average_pool };

std::string_view to_string(Reduction r);
Reduction parse_reduction(std::string_view s);

/// Linear classifier on one block's output.
struct Probe {
    int block_id = 0;
    Tensor weight;  // num_classes × feature_dim
    Tensor bias;    // num_classes
};

struct ProbeSet {
    Reduction reduction = Reduction::flatten;
    std::vector<Probe> probes;  // indexed by block id
    std::uint64_t seed = 0;
};

struct ProbeReport {
    std::map<int, double> accuracies;
    /// Correct-prediction counts behind `accuracies`; empty for reports built
    /// from accuracies alone.
    std::map<int, std::int64_t> correct;
    std::int64_t eval_split_size = 0;
    std::uint64_t seed = 0;
    Reduction reduction = Reduction::flatten;

    friend bool operator==(const ProbeReport&, const ProbeReport&) = default;
};

nlohmann::json to_json(const ProbeReport& r);
ProbeReport probe_report_from_json(const nlohmann::json& j);

inline constexpr std::int64_t kDefaultMaxProbeFeatures = std::int64_t{1} << 18;

/// Input width of the probe after `block`. The classifier head's probe reads its logits.
std::int64_t probe_feature_dim(const BlockGraph& graph, const Block& block, Reduction reduction);

/// One zero-initialized probe per block, stem and head included.
ProbeSet attach_probes(const BlockGraph& graph, Reduction reduction,
                       std::int64_t max_feature_dim = kDefaultMaxProbeFeatures);

struct ProbeTraining {
    /// One entry per epoch.
    std::vector<float> learning_rates{0.1f, 0.01f, 0.001f};
    float momentum = 0.9f;
    int batch_size = 128;
};

/// Trains every probe on frozen eval-mode features of the un-augmented
/// training split. One backbone pass per batch feeds all probes.
ProbeSet train_probes(const BlockGraph& graph, const WeightStore& weights, ProbeSet probes, const Dataset& data,
                      std::uint64_t seed, const ProbeTraining& training = {});

/// Top-1 accuracy of every probe over `eval_split`.
ProbeReport eval_probes(const BlockGraph& graph, const WeightStore& weights, const ProbeSet& probes,
                        const Split& eval_split, int batch_size = 256);

}  // namespace blockprune
