#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "blockprune/block_graph.hpp"
#include "blockprune/data.hpp"
#include "blockprune/weight_store.hpp"

namespace blockprune {

// FLOPs convention: one multiply-accumulate = 2 FLOPs. Only convolution and
// linear layers are counted; bias, batch-norm, activations and pooling are not.
inline constexpr std::int64_t kFlopsPerMac = 2;

struct LayerFlops {
    int block_id = 0;
    std::string layer;
    std::int64_t flops = 0;
};

/// Every counted layer of the graph, in forward order.
std::vector<LayerFlops> flops_breakdown(const BlockGraph& graph);
/// Sum of flops_breakdown for one block.
std::int64_t block_flops(const BlockGraph& graph, int block_id);
std::int64_t count_flops(const BlockGraph& graph);

/// 2·k·k·C_in·C_out·H_out·W_out
std::int64_t conv_flops(int k, int c_in, int c_out, int h_out, int w_out);

struct LatencyReport {
    double mean_ms = 0.0;
    double std_ms = 0.0;
    int n_samples = 0;
    int batch_size = 1;
    int warmup = 0;
    int thread_count = 1;
    std::string hardware_note;
};

nlohmann::json to_json(const LatencyReport& r);
LatencyReport latency_from_json(const nlohmann::json& j);

/// Times `n` forwards of a random batch after `warmup` untimed ones. mean_ms
/// is per image.
LatencyReport measure_latency(const BlockGraph& graph, const WeightStore& weights, int n = 100, int batch = 1,
                              int warmup = 10, std::uint64_t seed = 0);

double acceleration_ratio(double time_original_ms, double time_pruned_ms);
double flops_reduction_ratio(std::int64_t flops_original, std::int64_t flops_pruned);

/// Top-1 accuracy in eval mode over the whole split.
double evaluate_accuracy(const BlockGraph& graph, const WeightStore& weights, const Split& split,
                         int batch_size = 256);

struct MetricsSummary {
    double accuracy = 0.0;
    std::int64_t flops = 0;
    double frr = 0.0;
    double ar = 1.0;
};

nlohmann::json to_json(const MetricsSummary& m);

/// CPU model string from /proc/cpuinfo when available.
std::string hardware_description();

}  // namespace blockprune
