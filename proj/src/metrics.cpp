#include "blockprune/metrics.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>
#include <thread>

#include "blockprune/backbones.hpp"

namespace blockprune {

std::int64_t conv_flops(int k, int c_in, int c_out, int h_out, int w_out) {
    return kFlopsPerMac * static_cast<std::int64_t>(k) * k * c_in * c_out * h_out * w_out;
}

std::vector<LayerFlops> flops_breakdown(const BlockGraph& g) {
    std::vector<LayerFlops> out;
    for (const Block& b : g.blocks) {
        const Shape3& in = b.in_shape;
        const Shape3& o = b.out_shape;
        switch (b.kind) {
        case BlockKind::stem:
        case BlockKind::conv_bn_relu_chain_unit:
            out.push_back({b.id, "conv", conv_flops(3, in.c, o.c, o.h, o.w)});
            break;
        case BlockKind::residual_unit:
            out.push_back({b.id, "conv1", conv_flops(3, in.c, o.c, o.h, o.w)});
            out.push_back({b.id, "conv2", conv_flops(3, o.c, o.c, o.h, o.w)});
            if (in != o) out.push_back({b.id, "shortcut.conv", conv_flops(1, in.c, o.c, o.h, o.w)});
            break;
        case BlockKind::dense_unit:
            out.push_back({b.id, "conv", conv_flops(3, in.c, b.produces_channels, in.h, in.w)});
            break;
        case BlockKind::transition:
            // 1×1 conv runs at the input resolution, before pooling.
            out.push_back({b.id, "conv", conv_flops(1, in.c, o.c, in.h, in.w)});
            break;
        case BlockKind::classifier_head:
            out.push_back({b.id, "fc", kFlopsPerMac * static_cast<std::int64_t>(in.c) * g.meta.num_classes});
            break;
        }
    }
    return out;
}

std::int64_t block_flops(const BlockGraph& graph, int block_id) {
    std::int64_t total = 0;
    for (const auto& l : flops_breakdown(graph))
        if (l.block_id == block_id) total += l.flops;
    return total;
}

std::int64_t count_flops(const BlockGraph& graph) {
    std::int64_t total = 0;
    for (const auto& l : flops_breakdown(graph)) total += l.flops;
    return total;
}

nlohmann::json to_json(const LatencyReport& r) {
    return {{"mean_ms", r.mean_ms},     {"std_ms", r.std_ms},           {"n_samples", r.n_samples},
            {"batch_size", r.batch_size}, {"warmup", r.warmup},         {"thread_count", r.thread_count},
            {"hardware_note", r.hardware_note}};
}

LatencyReport latency_from_json(const nlohmann::json& j) {
    LatencyReport r;
    r.mean_ms = j.at("mean_ms").get<double>();
    r.std_ms = j.value("std_ms", 0.0);
    r.n_samples = j.value("n_samples", 0);
    r.batch_size = j.value("batch_size", 1);
    r.warmup = j.value("warmup", 0);
    r.thread_count = j.value("thread_count", 1);
    r.hardware_note = j.value("hardware_note", std::string());
    return r;
}

std::string hardware_description() {
    std::ifstream f("/proc/cpuinfo");
    std::string line;
    while (std::getline(f, line)) {
        if (line.rfind("model name", 0) == 0) {
            auto pos = line.find(':');
            if (pos != std::string::npos) return line.substr(pos + 2);
        }
    }
    return "unknown cpu";
}

LatencyReport measure_latency(const BlockGraph& graph, const WeightStore& weights, int n, int batch, int warmup,
                              std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("measure_latency: n must be at least 1");
    if (batch < 1) throw std::invalid_argument("measure_latency: batch must be at least 1");
    if (warmup < 0) throw std::invalid_argument("measure_latency: warmup must be non-negative");
    Tensor input = Tensor::batch(batch, graph.meta.input_shape);
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> dist;
    for (auto& v : input.values()) v = dist(rng);

    for (int i = 0; i < warmup; ++i) (void)forward(graph, weights, input, Mode::eval);
    std::vector<double> per_image_ms;
    per_image_ms.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Tensor logits = forward(graph, weights, input, Mode::eval);
        const auto t1 = std::chrono::steady_clock::now();
        if (logits.empty()) throw std::logic_error("empty logits");
        per_image_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count() / batch);
    }
    double mean = 0.0;
    for (double t : per_image_ms) mean += t;
    mean /= n;
    double var = 0.0;
    for (double t : per_image_ms) var += (t - mean) * (t - mean);
    LatencyReport r;
    r.mean_ms = mean;
    r.std_ms = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
    r.n_samples = n;
    r.batch_size = batch;
    r.warmup = warmup;
    r.thread_count = 1;  // kernels are single-threaded
    r.hardware_note = hardware_description() + "; " + std::to_string(std::thread::hardware_concurrency()) +
                      " hardware threads available";
    return r;
}

double acceleration_ratio(double time_original_ms, double time_pruned_ms) {
    if (!(time_original_ms > 0.0) || !(time_pruned_ms > 0.0))
        throw std::invalid_argument("acceleration_ratio: times must be positive");
    return time_original_ms / time_pruned_ms;
}

double flops_reduction_ratio(std::int64_t flops_original, std::int64_t flops_pruned) {
    if (flops_pruned <= 0 || flops_original < flops_pruned)
        throw std::invalid_argument("flops_reduction_ratio: need flops_original ≥ flops_pruned > 0");
    return 1.0 - static_cast<double>(flops_pruned) / static_cast<double>(flops_original);
}

double evaluate_accuracy(const BlockGraph& graph, const WeightStore& weights, const Split& split, int batch_size) {
    if (split.size() == 0) throw std::invalid_argument("evaluate_accuracy: empty split");
    const int k = graph.meta.num_classes;
    std::int64_t correct = 0;
    for (std::int64_t start = 0; start < split.size(); start += batch_size) {
        const std::int64_t count = std::min<std::int64_t>(batch_size, split.size() - start);
        Tensor logits = forward(graph, weights, slice_batch(split.images, start, count), Mode::eval);
        for (std::int64_t i = 0; i < count; ++i) {
            const float* row = logits.data() + i * k;
            int best = 0;
            for (int c = 1; c < k; ++c)
                if (row[c] > row[best]) best = c;
            if (best == split.labels[static_cast<std::size_t>(start + i)]) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(split.size());
}

nlohmann::json to_json(const MetricsSummary& m) {
    return {{"accuracy", m.accuracy}, {"flops", m.flops}, {"frr", m.frr}, {"ar", m.ar}, {"flops_per_mac", kFlopsPerMac}};
}

}  // namespace blockprune
