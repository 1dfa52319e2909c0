#include "blockprune/probes.hpp"

#include <cmath>
#include <stdexcept>

#include "blockprune/backbones.hpp"
#include "blockprune/loss.hpp"
#include "blockprune/nn.hpp"

namespace blockprune {

std::string_view to_string(Reduction r) { return r == Reduction::flatten ? "flatten" : "global_average_pool"; }

Reduction parse_reduction(std::string_view s) {
    if (s == "flatten") return Reduction::flatten;
    if (s == "global_average_pool" || s == "gap") return Reduction::global_average_pool;
    throw std::invalid_argument("unknown probe reduction: " + std::string(s));
}

nlohmann::json to_json(const ProbeReport& r) {
    nlohmann::json acc = nlohmann::json::object();
    for (const auto& [id, a] : r.accuracies) acc[std::to_string(id)] = a;
    nlohmann::json correct = nlohmann::json::object();
    for (const auto& [id, c] : r.correct) correct[std::to_string(id)] = c;
    return {{"seed", r.seed},
            {"eval_split_size", r.eval_split_size},
            {"reduction", to_string(r.reduction)},
            {"accuracies", acc},
            {"correct", correct}};
}

ProbeReport probe_report_from_json(const nlohmann::json& j) {
    ProbeReport r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.eval_split_size = j.at("eval_split_size").get<std::int64_t>();
    r.reduction = parse_reduction(j.value("reduction", std::string("flatten")));
    for (const auto& [k, v] : j.at("accuracies").items()) r.accuracies[std::stoi(k)] = v.get<double>();
    if (j.contains("correct"))
        for (const auto& [k, v] : j.at("correct").items()) r.correct[std::stoi(k)] = v.get<std::int64_t>();
    return r;
}

std::int64_t probe_feature_dim(const BlockGraph& graph, const Block& block, Reduction reduction) {
    if (block.kind == BlockKind::classifier_head) return graph.meta.num_classes;
    return reduction == Reduction::flatten ? block.out_shape.numel() : block.out_shape.c;
}

ProbeSet attach_probes(const BlockGraph& graph, Reduction reduction, std::int64_t max_feature_dim) {
    ProbeSet set;
    set.reduction = reduction;
    const std::int64_t k = graph.meta.num_classes;
    for (const Block& b : graph.blocks) {
        const std::int64_t d = probe_feature_dim(graph, b, reduction);
        if (d > max_feature_dim)
            throw std::invalid_argument("probe feature dimension " + std::to_string(d) + " after block " +
                                        std::to_string(b.id) + " exceeds the cap of " +
                                        std::to_string(max_feature_dim));
        set.probes.push_back({b.id, Tensor({k, d}), Tensor({k})});
    }
    return set;
}

namespace {

Tensor reduce_features(const Tensor& out, Reduction reduction) {
    if (out.rank() == 2) return out;  // head logits
    return reduction == Reduction::flatten ? nn::flatten(out) : nn::global_avgpool(out);
}

void check_probe_set(const BlockGraph& graph, const ProbeSet& set) {
    if (static_cast<int>(set.probes.size()) != graph.size())
        throw std::invalid_argument("probe set does not cover the graph's blocks");
    for (const Block& b : graph.blocks) {
        const Probe& p = set.probes[static_cast<std::size_t>(b.id)];
        if (p.block_id != b.id || p.weight.dim(1) != probe_feature_dim(graph, b, set.reduction))
            throw std::invalid_argument("probe for block " + std::to_string(b.id) + " does not match the graph");
    }
}

}  // namespace

ProbeSet train_probes(const BlockGraph& graph, const WeightStore& weights, ProbeSet probes, const Dataset& data,
                      std::uint64_t seed, const ProbeTraining& training) {
    check_probe_set(graph, probes);
    if (data.train.size() == 0) throw std::invalid_argument("train_probes: empty training split");
    if (training.batch_size < 1) throw std::invalid_argument("train_probes: batch_size ≥ 1 required");
    probes.seed = seed;
    const int k = graph.meta.num_classes;
    struct Velocity {
        Tensor w, b;
    };
    std::vector<Velocity> vel;
    for (const Probe& p : probes.probes) vel.push_back({Tensor(p.weight.shape()), Tensor(p.bias.shape())});

    const std::int64_t n = data.train.size();
    for (std::size_t epoch = 0; epoch < training.learning_rates.size(); ++epoch) {
        const float lr = training.learning_rates[epoch];
        const auto order = shuffled_indices(n, seed * 0x9E3779B97F4A7C15ull + epoch + 1);
        for (std::int64_t start = 0; start < n; start += training.batch_size) {
            const std::int64_t count = std::min<std::int64_t>(training.batch_size, n - start);
            std::span<const std::int64_t> idx(order.data() + start, static_cast<std::size_t>(count));
            const Tensor batch = gather_images(data.train, idx);
            const std::vector<int> labels = gather_labels(data.train, idx);
            auto step = [&](int id, const Tensor& out) {
                Probe& p = probes.probes[static_cast<std::size_t>(id)];
                const Tensor feats = reduce_features(out, probes.reduction);
                const Tensor logits = nn::linear(feats, p.weight, p.bias);
                auto loss = mimic_ce_loss<float>({}, logits.values(), labels, k, 0.0f);
                if (!std::isfinite(loss.loss))
                    throw DivergenceError(static_cast<int>(epoch) + 1,
                                          "non-finite probe loss at block " + std::to_string(id));
                Tensor dw(p.weight.shape());
                Tensor db(p.bias.shape());
                nn::linear_backward(feats, p.weight, Tensor(logits.shape(), std::move(loss.grad)), nullptr, dw, &db);
                Velocity& v = vel[static_cast<std::size_t>(id)];
                auto update = [&](Tensor& param, Tensor& velocity, const Tensor& grad) {
                    auto pv = param.values();
                    auto vv = velocity.values();
                    auto gv = grad.values();
                    for (std::size_t i = 0; i < pv.size(); ++i) {
                        vv[i] = training.momentum * vv[i] + gv[i];
                        pv[i] -= lr * vv[i];
                    }
                };
                update(p.weight, v.w, dw);
                update(p.bias, v.b, db);
            };
            (void)forward(graph, weights, batch, Mode::eval, step);
        }
    }
    return probes;
}

ProbeReport eval_probes(const BlockGraph& graph, const WeightStore& weights, const ProbeSet& probes,
                        const Split& eval_split, int batch_size) {
    if (eval_split.size() == 0) throw std::invalid_argument("eval_probes: empty evaluation split");
    check_probe_set(graph, probes);
    const int k = graph.meta.num_classes;
    std::vector<std::int64_t> correct(probes.probes.size(), 0);
    for (std::int64_t start = 0; start < eval_split.size(); start += batch_size) {
        const std::int64_t count = std::min<std::int64_t>(batch_size, eval_split.size() - start);
        const Tensor batch = slice_batch(eval_split.images, start, count);
        auto score = [&](int id, const Tensor& out) {
            const Probe& p = probes.probes[static_cast<std::size_t>(id)];
            const Tensor logits = nn::linear(reduce_features(out, probes.reduction), p.weight, p.bias);
            for (std::int64_t i = 0; i < count; ++i) {
                const float* row = logits.data() + i * k;
                int best = 0;
                for (int c = 1; c < k; ++c)
                    if (row[c] > row[best]) best = c;
                if (best == eval_split.labels[static_cast<std::size_t>(start + i)])
                    ++correct[static_cast<std::size_t>(id)];
            }
        };
        (void)forward(graph, weights, batch, Mode::eval, score);
    }
    ProbeReport r;
    r.eval_split_size = eval_split.size();
    r.seed = probes.seed;
    r.reduction = probes.reduction;
    for (std::size_t id = 0; id < correct.size(); ++id) {
        r.correct[static_cast<int>(id)] = correct[id];
        r.accuracies[static_cast<int>(id)] =
            static_cast<double>(correct[id]) / static_cast<double>(eval_split.size());
    }
    return r;
}

}  // namespace blockprune
