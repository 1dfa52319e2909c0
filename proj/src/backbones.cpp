#include "blockprune/backbones.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <stdexcept>

#include "blockprune/loss.hpp"
#include "blockprune/metrics.hpp"

namespace blockprune {

namespace {

std::uint64_t name_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Shared state for one pass through the network.
struct Pass {
    const WeightStore& w;
    Mode mode;
    WeightStore* running = nullptr;  // receives running-stat updates
    Tape* tape = nullptr;
    const FeatureVisitor* visit = nullptr;

    const Tensor& p(const std::string& name) const { return w.at(name); }

    Tensor bn(const Tensor& x, const std::string& prefix, Tape::Entry* e) {
        const Tensor& gamma = p(prefix + ".weight");
        const Tensor& beta = p(prefix + ".bias");
        if (mode == Mode::eval)
            return nn::batchnorm_eval(x, gamma, beta, p(prefix + ".running_mean"), p(prefix + ".running_var"));
        std::vector<float> mean;
        std::vector<float> var;
        nn::BatchNormCache* cache = nullptr;
        if (e) cache = &e->bn.emplace_back();
        Tensor y = nn::batchnorm_train(x, gamma, beta, cache, running ? &mean : nullptr, running ? &var : nullptr);
        if (running)
            nn::update_running_stats(running->at(prefix + ".running_mean"), running->at(prefix + ".running_var"),
                                     mean, var);
        return y;
    }
};

int stride_of(const Block& b) { return b.in_shape.h == b.out_shape.h ? 1 : 2; }

Tensor block_forward(const BlockGraph& g, const Block& b, const Tensor& x, Pass& pass) {
    Tape::Entry* e = nullptr;
    if (pass.tape) {
        e = &pass.tape->blocks.emplace_back();
        e->input = x;
    }
    auto save = [&](const Tensor& t) {
        if (e) e->saved.push_back(t);
    };
    const std::string& s = b.scope;
    switch (b.kind) {
    case BlockKind::stem: {
        Tensor c = nn::conv2d(x, pass.p(s + ".conv.weight"), 1, 1);
        if (g.topology == Topology::dense) return c;
        Tensor y = nn::relu(pass.bn(c, s + ".bn", e));
        save(y);
        return y;
    }
    case BlockKind::conv_bn_relu_chain_unit: {
        Tensor c = nn::conv2d(x, pass.p(s + ".conv.weight"), stride_of(b), 1);
        Tensor y = nn::relu(pass.bn(c, s + ".bn", e));
        save(y);
        return y;
    }
    case BlockKind::residual_unit: {
        const int st = stride_of(b);
        Tensor a1 = nn::relu(pass.bn(nn::conv2d(x, pass.p(s + ".conv1.weight"), st, 1), s + ".bn1", e));
        Tensor y = pass.bn(nn::conv2d(a1, pass.p(s + ".conv2.weight"), 1, 1), s + ".bn2", e);
        if (b.in_shape != b.out_shape)
            nn::add_inplace(y, pass.bn(nn::conv2d(x, pass.p(s + ".shortcut.conv.weight"), st, 0),
                                       s + ".shortcut.bn", e));
        else
            nn::add_inplace(y, x);
        y = nn::relu(y);
        save(a1);
        save(y);
        return y;
    }
    case BlockKind::dense_unit: {
        Tensor r = nn::relu(pass.bn(x, s + ".bn", e));
        Tensor c = nn::conv2d(r, pass.p(s + ".conv.weight"), 1, 1);
        save(r);
        return nn::concat_channels(x, c);
    }
    case BlockKind::transition: {
        Tensor r = nn::relu(pass.bn(x, s + ".bn", e));
        save(r);
        return nn::avgpool2(nn::conv2d(r, pass.p(s + ".conv.weight"), 1, 0));
    }
    case BlockKind::classifier_head: {
        Tensor h = g.topology == Topology::dense ? nn::relu(pass.bn(x, s + ".bn", e)) : x;
        Tensor pooled = nn::global_avgpool(h);
        Tensor logits = nn::linear(pooled, pass.p(s + ".fc.weight"), pass.p(s + ".fc.bias"));
        if (g.topology == Topology::dense) save(h);
        save(pooled);
        return logits;
    }
    }
    throw std::logic_error("unhandled block kind");
}

Tensor block_backward(const BlockGraph& g, const Block& b, const Tape::Entry& e, Tensor dy, const WeightStore& w,
                      WeightStore& grads, bool need_dx) {
    const std::string& s = b.scope;
    const Tensor& x = e.input;
    Tensor dx;
    switch (b.kind) {
    case BlockKind::stem: {
        if (g.topology != Topology::dense) {
            nn::relu_backward_inplace(dy, e.saved[0]);
            dy = nn::batchnorm_backward(dy, w.at(s + ".bn.weight"), e.bn[0], grads.at(s + ".bn.weight"),
                                        grads.at(s + ".bn.bias"));
        }
        nn::conv2d_backward(x, w.at(s + ".conv.weight"), 1, 1, dy, need_dx ? &dx : nullptr,
                            grads.at(s + ".conv.weight"));
        return dx;
    }
    case BlockKind::conv_bn_relu_chain_unit: {
        nn::relu_backward_inplace(dy, e.saved[0]);
        dy = nn::batchnorm_backward(dy, w.at(s + ".bn.weight"), e.bn[0], grads.at(s + ".bn.weight"),
                                    grads.at(s + ".bn.bias"));
        nn::conv2d_backward(x, w.at(s + ".conv.weight"), stride_of(b), 1, dy, &dx, grads.at(s + ".conv.weight"));
        return dx;
    }
    case BlockKind::residual_unit: {
        const int st = stride_of(b);
        const Tensor& a1 = e.saved[0];
        nn::relu_backward_inplace(dy, e.saved[1]);
        Tensor dskip;
        if (b.in_shape != b.out_shape) {
            Tensor dsc = nn::batchnorm_backward(dy, w.at(s + ".shortcut.bn.weight"), e.bn[2],
                                                grads.at(s + ".shortcut.bn.weight"), grads.at(s + ".shortcut.bn.bias"));
            nn::conv2d_backward(x, w.at(s + ".shortcut.conv.weight"), st, 0, dsc, &dskip,
                                grads.at(s + ".shortcut.conv.weight"));
        } else {
            dskip = dy;
        }
        Tensor dc2 = nn::batchnorm_backward(dy, w.at(s + ".bn2.weight"), e.bn[1], grads.at(s + ".bn2.weight"),
                                            grads.at(s + ".bn2.bias"));
        Tensor da1;
        nn::conv2d_backward(a1, w.at(s + ".conv2.weight"), 1, 1, dc2, &da1, grads.at(s + ".conv2.weight"));
        nn::relu_backward_inplace(da1, a1);
        Tensor dc1 = nn::batchnorm_backward(da1, w.at(s + ".bn1.weight"), e.bn[0], grads.at(s + ".bn1.weight"),
                                            grads.at(s + ".bn1.bias"));
        nn::conv2d_backward(x, w.at(s + ".conv1.weight"), st, 1, dc1, &dx, grads.at(s + ".conv1.weight"));
        nn::add_inplace(dx, dskip);
        return dx;
    }
    case BlockKind::dense_unit: {
        const Tensor& r = e.saved[0];
        Tensor dpass;
        Tensor dc;
        nn::split_channels(dy, b.in_shape.c, dpass, dc);
        Tensor dr;
        nn::conv2d_backward(r, w.at(s + ".conv.weight"), 1, 1, dc, &dr, grads.at(s + ".conv.weight"));
        nn::relu_backward_inplace(dr, r);
        dx = nn::batchnorm_backward(dr, w.at(s + ".bn.weight"), e.bn[0], grads.at(s + ".bn.weight"),
                                    grads.at(s + ".bn.bias"));
        nn::add_inplace(dx, dpass);
        return dx;
    }
    case BlockKind::transition: {
        const Tensor& r = e.saved[0];
        Tensor dc = nn::avgpool2_backward(dy);
        Tensor dr;
        nn::conv2d_backward(r, w.at(s + ".conv.weight"), 1, 0, dc, &dr, grads.at(s + ".conv.weight"));
        nn::relu_backward_inplace(dr, r);
        return nn::batchnorm_backward(dr, w.at(s + ".bn.weight"), e.bn[0], grads.at(s + ".bn.weight"),
                                      grads.at(s + ".bn.bias"));
    }
    case BlockKind::classifier_head: {
        const bool dense = g.topology == Topology::dense;
        const Tensor& pooled = e.saved[dense ? 1 : 0];
        Tensor dpooled;
        nn::linear_backward(pooled, w.at(s + ".fc.weight"), dy, &dpooled, grads.at(s + ".fc.weight"),
                            &grads.at(s + ".fc.bias"));
        Tensor dh = nn::global_avgpool_backward(dpooled, b.in_shape);
        if (!dense) return dh;
        nn::relu_backward_inplace(dh, e.saved[0]);
        return nn::batchnorm_backward(dh, w.at(s + ".bn.weight"), e.bn[0], grads.at(s + ".bn.weight"),
                                      grads.at(s + ".bn.bias"));
    }
    }
    throw std::logic_error("unhandled block kind");
}

Tensor run(const BlockGraph& g, const Tensor& batch, Pass& pass) {
    if (batch.rank() != 4 || batch.sample_shape() != g.meta.input_shape)
        throw std::invalid_argument("shape mismatch: batch " + shape_string(batch.shape()) +
                                    " does not match model input " + to_string(g.meta.input_shape));
    if (batch.dim(0) < 1) throw std::invalid_argument("shape mismatch: empty batch");
    Tensor x = batch;
    for (const Block& b : g.blocks) {
        x = block_forward(g, b, x, pass);
        if (pass.visit && *pass.visit) (*pass.visit)(b.id, x);
    }
    return x;
}

}  // namespace

WeightStore init_weights(const BlockGraph& graph, std::uint64_t seed) {
    WeightStore w;
    for (const Block& b : graph.blocks) {
        for (const ParamSpec& spec : block_params(graph, b)) {
            Tensor t(spec.shape);
            std::mt19937_64 rng(seed ^ (name_hash(spec.name) * 0x9E3779B97F4A7C15ull));
            switch (spec.role) {
            case ParamRole::conv_weight: {
                const double fan_out = static_cast<double>(spec.shape[0] * spec.shape[2] * spec.shape[3]);
                std::normal_distribution<float> dist(0.0f, static_cast<float>(std::sqrt(2.0 / fan_out)));
                for (auto& v : t.values()) v = dist(rng);
                break;
            }
            case ParamRole::fc_weight:
            case ParamRole::fc_bias: {
                const float bound = 1.0f / std::sqrt(static_cast<float>(b.in_shape.c));
                std::uniform_real_distribution<float> dist(-bound, bound);
                for (auto& v : t.values()) v = dist(rng);
                break;
            }
            case ParamRole::bn_weight:
            case ParamRole::bn_running_var:
                t.fill(1.0f);
                break;
            case ParamRole::bn_bias:
            case ParamRole::bn_running_mean:
                break;
            }
            w.insert(spec.name, std::move(t));
        }
    }
    return w;
}

Tensor forward(const BlockGraph& graph, const WeightStore& weights, const Tensor& batch, Mode mode,
               const FeatureVisitor& visit) {
    Pass pass{weights, mode, nullptr, nullptr, &visit};
    return run(graph, batch, pass);
}

Tensor forward_train(const BlockGraph& graph, WeightStore& weights, const Tensor& batch, Tape& tape) {
    tape.blocks.clear();
    Pass pass{weights, Mode::train, &weights, &tape, nullptr};
    return run(graph, batch, pass);
}

void backward(const BlockGraph& graph, const WeightStore& weights, const Tape& tape, const Tensor& dlogits,
              WeightStore& grads) {
    if (tape.blocks.size() != graph.blocks.size()) throw std::logic_error("tape does not match graph");
    Tensor dy = dlogits;
    for (int i = graph.size() - 1; i >= 0; --i) {
        const auto idx = static_cast<std::size_t>(i);
        dy = block_backward(graph, graph.blocks[idx], tape.blocks[idx], std::move(dy), weights, grads, i > 0);
    }
}

void validate_schedule(const TrainSchedule& s) {
    if (s.epochs < 1) throw std::invalid_argument("epochs ≥ 1 required");
    if (s.batch_size < 1) throw std::invalid_argument("batch_size ≥ 1 required");
    if (s.lr_milestones.empty() || s.lr_milestones.front().first != 0)
        throw std::invalid_argument("learning-rate milestones must start at epoch 0");
    for (std::size_t i = 0; i < s.lr_milestones.size(); ++i) {
        if (!(s.lr_milestones[i].second > 0.0f)) throw std::invalid_argument("learning rates must be positive");
        if (i > 0 && (s.lr_milestones[i].first <= s.lr_milestones[i - 1].first ||
                      s.lr_milestones[i].second > s.lr_milestones[i - 1].second))
            throw std::invalid_argument("learning-rate milestones must be increasing in epoch and non-increasing in rate");
    }
    if (s.momentum < 0.0f || s.weight_decay < 0.0f) throw std::invalid_argument("momentum and weight decay must be ≥ 0");
}

float learning_rate_at(const TrainSchedule& s, int epoch) {
    float lr = s.lr_milestones.front().second;
    for (const auto& [start, rate] : s.lr_milestones)
        if (epoch >= start) lr = rate;
    return lr;
}

FitResult fit(const BlockGraph& graph, WeightStore& weights, const Dataset& data, const FitOptions& o) {
    if (o.epochs < 0) throw std::invalid_argument("epochs must be non-negative");
    if (o.batch_size < 1) throw std::invalid_argument("batch_size ≥ 1 required");
    if (o.alpha > 0.0f && (!o.teacher.graph || !o.teacher.weights))
        throw std::invalid_argument("mimic loss needs a teacher");
    if (o.teacher.graph && o.teacher.graph->meta.num_classes != graph.meta.num_classes)
        throw std::invalid_argument("teacher and student disagree on num_classes");
    if (data.train.size() == 0) throw std::invalid_argument("empty training split");

    FitResult result;
    WeightStore velocity = weights.zeros_like();
    WeightStore grads = weights.zeros_like();
    const std::int64_t n = data.train.size();
    const int classes = graph.meta.num_classes;
    std::uint64_t order_salt = 0;
    if (!o.deterministic) order_salt = (static_cast<std::uint64_t>(std::random_device{}()) << 32) | std::random_device{}();

    for (int epoch = 0; epoch < o.epochs; ++epoch) {
        const float lr = o.learning_rate ? o.learning_rate(epoch) : 0.01f;
        const std::uint64_t epoch_seed = (o.seed * 0x9E3779B97F4A7C15ull) ^ (static_cast<std::uint64_t>(epoch) + 1) ^ order_salt;
        const auto order = shuffled_indices(n, epoch_seed);
        std::mt19937_64 aug_rng(epoch_seed + 17);
        double loss_sum = 0.0;
        std::int64_t seen = 0;
        Tape tape;
        for (std::int64_t start = 0; start < n; start += o.batch_size) {
            const std::int64_t count = std::min<std::int64_t>(o.batch_size, n - start);
            std::span<const std::int64_t> idx(order.data() + start, static_cast<std::size_t>(count));
            Tensor batch = augment(gather_images(data.train, idx), o.augmentation, aug_rng);
            const std::vector<int> labels = gather_labels(data.train, idx);

            Tensor teacher_logits;
            if (o.alpha > 0.0f) teacher_logits = forward(*o.teacher.graph, *o.teacher.weights, batch, Mode::eval);

            Tensor logits = forward_train(graph, weights, batch, tape);
            for (float v : logits.values())
                if (!std::isfinite(v)) throw DivergenceError(epoch + 1, "non-finite logits");
            auto loss = mimic_ce_loss<float>(o.alpha > 0.0f ? teacher_logits.values() : std::span<const float>{},
                                             logits.values(), labels, classes, o.alpha);
            if (!std::isfinite(loss.loss)) throw DivergenceError(epoch + 1, "loss became non-finite");
            loss_sum += static_cast<double>(loss.loss) * static_cast<double>(count);
            seen += count;

            for (auto& [_, g] : grads) g.fill(0.0f);
            backward(graph, weights, tape, Tensor(logits.shape(), std::move(loss.grad)), grads);

            for (auto& [name, param] : weights) {
                if (is_buffer(name)) continue;
                auto pv = param.values();
                auto gv = grads.at(name).values();
                auto vv = velocity.at(name).values();
                for (std::size_t i = 0; i < pv.size(); ++i) {
                    const float d = gv[i] + o.weight_decay * pv[i];
                    vv[i] = o.momentum * vv[i] + d;
                    pv[i] -= lr * vv[i];
                }
            }
        }
        EpochLog log;
        log.epoch = epoch + 1;
        log.train_loss = loss_sum / static_cast<double>(std::max<std::int64_t>(seen, 1));
        log.learning_rate = lr;
        if (!std::isfinite(log.train_loss)) throw DivergenceError(epoch + 1, "loss became non-finite");
        if (o.eval_each_epoch || epoch + 1 == o.epochs) log.test_accuracy = evaluate_accuracy(graph, weights, data.test);
        result.log.push_back(log);
        if (o.on_epoch) o.on_epoch(log);
    }
    result.final_accuracy =
        result.log.empty() ? evaluate_accuracy(graph, weights, data.test) : result.log.back().test_accuracy;
    return result;
}

TrainResult train_baseline(const BlockGraph& graph, WeightStore weights, const Dataset& data,
                           const TrainSchedule& schedule, std::uint64_t seed, bool deterministic,
                           const std::function<void(const EpochLog&)>& on_epoch) {
    validate_schedule(schedule);
    if (data.num_classes != graph.meta.num_classes || data.image_shape != graph.meta.input_shape)
        throw std::invalid_argument("dataset does not match the graph's dataset_meta");
    FitOptions o;
    o.epochs = schedule.epochs;
    o.learning_rate = [schedule](int e) { return learning_rate_at(schedule, e); };
    o.momentum = schedule.momentum;
    o.weight_decay = schedule.weight_decay;
    o.batch_size = schedule.batch_size;
    o.augmentation = schedule.augmentation;
    o.seed = seed;
    o.deterministic = deterministic;
    o.on_epoch = on_epoch;
    FitResult r = fit(graph, weights, data, o);
    return {std::move(weights), r.final_accuracy, std::move(r.log)};
}

void write_epoch_log(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f << "epoch,train_loss,test_accuracy,learning_rate\n" << std::setprecision(8);
    for (const auto& e : log) f << e.epoch << "," << e.train_loss << "," << e.test_accuracy << "," << e.learning_rate << "\n";
}

}  // namespace blockprune
