#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "blockprune/block_graph.hpp"
#include "blockprune/data.hpp"
#include "blockprune/nn.hpp"
#include "blockprune/tensor.hpp"
#include "blockprune/weight_store.hpp"

namespace blockprune {

enum class Mode { train, eval };

/// Deterministic in (graph, seed). Conv weights ~ N(0, 2/(k*k*C_out)),
/// batch-norm scale 1 / shift 0 / running stats (0, 1), linear layers
/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)). Each tensor draws from its own stream
/// keyed by name, so adding or removing blocks leaves other tensors unchanged.
WeightStore init_weights(const BlockGraph& graph, std::uint64_t seed);

/// Called with each block's output; the head's output is the logits.
using FeatureVisitor = std::function<void(int block_id, const Tensor& output)>;

/// Pre-softmax logits, batch × num_classes. Train mode normalizes with batch
/// statistics but never touches the running statistics in `weights`.
Tensor forward(const BlockGraph& graph, const WeightStore& weights, const Tensor& batch, Mode mode,
               const FeatureVisitor& visit = {});

/// Saved activations of a training-mode forward pass.
struct Tape {
    struct Entry {
        Tensor input;
        std::vector<Tensor> saved;
        std::vector<nn::BatchNormCache> bn;
    };
    std::vector<Entry> blocks;
};

/// Training forward: batch statistics, running statistics updated in place,
/// activations recorded on `tape`.
Tensor forward_train(const BlockGraph& graph, WeightStore& weights, const Tensor& batch, Tape& tape);

/// Back-propagates d loss / d logits through the taped pass, accumulating
/// parameter gradients into `grads` (same names as the weight store).
void backward(const BlockGraph& graph, const WeightStore& weights, const Tape& tape, const Tensor& dlogits,
              WeightStore& grads);

// ---------------------------------------------------------------------------
// Training

struct TrainSchedule {
    int epochs = 60;
    /// (first epoch, learning rate); epochs are 0-based.
    std::vector<std::pair<int, float>> lr_milestones{{0, 0.1f}, {30, 0.01f}, {45, 0.001f}};
    float momentum = 0.9f;
    float weight_decay = 1e-4f;
    int batch_size = 128;
    Augmentation augmentation = Augmentation::pad_crop_flip;
};

/// Throws std::invalid_argument naming the violated invariant.
void validate_schedule(const TrainSchedule& s);
float learning_rate_at(const TrainSchedule& s, int epoch);

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double test_accuracy = 0.0;
    double learning_rate = 0.0;
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(int epoch, const std::string& what)
        : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

struct Teacher {
    const BlockGraph* graph = nullptr;
    const WeightStore* weights = nullptr;
};

struct FitOptions {
    int epochs = 1;
    std::function<float(int epoch)> learning_rate;
    float momentum = 0.9f;
    float weight_decay = 1e-4f;
    int batch_size = 128;
    Augmentation augmentation = Augmentation::pad_crop_flip;
    std::uint64_t seed = 0;
    /// When false the data order also mixes in std::random_device.
    bool deterministic = true;
    /// Mimic weight; > 0 requires a teacher.
    float alpha = 0.0f;
    Teacher teacher;
    /// Evaluate test accuracy after every epoch (otherwise only after the last).
    bool eval_each_epoch = true;
    std::function<void(const EpochLog&)> on_epoch;
};

struct FitResult {
    std::vector<EpochLog> log;
    double final_accuracy = 0.0;
};

/// SGD with momentum and weight decay on mimic_ce_loss. Updates `weights` in place.
FitResult fit(const BlockGraph& graph, WeightStore& weights, const Dataset& data, const FitOptions& options);

struct TrainResult {
    WeightStore weights;
    double accuracy = 0.0;
    std::vector<EpochLog> log;
};

/// Cross-entropy training of an un-pruned teacher.
TrainResult train_baseline(const BlockGraph& graph, WeightStore weights, const Dataset& data,
                           const TrainSchedule& schedule, std::uint64_t seed, bool deterministic = true,
                           const std::function<void(const EpochLog&)>& on_epoch = {});

/// Writes the per-epoch log as CSV (epoch,train_loss,test_accuracy,learning_rate).
void write_epoch_log(const std::vector<EpochLog>& log, const std::filesystem::path& path);

}  // namespace blockprune
