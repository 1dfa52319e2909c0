#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "blockprune/tensor.hpp"

namespace blockprune {

struct Split {
    /// N×C×H×W, already normalized.
    Tensor images;
    std::vector<int> labels;

    std::int64_t size() const { return static_cast<std::int64_t>(labels.size()); }
};

struct Dataset {
    std::string name;
    Split train;
    Split test;
    int num_classes = 0;
    Shape3 image_shape;
    /// Per-channel statistics of the raw training images, used for both splits.
    std::vector<float> mean;
    std::vector<float> std;
};

enum class Augmentation { none, pad_crop_flip };

std::string_view to_string(Augmentation a);
Augmentation parse_augmentation(std::string_view s);

class CorruptDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kCifarRecordBytes = 1 + 3 * 32 * 32;
inline constexpr int kCifarRecordsPerFile = 10000;

/// Reads data_batch_1..5.bin and test_batch.bin from `dir`.
Dataset load_cifar10(const std::filesystem::path& dir);

/// Raw CIFAR-layout records (label byte + CHW pixel bytes), unnormalized, scaled to [0,1].
Split read_cifar_records(const std::filesystem::path& file, const Shape3& shape, int num_classes);

/// Writes a split in CIFAR record layout. Values are assumed in [0,1] and quantized to bytes.
void write_cifar_records(const Split& split, const std::filesystem::path& file);

struct SyntheticSpec {
    int num_classes = 10;
    std::int64_t n_train = 1000;
    std::int64_t n_test = 500;
    Shape3 image_shape{3, 16, 16};
    std::uint64_t seed = 0;
    /// Pixel noise standard deviation relative to the blob amplitude.
    float noise = 0.5f;
    /// Maximum blob-centre displacement in pixels.
    int jitter = 2;
};

/// Class-conditional Gaussian blobs: each class has a colour and a centre;
/// samples jitter the centre and add pixel noise. Deterministic in the seed.
Dataset synthetic_dataset(const SyntheticSpec& spec);

/// Per-channel mean/std over a split (unnormalized images).
void channel_statistics(const Tensor& images, std::vector<float>& mean, std::vector<float>& std);
void normalize_inplace(Tensor& images, const std::vector<float>& mean, const std::vector<float>& std);

/// pad_crop_flip: reflect-pad 4, random crop back to H×W, horizontal flip with p=0.5.
Tensor augment(const Tensor& batch, Augmentation policy, std::mt19937_64& rng);

/// Gathers the listed samples into a batch.
Tensor gather_images(const Split& split, std::span<const std::int64_t> indices);
std::vector<int> gather_labels(const Split& split, std::span<const std::int64_t> indices);

/// Seeded permutation of [0, n).
std::vector<std::int64_t> shuffled_indices(std::int64_t n, std::uint64_t seed);

}  // namespace blockprune
