#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "blockprune/block_graph.hpp"
#include "blockprune/tensor.hpp"
#include "blockprune/weight_store.hpp"

namespace testutil {

inline blockprune::Tensor random_tensor(std::vector<std::int64_t> shape, std::uint64_t seed, float scale = 1.0f) {
    blockprune::Tensor t(std::move(shape));
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> n(0.0f, scale);
    for (auto& v : t.values()) v = n(rng);
    return t;
}

/// Moves batch-norm statistics and shifts away from their identity defaults
/// so eval-mode tests exercise every term.
inline void perturb_batchnorm(blockprune::WeightStore& w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(-0.5f, 0.5f);
    for (auto& [name, t] : w) {
        auto ends = [&](const std::string& s) { return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0; };
        if (ends(".running_var") || ends("bn.weight") || ends("bn1.weight") || ends("bn2.weight"))
            for (auto& v : t.values()) v = 1.0f + u(rng);
        else if (ends(".running_mean") || ends(".bias"))
            for (auto& v : t.values()) v = u(rng);
    }
}

inline float max_abs_diff(const blockprune::Tensor& a, const blockprune::Tensor& b) {
    float m = 0.0f;
    for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("blockprune_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline blockprune::ArchDesc small_residual(int depth = 8, int width = 4, int hw = 8) {
    blockprune::ArchDesc a;
    a.family = blockprune::Family::residual;
    a.depth = depth;
    a.base_width = width;
    a.meta = {10, {3, hw, hw}};
    return a;
}

inline blockprune::ArchDesc small_dense(std::vector<int> units = {3, 2}, int growth = 3, int stem = 4, int hw = 8) {
    blockprune::ArchDesc a;
    a.family = blockprune::Family::dense;
    a.units_per_stage = std::move(units);
    a.growth = growth;
    a.stem_channels = stem;
    a.meta = {10, {3, hw, hw}};
    return a;
}

inline blockprune::ArchDesc small_chain(std::vector<int> units = {3, 2}, int width = 4, int hw = 8) {
    blockprune::ArchDesc a;
    a.family = blockprune::Family::plain_chain;
    a.units_per_stage = std::move(units);
    a.base_width = width;
    a.meta = {10, {3, hw, hw}};
    return a;
}

}  // namespace testutil
