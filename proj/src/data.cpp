#include "blockprune/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace blockprune {

namespace fs = std::filesystem;

std::string_view to_string(Augmentation a) { return a == Augmentation::none ? "none" : "pad_crop_flip"; }

Augmentation parse_augmentation(std::string_view s) {
    if (s == "none") return Augmentation::none;
    if (s == "pad_crop_flip") return Augmentation::pad_crop_flip;
    throw std::invalid_argument("unknown augmentation: " + std::string(s));
}

Split read_cifar_records(const fs::path& file, const Shape3& shape, int num_classes) {
    if (!fs::exists(file)) throw std::runtime_error("missing dataset file: " + file.string());
    const auto record = static_cast<std::uintmax_t>(1 + shape.numel());
    const std::uintmax_t bytes = fs::file_size(file);
    if (bytes == 0 || bytes % record != 0)
        throw CorruptDataError("corrupt dataset file " + file.string() + ": size " + std::to_string(bytes) +
                               " is not a whole number of " + std::to_string(record) + "-byte records");
    const auto n = static_cast<std::int64_t>(bytes / record);
    std::ifstream f(file, std::ios::binary);
    std::vector<unsigned char> raw(static_cast<std::size_t>(bytes));
    f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
    if (!f) throw CorruptDataError("short read on " + file.string());
    Split s;
    s.images = Tensor::batch(n, shape);
    s.labels.resize(static_cast<std::size_t>(n));
    const std::int64_t pixels = shape.numel();
    for (std::int64_t i = 0; i < n; ++i) {
        const unsigned char* r = raw.data() + i * static_cast<std::int64_t>(record);
        if (r[0] >= num_classes)
            throw CorruptDataError("corrupt dataset file " + file.string() + ": label " + std::to_string(r[0]) +
                                   " out of range at record " + std::to_string(i));
        s.labels[static_cast<std::size_t>(i)] = r[0];
        float* dst = s.images.sample(i);
        for (std::int64_t p = 0; p < pixels; ++p) dst[p] = static_cast<float>(r[1 + p]) / 255.0f;
    }
    return s;
}

void write_cifar_records(const Split& split, const fs::path& file) {
    std::ofstream f(file, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + file.string());
    const std::int64_t pixels = split.images.numel() / std::max<std::int64_t>(split.size(), 1);
    std::vector<unsigned char> rec(static_cast<std::size_t>(1 + pixels));
    for (std::int64_t i = 0; i < split.size(); ++i) {
        rec[0] = static_cast<unsigned char>(split.labels[static_cast<std::size_t>(i)]);
        const float* src = split.images.sample(i);
        for (std::int64_t p = 0; p < pixels; ++p)
            rec[static_cast<std::size_t>(1 + p)] =
                static_cast<unsigned char>(std::lround(std::clamp(src[p], 0.0f, 1.0f) * 255.0f));
        f.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
    }
}

namespace {

Split concat_splits(std::vector<Split> parts) {
    std::int64_t n = 0;
    for (const auto& p : parts) n += p.size();
    Split out;
    out.images = Tensor::batch(n, parts.front().images.sample_shape());
    std::int64_t at = 0;
    for (const auto& p : parts) {
        std::copy(p.images.data(), p.images.data() + p.images.numel(), out.images.sample(at));
        out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
        at += p.size();
    }
    return out;
}

}  // namespace

Dataset load_cifar10(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error("CIFAR-10 directory not found: " + dir.string());
    const Shape3 shape{3, 32, 32};
    const auto expect = static_cast<std::uintmax_t>(kCifarRecordBytes) * kCifarRecordsPerFile;
    auto load = [&](const std::string& name) {
        const fs::path p = dir / name;
        if (!fs::exists(p)) throw std::runtime_error("missing CIFAR-10 file: " + p.string());
        if (fs::file_size(p) != expect)
            throw CorruptDataError("corrupt CIFAR-10 file " + p.string() + ": size " +
                                   std::to_string(fs::file_size(p)) + ", expected " + std::to_string(expect));
        return read_cifar_records(p, shape, 10);
    };
    std::vector<Split> train;
    for (int i = 1; i <= 5; ++i) train.push_back(load("data_batch_" + std::to_string(i) + ".bin"));
    Dataset d;
    d.name = "cifar10";
    d.num_classes = 10;
    d.image_shape = shape;
    d.train = concat_splits(std::move(train));
    d.test = load("test_batch.bin");
    channel_statistics(d.train.images, d.mean, d.std);
    normalize_inplace(d.train.images, d.mean, d.std);
    normalize_inplace(d.test.images, d.mean, d.std);
    return d;
}

void channel_statistics(const Tensor& images, std::vector<float>& mean, std::vector<float>& std) {
    const Shape3 s = images.sample_shape();
    const std::int64_t plane = static_cast<std::int64_t>(s.h) * s.w;
    mean.assign(static_cast<std::size_t>(s.c), 0.0f);
    std.assign(static_cast<std::size_t>(s.c), 1.0f);
    const double count = static_cast<double>(images.dim(0) * plane);
    for (int c = 0; c < s.c; ++c) {
        double sum = 0.0;
        double sq = 0.0;
        for (std::int64_t i = 0; i < images.dim(0); ++i) {
            const float* p = images.sample(i) + c * plane;
            for (std::int64_t j = 0; j < plane; ++j) {
                sum += p[j];
                sq += static_cast<double>(p[j]) * p[j];
            }
        }
        const double m = sum / count;
        const double var = std::max(sq / count - m * m, 0.0);
        mean[static_cast<std::size_t>(c)] = static_cast<float>(m);
        std[static_cast<std::size_t>(c)] = static_cast<float>(var > 1e-12 ? std::sqrt(var) : 1.0);
    }
}

void normalize_inplace(Tensor& images, const std::vector<float>& mean, const std::vector<float>& std) {
    const Shape3 s = images.sample_shape();
    const std::int64_t plane = static_cast<std::int64_t>(s.h) * s.w;
    for (std::int64_t i = 0; i < images.dim(0); ++i)
        for (int c = 0; c < s.c; ++c) {
            float* p = images.sample(i) + c * plane;
            const float m = mean[static_cast<std::size_t>(c)];
            const float inv = 1.0f / std[static_cast<std::size_t>(c)];
            for (std::int64_t j = 0; j < plane; ++j) p[j] = (p[j] - m) * inv;
        }
}

Dataset synthetic_dataset(const SyntheticSpec& spec) {
    if (spec.num_classes < 2) throw std::invalid_argument("synthetic_dataset: need at least 2 classes");
    if (spec.n_train <= 0 || spec.n_test <= 0)
        throw std::invalid_argument("synthetic_dataset: n_train and n_test must be positive");
    const Shape3 s = spec.image_shape;
    if (s.c <= 0 || s.h <= 0 || s.w <= 0) throw std::invalid_argument("synthetic_dataset: bad image shape");

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<float> unit(-1.0f, 1.0f);
    struct Proto {
        std::vector<float> colour;
        float cy, cx;
    };
    std::vector<Proto> protos;
    for (int k = 0; k < spec.num_classes; ++k) {
        Proto p;
        for (int c = 0; c < s.c; ++c) p.colour.push_back(unit(rng));
        p.cy = (0.5f + 0.3f * unit(rng)) * static_cast<float>(s.h - 1);
        p.cx = (0.5f + 0.3f * unit(rng)) * static_cast<float>(s.w - 1);
        protos.push_back(std::move(p));
    }
    const float sigma = std::max(1.0f, static_cast<float>(std::min(s.h, s.w)) / 5.0f);
    std::normal_distribution<float> gauss(0.0f, 1.0f);
    std::uniform_int_distribution<int> shift(-spec.jitter, spec.jitter);

    auto make_split = [&](std::int64_t n) {
        Split sp;
        sp.images = Tensor::batch(n, s);
        sp.labels.resize(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) {
            const int label = static_cast<int>(i % spec.num_classes);
            sp.labels[static_cast<std::size_t>(i)] = label;
            const Proto& p = protos[static_cast<std::size_t>(label)];
            const float cy = p.cy + static_cast<float>(shift(rng));
            const float cx = p.cx + static_cast<float>(shift(rng));
            float* img = sp.images.sample(i);
            for (int c = 0; c < s.c; ++c)
                for (int y = 0; y < s.h; ++y)
                    for (int x = 0; x < s.w; ++x) {
                        const float d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                        const float blob = p.colour[static_cast<std::size_t>(c)] * std::exp(-d2 / (2 * sigma * sigma));
                        img[(c * s.h + y) * s.w + x] = 0.5f + 0.4f * blob + 0.4f * spec.noise * gauss(rng);
                    }
        }
        return sp;
    };

    Dataset d;
    d.name = "synthetic";
    d.num_classes = spec.num_classes;
    d.image_shape = s;
    d.train = make_split(spec.n_train);
    d.test = make_split(spec.n_test);
    channel_statistics(d.train.images, d.mean, d.std);
    normalize_inplace(d.train.images, d.mean, d.std);
    normalize_inplace(d.test.images, d.mean, d.std);
    return d;
}

Tensor augment(const Tensor& batch, Augmentation policy, std::mt19937_64& rng) {
    if (policy == Augmentation::none) return batch;
    const Shape3 s = batch.sample_shape();
    const int pad = std::min({4, s.h - 1, s.w - 1});
    auto reflect = [](int i, int n) {
        if (i < 0) return -i;
        if (i >= n) return 2 * n - 2 - i;
        return i;
    };
    Tensor out(batch.shape());
    std::uniform_int_distribution<int> offset(0, 2 * pad);
    std::bernoulli_distribution flip(0.5);
    for (std::int64_t n = 0; n < batch.dim(0); ++n) {
        const int dy = offset(rng) - pad;
        const int dx = offset(rng) - pad;
        const bool f = flip(rng);
        const float* src = batch.sample(n);
        float* dst = out.sample(n);
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < s.h; ++y) {
                const int sy = reflect(y + dy, s.h);
                for (int x = 0; x < s.w; ++x) {
                    const int xx = f ? s.w - 1 - x : x;
                    const int sx = reflect(xx + dx, s.w);
                    dst[(c * s.h + y) * s.w + x] = src[(c * s.h + sy) * s.w + sx];
                }
            }
    }
    return out;
}

Tensor gather_images(const Split& split, std::span<const std::int64_t> indices) {
    const Shape3 s = split.images.sample_shape();
    Tensor out = Tensor::batch(static_cast<std::int64_t>(indices.size()), s);
    const std::int64_t per = s.numel();
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const float* src = split.images.sample(indices[i]);
        std::copy(src, src + per, out.sample(static_cast<std::int64_t>(i)));
    }
    return out;
}

std::vector<int> gather_labels(const Split& split, std::span<const std::int64_t> indices) {
    std::vector<int> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(split.labels.at(static_cast<std::size_t>(i)));
    return out;
}

std::vector<std::int64_t> shuffled_indices(std::int64_t n, std::uint64_t seed) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
}

}  // namespace blockprune
