#include "blockprune/weight_store.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace blockprune {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
}

void put_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t get_u64_le(const std::string& in) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
    return v;
}

void append_f32_le(std::string& out, std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
        out.append(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(float));
    } else {
        for (float f : values) {
            const auto u = std::bit_cast<std::uint32_t>(f);
            for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xffu));
        }
    }
}

void read_f32_le(const char* src, std::span<float> dst) {
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(dst.data(), src, dst.size() * sizeof(float));
    } else {
        for (std::size_t k = 0; k < dst.size(); ++k) {
            std::uint32_t u = 0;
            for (int i = 0; i < 4; ++i)
                u |= static_cast<std::uint32_t>(static_cast<unsigned char>(src[4 * k + i])) << (8 * i);
            dst[k] = std::bit_cast<float>(u);
        }
    }
}

}  // namespace

const Tensor& WeightStore::at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("weight not found: " + name);
    return it->second;
}

Tensor& WeightStore::at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("weight not found: " + name);
    return it->second;
}

void WeightStore::insert(const std::string& name, Tensor t) {
    if (!entries_.emplace(name, std::move(t)).second)
        throw std::invalid_argument("duplicate weight name: " + name);
}

std::int64_t WeightStore::total_elements() const {
    std::int64_t n = 0;
    for (const auto& [_, t] : entries_) n += t.numel();
    return n;
}

std::uint64_t WeightStore::fingerprint() const {
    std::uint64_t h = kFnvOffset;
    for (const auto& [name, t] : entries_) {
        fnv(h, name.data(), name.size());
        for (auto d : t.shape()) fnv(h, &d, sizeof d);
        fnv(h, t.data(), static_cast<std::size_t>(t.numel()) * sizeof(float));
    }
    return h;
}

WeightStore WeightStore::zeros_like() const {
    WeightStore z;
    for (const auto& [name, t] : entries_) z.insert(name, Tensor(t.shape()));
    return z;
}

bool is_buffer(const std::string& name) {
    auto ends_with = [&](std::string_view suffix) {
        return name.size() >= suffix.size() &&
               name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    return ends_with(".running_mean") || ends_with(".running_var");
}

std::string serialize_weights(const WeightStore& store) {
    nlohmann::ordered_json header = nlohmann::ordered_json::object();
    std::string payload;
    for (const auto& [name, t] : store) {
        const std::uint64_t offset = payload.size();
        append_f32_le(payload, t.values());
        header[name] = {{"dtype", "F32"},
                        {"shape", t.shape()},
                        {"offset", offset},
                        {"length", payload.size() - offset}};
    }
    const std::string h = header.dump();
    std::string out;
    out.reserve(8 + h.size() + payload.size());
    put_u64_le(out, h.size());
    out += h;
    out += payload;
    return out;
}

WeightStore deserialize_weights(const std::string& bytes) {
    if (bytes.size() < 8) throw std::runtime_error("weight container truncated (no header length)");
    const std::uint64_t hlen = get_u64_le(bytes);
    if (hlen > bytes.size() - 8) throw std::runtime_error("weight container truncated (header)");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(8, hlen));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("weight container header is not valid JSON: ") + e.what());
    }
    const std::size_t base = 8 + hlen;
    const std::size_t payload = bytes.size() - base;
    WeightStore store;
    for (const auto& [name, meta] : header.items()) {
        if (meta.at("dtype").get<std::string>() != "F32")
            throw std::runtime_error("unsupported dtype for " + name);
        auto shape = meta.at("shape").get<std::vector<std::int64_t>>();
        const auto offset = meta.at("offset").get<std::uint64_t>();
        const auto length = meta.at("length").get<std::uint64_t>();
        const auto expected = static_cast<std::uint64_t>(shape_numel(shape)) * sizeof(float);
        if (length != expected) throw std::runtime_error("byte length does not match shape for " + name);
        if (offset > payload || length > payload - offset)
            throw std::runtime_error("weight container truncated (payload of " + name + ")");
        Tensor t(std::move(shape));
        read_f32_le(bytes.data() + base + offset, t.values());
        store.insert(name, std::move(t));
    }
    return store;
}

void save_weights(const WeightStore& store, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    const std::string bytes = serialize_weights(store);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

WeightStore load_weights(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open weights: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return deserialize_weights(ss.str());
}

}  // namespace blockprune
