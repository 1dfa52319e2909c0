#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "blockprune/tensor.hpp"

namespace blockprune {

/// Named float32 tensors: learnable parameters plus batch-norm running statistics.
class WeightStore {
public:
    using Map = std::map<std::string, Tensor>;

    bool contains(const std::string& name) const { return entries_.contains(name); }
    const Tensor& at(const std::string& name) const;
    Tensor& at(const std::string& name);

    /// Throws if the name already exists.
    void insert(const std::string& name, Tensor t);
    void insert_or_assign(const std::string& name, Tensor t) { entries_.insert_or_assign(name, std::move(t)); }
    void erase(const std::string& name) { entries_.erase(name); }

    std::size_t size() const { return entries_.size(); }
    std::int64_t total_elements() const;
    Map::const_iterator begin() const { return entries_.begin(); }
    Map::const_iterator end() const { return entries_.end(); }
    Map::iterator begin() { return entries_.begin(); }
    Map::iterator end() { return entries_.end(); }

    /// 64-bit FNV-1a over names, shapes and raw bytes. Equal stores hash equal.
    std::uint64_t fingerprint() const;

    /// Same names and shapes, all zeros.
    WeightStore zeros_like() const;

    friend bool operator==(const WeightStore&, const WeightStore&) = default;

private:
    Map entries_;
};

/// Batch-norm running statistics are stored alongside parameters but never
/// receive gradients.
bool is_buffer(const std::string& name);

// Container layout: u64 little-endian header length, JSON header
// {name: {dtype, shape, offset, length}}, then the concatenated payload.
// Offsets are relative to the start of the payload.
void save_weights(const WeightStore& store, const std::filesystem::path& path);
WeightStore load_weights(const std::filesystem::path& path);

std::string serialize_weights(const WeightStore& store);
WeightStore deserialize_weights(const std::string& bytes);

}  // namespace blockprune
