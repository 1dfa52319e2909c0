#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "blockprune/tensor.hpp"
#include "blockprune/weight_store.hpp"

namespace blockprune {

enum class BlockKind {
    conv_bn_relu_chain_unit,
    residual_unit,
    dense_unit,
    stem,
    transition,
    classifier_head,
};

enum class Topology { sequential, residual, dense };
enum class EdgeKind { sequential, identity_skip, concat };

std::string_view to_string(BlockKind k);
std::string_view to_string(Topology t);
std::string_view to_string(EdgeKind e);
BlockKind parse_block_kind(std::string_view s);
Topology parse_topology(std::string_view s);
EdgeKind parse_edge_kind(std::string_view s);

/// Units are the only kinds that can ever be removed.
bool is_unit(BlockKind k);

struct Block {
    int id = 0;
    BlockKind kind = BlockKind::stem;
    /// Stable parameter-name prefix; survives re-indexing.
    std::string scope;
    /// Dense stage (or residual/chain stage) the block belongs to. For a
    /// transition this is the stage it closes.
    int stage = 0;
    Shape3 in_shape;
    Shape3 out_shape;
    std::vector<std::string> param_names;
    /// Growth-rate output width of a dense unit, 0 otherwise.
    int produces_channels = 0;

    friend bool operator==(const Block&, const Block&) = default;
};

struct Edge {
    int src = 0;
    int dst = 0;
    EdgeKind kind = EdgeKind::sequential;

    friend bool operator==(const Edge&, const Edge&) = default;
};

struct DatasetMeta {
    int num_classes = 10;
    Shape3 input_shape{3, 32, 32};

    friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

struct BlockGraph {
    Topology topology = Topology::sequential;
    std::vector<Block> blocks;
    std::vector<Edge> edges;
    DatasetMeta meta;

    const Block& block(int id) const { return blocks.at(static_cast<std::size_t>(id)); }
    int size() const { return static_cast<int>(blocks.size()); }

    friend bool operator==(const BlockGraph&, const BlockGraph&) = default;
};

// ---------------------------------------------------------------------------
// Architecture families

enum class Family { plain_chain, residual, dense };

std::string_view to_string(Family f);
Family parse_family(std::string_view s);

struct ArchDesc {
    Family family = Family::residual;
    /// Residual only: total depth 6n+2.
    int depth = 20;
    /// Chain and dense: units per stage. Chain stages after the first
    /// downsample by 2 and double the width; dense stages are joined by
    /// transitions.
    std::vector<int> units_per_stage{3, 3, 3};
    /// Stem width for chain/residual; stage widths double from here.
    int base_width = 16;
    /// Dense growth rate.
    int growth = 12;
    /// Dense stem output channels.
    int stem_channels = 16;
    DatasetMeta meta;

    friend bool operator==(const ArchDesc&, const ArchDesc&) = default;
};

/// Structure only, no weights.
BlockGraph make_graph(const ArchDesc& arch);

struct BuiltModel {
    BlockGraph graph;
    WeightStore weights;
};

/// Graph plus weights from the backbone initializer.
BuiltModel build_graph(const ArchDesc& arch, std::uint64_t seed);

/// Graph plus weights loaded from a container file; shapes are checked.
BuiltModel build_graph(const ArchDesc& arch, const std::filesystem::path& weights_file);

// ---------------------------------------------------------------------------
// Parameters

enum class ParamRole { conv_weight, bn_weight, bn_bias, bn_running_mean, bn_running_var, fc_weight, fc_bias };

struct ParamSpec {
    std::string name;
    ParamRole role;
    std::vector<std::int64_t> shape;
};

/// The parameter set implied by a block's kind and shapes.
std::vector<ParamSpec> block_params(const BlockGraph& graph, const Block& block);

std::vector<Edge> derive_edges(Topology topology, const std::vector<Block>& blocks);

// ---------------------------------------------------------------------------
// Analysis and surgery

std::set<int> prunable_blocks(const BlockGraph& graph);

struct PruneResult {
    BlockGraph graph;
    WeightStore weights;
    /// old id -> new id; -1 for removed blocks.
    std::vector<int> id_map;
};

PruneResult prune_blocks(const BlockGraph& graph, const WeightStore& weights, const std::set<int>& ids);

struct Violation {
    int block_id = -1;
    std::string message;
};

std::vector<Violation> validate_graph(const BlockGraph& graph);
/// Names and shapes of `weights` must match the graph exactly.
std::vector<Violation> validate_weights(const BlockGraph& graph, const WeightStore& weights);

/// Number of units (chain/residual/dense) in the graph.
int unit_count(const BlockGraph& graph);

// ---------------------------------------------------------------------------
// Persistence

nlohmann::json graph_to_json(const BlockGraph& graph);
BlockGraph graph_from_json(const nlohmann::json& j);

void save_graph(const BlockGraph& graph, const std::filesystem::path& path);
BlockGraph load_graph(const std::filesystem::path& path);

/// A checkpoint is a directory holding graph.json and weights.bin.
void save_checkpoint(const std::filesystem::path& dir, const BlockGraph& graph, const WeightStore& weights);
BuiltModel load_checkpoint(const std::filesystem::path& dir);

nlohmann::json arch_to_json(const ArchDesc& arch);
ArchDesc arch_from_json(const nlohmann::json& j);

}  // namespace blockprune
