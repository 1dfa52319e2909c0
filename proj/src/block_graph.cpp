#include "blockprune/block_graph.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "blockprune/backbones.hpp"

namespace blockprune {

using nlohmann::json;

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::pair<E, std::string_view> (&table)[N], const char* what) {
    for (const auto& [e, name] : table)
        if (name == s) return e;
    throw std::invalid_argument(std::string("unknown ") + what + ": " + std::string(s));
}

template <typename E, std::size_t N>
std::string_view enum_name(E e, const std::pair<E, std::string_view> (&table)[N]) {
    for (const auto& [v, name] : table)
        if (v == e) return name;
    return "?";
}

constexpr std::pair<BlockKind, std::string_view> kKinds[] = {
    {BlockKind::conv_bn_relu_chain_unit, "conv_bn_relu_chain_unit"},
    {BlockKind::residual_unit, "residual_unit"},
    {BlockKind::dense_unit, "dense_unit"},
    {BlockKind::stem, "stem"},
    {BlockKind::transition, "transition"},
    {BlockKind::classifier_head, "classifier_head"},
};
constexpr std::pair<Topology, std::string_view> kTopologies[] = {
    {Topology::sequential, "sequential"},
    {Topology::residual, "residual"},
    {Topology::dense, "dense"},
};
constexpr std::pair<EdgeKind, std::string_view> kEdges[] = {
    {EdgeKind::sequential, "sequential"},
    {EdgeKind::identity_skip, "identity_skip"},
    {EdgeKind::concat, "concat"},
};
constexpr std::pair<Family, std::string_view> kFamilies[] = {
    {Family::plain_chain, "plain_chain"},
    {Family::residual, "residual"},
    {Family::dense, "dense"},
};

void add_bn(std::vector<ParamSpec>& out, const std::string& prefix, int channels) {
    const std::vector<std::int64_t> s{channels};
    out.push_back({prefix + ".weight", ParamRole::bn_weight, s});
    out.push_back({prefix + ".bias", ParamRole::bn_bias, s});
    out.push_back({prefix + ".running_mean", ParamRole::bn_running_mean, s});
    out.push_back({prefix + ".running_var", ParamRole::bn_running_var, s});
}

void add_conv(std::vector<ParamSpec>& out, const std::string& name, int cout, int cin, int k) {
    out.push_back({name, ParamRole::conv_weight, {cout, cin, k, k}});
}

Block make_block(BlockKind kind, std::string scope, int stage, Shape3 in, Shape3 out, int produces = 0) {
    Block b;
    b.kind = kind;
    b.scope = std::move(scope);
    b.stage = stage;
    b.in_shape = in;
    b.out_shape = out;
    b.produces_channels = produces;
    return b;
}

void finalize(BlockGraph& g) {
    for (std::size_t i = 0; i < g.blocks.size(); ++i) {
        Block& b = g.blocks[i];
        b.id = static_cast<int>(i);
        b.param_names.clear();
        for (const auto& p : block_params(g, b)) b.param_names.push_back(p.name);
    }
    g.edges = derive_edges(g.topology, g.blocks);
}

void require_divisible(const Shape3& s, int factor, const char* family) {
    if (s.h % factor != 0 || s.w % factor != 0 || s.h / factor < 1)
        throw std::invalid_argument(std::string(family) + ": input resolution " + to_string(s) +
                                    " not divisible by " + std::to_string(factor));
}

/// Removes indices [begin, begin+count) along `axis`.
Tensor drop_range(const Tensor& t, std::size_t axis, std::int64_t begin, std::int64_t count) {
    const auto& shape = t.shape();
    std::int64_t outer = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
    std::int64_t inner = 1;
    for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
    const std::int64_t extent = shape[axis];
    auto new_shape = shape;
    new_shape[axis] = extent - count;
    std::vector<float> v;
    v.reserve(static_cast<std::size_t>(shape_numel(new_shape)));
    for (std::int64_t o = 0; o < outer; ++o) {
        const float* base = t.data() + o * extent * inner;
        v.insert(v.end(), base, base + begin * inner);
        v.insert(v.end(), base + (begin + count) * inner, base + extent * inner);
    }
    return Tensor(std::move(new_shape), std::move(v));
}

json shape_json(const Shape3& s) { return json::array({s.c, s.h, s.w}); }

Shape3 shape_from_json(const json& j) {
    return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()};
}

}  // namespace

std::string_view to_string(BlockKind k) { return enum_name(k, kKinds); }
std::string_view to_string(Topology t) { return enum_name(t, kTopologies); }
std::string_view to_string(EdgeKind e) { return enum_name(e, kEdges); }
std::string_view to_string(Family f) { return enum_name(f, kFamilies); }
BlockKind parse_block_kind(std::string_view s) { return parse_enum(s, kKinds, "block kind"); }
Topology parse_topology(std::string_view s) { return parse_enum(s, kTopologies, "topology"); }
EdgeKind parse_edge_kind(std::string_view s) { return parse_enum(s, kEdges, "edge kind"); }
Family parse_family(std::string_view s) { return parse_enum(s, kFamilies, "architecture family"); }

bool is_unit(BlockKind k) {
    return k == BlockKind::conv_bn_relu_chain_unit || k == BlockKind::residual_unit ||
           k == BlockKind::dense_unit;
}

BlockGraph make_graph(const ArchDesc& arch) {
    const DatasetMeta& meta = arch.meta;
    if (meta.num_classes < 2) throw std::invalid_argument("num_classes must be at least 2");
    if (meta.input_shape.c < 1 || meta.input_shape.h < 1 || meta.input_shape.w < 1)
        throw std::invalid_argument("input shape must be positive");
    BlockGraph g;
    g.meta = meta;
    const Shape3 input = meta.input_shape;

    switch (arch.family) {
    case Family::residual: {
        if (arch.depth < 8 || (arch.depth - 2) % 6 != 0 || (arch.depth - 2) / 6 > 18)
            throw std::invalid_argument("depth not realizable: residual depth " +
                                        std::to_string(arch.depth) + " is not 6n+2 with n in [1,18]");
        if (arch.base_width < 1) throw std::invalid_argument("base_width must be positive");
        require_divisible(input, 4, "residual");
        const int n = (arch.depth - 2) / 6;
        g.topology = Topology::residual;
        Shape3 cur{arch.base_width, input.h, input.w};
        g.blocks.push_back(make_block(BlockKind::stem, "stem", 0, input, cur));
        for (int s = 0; s < 3; ++s) {
            for (int u = 0; u < n; ++u) {
                Shape3 out = cur;
                if (s > 0 && u == 0) out = {cur.c * 2, cur.h / 2, cur.w / 2};
                g.blocks.push_back(make_block(BlockKind::residual_unit,
                                              "stage" + std::to_string(s) + ".unit" + std::to_string(u),
                                              s, cur, out));
                cur = out;
            }
        }
        g.blocks.push_back(make_block(BlockKind::classifier_head, "head", 2, cur, {meta.num_classes, 1, 1}));
        break;
    }
    case Family::plain_chain: {
        if (arch.units_per_stage.empty()) throw std::invalid_argument("plain_chain needs at least one stage");
        if (arch.base_width < 1) throw std::invalid_argument("base_width must be positive");
        const int stages = static_cast<int>(arch.units_per_stage.size());
        require_divisible(input, 1 << (stages - 1), "plain_chain");
        g.topology = Topology::sequential;
        Shape3 cur{arch.base_width, input.h, input.w};
        g.blocks.push_back(make_block(BlockKind::stem, "stem", 0, input, cur));
        for (int s = 0; s < stages; ++s) {
            const int units = arch.units_per_stage[static_cast<std::size_t>(s)];
            if (units < 0) throw std::invalid_argument("negative unit count");
            if (s > 0 && units < 1)
                throw std::invalid_argument("plain_chain stages after the first need a downsampling unit");
            for (int u = 0; u < units; ++u) {
                Shape3 out = cur;
                if (s > 0 && u == 0) out = {cur.c * 2, cur.h / 2, cur.w / 2};
                g.blocks.push_back(make_block(BlockKind::conv_bn_relu_chain_unit,
                                              "stage" + std::to_string(s) + ".unit" + std::to_string(u),
                                              s, cur, out));
                cur = out;
            }
        }
        g.blocks.push_back(
            make_block(BlockKind::classifier_head, "head", stages - 1, cur, {meta.num_classes, 1, 1}));
        break;
    }
    case Family::dense: {
        if (arch.units_per_stage.empty()) throw std::invalid_argument("dense needs at least one stage");
        if (arch.growth < 1 || arch.stem_channels < 1)
            throw std::invalid_argument("dense growth and stem channels must be positive");
        const int stages = static_cast<int>(arch.units_per_stage.size());
        require_divisible(input, 1 << (stages - 1), "dense");
        g.topology = Topology::dense;
        Shape3 cur{arch.stem_channels, input.h, input.w};
        g.blocks.push_back(make_block(BlockKind::stem, "stem", 0, input, cur));
        for (int s = 0; s < stages; ++s) {
            const int units = arch.units_per_stage[static_cast<std::size_t>(s)];
            if (units < 0) throw std::invalid_argument("negative unit count");
            for (int u = 0; u < units; ++u) {
                Shape3 out{cur.c + arch.growth, cur.h, cur.w};
                g.blocks.push_back(make_block(BlockKind::dense_unit,
                                              "stage" + std::to_string(s) + ".unit" + std::to_string(u),
                                              s, cur, out, arch.growth));
                cur = out;
            }
            if (s + 1 < stages) {
                Shape3 out{cur.c, cur.h / 2, cur.w / 2};
                g.blocks.push_back(
                    make_block(BlockKind::transition, "transition" + std::to_string(s), s, cur, out));
                cur = out;
            }
        }
        g.blocks.push_back(
            make_block(BlockKind::classifier_head, "head", stages - 1, cur, {meta.num_classes, 1, 1}));
        break;
    }
    }
    finalize(g);
    return g;
}

BuiltModel build_graph(const ArchDesc& arch, std::uint64_t seed) {
    BlockGraph g = make_graph(arch);
    WeightStore w = init_weights(g, seed);
    return {std::move(g), std::move(w)};
}

BuiltModel build_graph(const ArchDesc& arch, const std::filesystem::path& weights_file) {
    BlockGraph g = make_graph(arch);
    WeightStore w = load_weights(weights_file);
    auto v = validate_weights(g, w);
    if (!v.empty()) throw std::runtime_error("checkpoint does not match architecture: " + v.front().message);
    return {std::move(g), std::move(w)};
}

std::vector<ParamSpec> block_params(const BlockGraph& graph, const Block& b) {
    std::vector<ParamSpec> out;
    const std::string& p = b.scope;
    switch (b.kind) {
    case BlockKind::stem:
        add_conv(out, p + ".conv.weight", b.out_shape.c, b.in_shape.c, 3);
        if (graph.topology != Topology::dense) add_bn(out, p + ".bn", b.out_shape.c);
        break;
    case BlockKind::conv_bn_relu_chain_unit:
        add_conv(out, p + ".conv.weight", b.out_shape.c, b.in_shape.c, 3);
        add_bn(out, p + ".bn", b.out_shape.c);
        break;
    case BlockKind::residual_unit:
        add_conv(out, p + ".conv1.weight", b.out_shape.c, b.in_shape.c, 3);
        add_bn(out, p + ".bn1", b.out_shape.c);
        add_conv(out, p + ".conv2.weight", b.out_shape.c, b.out_shape.c, 3);
        add_bn(out, p + ".bn2", b.out_shape.c);
        if (b.in_shape != b.out_shape) {
            add_conv(out, p + ".shortcut.conv.weight", b.out_shape.c, b.in_shape.c, 1);
            add_bn(out, p + ".shortcut.bn", b.out_shape.c);
        }
        break;
    case BlockKind::dense_unit:
        add_bn(out, p + ".bn", b.in_shape.c);
        add_conv(out, p + ".conv.weight", b.produces_channels, b.in_shape.c, 3);
        break;
    case BlockKind::transition:
        add_bn(out, p + ".bn", b.in_shape.c);
        add_conv(out, p + ".conv.weight", b.out_shape.c, b.in_shape.c, 1);
        break;
    case BlockKind::classifier_head:
        if (graph.topology == Topology::dense) add_bn(out, p + ".bn", b.in_shape.c);
        out.push_back({p + ".fc.weight", ParamRole::fc_weight, {graph.meta.num_classes, b.in_shape.c}});
        out.push_back({p + ".fc.bias", ParamRole::fc_bias, {graph.meta.num_classes}});
        break;
    }
    return out;
}

std::vector<Edge> derive_edges(Topology topology, const std::vector<Block>& blocks) {
    std::vector<Edge> edges;
    const int n = static_cast<int>(blocks.size());
    if (topology != Topology::dense) {
        for (int i = 1; i < n; ++i) {
            edges.push_back({i - 1, i, EdgeKind::sequential});
            if (blocks[static_cast<std::size_t>(i)].kind == BlockKind::residual_unit)
                edges.push_back({i - 1, i, EdgeKind::identity_skip});
        }
        return edges;
    }
    // Dense: every block inside a stage reads the concatenation of the stage
    // entry (stem or transition) and all earlier units of the stage.
    std::vector<int> sources;
    for (int i = 0; i < n; ++i) {
        const Block& b = blocks[static_cast<std::size_t>(i)];
        if (b.kind == BlockKind::stem) {
            sources = {i};
            continue;
        }
        for (int s : sources) edges.push_back({s, i, EdgeKind::concat});
        if (b.kind == BlockKind::dense_unit)
            sources.push_back(i);
        else
            sources = {i};
    }
    return edges;
}

std::set<int> prunable_blocks(const BlockGraph& graph) {
    std::set<int> ids;
    for (const Block& b : graph.blocks) {
        if (b.kind == BlockKind::dense_unit) {
            ids.insert(b.id);
        } else if ((b.kind == BlockKind::residual_unit || b.kind == BlockKind::conv_bn_relu_chain_unit) &&
                   b.in_shape == b.out_shape) {
            ids.insert(b.id);
        }
    }
    return ids;
}

PruneResult prune_blocks(const BlockGraph& graph, const WeightStore& weights, const std::set<int>& ids) {
    const std::set<int> legal = prunable_blocks(graph);
    for (int id : ids) {
        if (id < 0 || id >= graph.size())
            throw std::out_of_range("block id " + std::to_string(id) + " out of range");
        if (!legal.contains(id))
            throw std::invalid_argument("block " + std::to_string(id) + " (" +
                                        std::string(to_string(graph.block(id).kind)) + ") is not prunable");
    }

    PruneResult r{graph, weights, {}};
    std::vector<Block>& blocks = r.graph.blocks;
    // Descending order keeps the channel offsets of earlier dense units valid.
    for (auto it = ids.rbegin(); it != ids.rend(); ++it) {
        const auto pos = static_cast<std::size_t>(*it);
        const Block removed = blocks[pos];
        if (removed.kind == BlockKind::dense_unit) {
            const int offset = removed.in_shape.c;
            const int width = removed.produces_channels;
            for (std::size_t k = pos + 1; k < blocks.size(); ++k) {
                Block& consumer = blocks[k];
                for (const ParamSpec& spec : block_params(r.graph, consumer)) {
                    const bool sliced_bn = spec.role == ParamRole::bn_weight || spec.role == ParamRole::bn_bias ||
                                           spec.role == ParamRole::bn_running_mean ||
                                           spec.role == ParamRole::bn_running_var;
                    const bool sliced_in = spec.role == ParamRole::conv_weight || spec.role == ParamRole::fc_weight;
                    if (!sliced_bn && !sliced_in) continue;
                    Tensor& t = r.weights.at(spec.name);
                    t = drop_range(t, sliced_bn ? 0 : 1, offset, width);
                }
                consumer.in_shape.c -= width;
                if (consumer.kind != BlockKind::dense_unit) break;
                consumer.out_shape.c -= width;
            }
        }
        for (const auto& name : removed.param_names) r.weights.erase(name);
        blocks.erase(blocks.begin() + static_cast<std::ptrdiff_t>(pos));
    }

    r.id_map.assign(static_cast<std::size_t>(graph.size()), -1);
    int next = 0;
    for (int old = 0; old < graph.size(); ++old)
        if (!ids.contains(old)) r.id_map[static_cast<std::size_t>(old)] = next++;
    finalize(r.graph);
    return r;
}

std::vector<Violation> validate_graph(const BlockGraph& g) {
    std::vector<Violation> v;
    auto add = [&](int id, std::string msg) { v.push_back({id, std::move(msg)}); };
    const int n = g.size();
    if (n < 2) {
        add(-1, "graph needs at least a stem and a classifier head");
        return v;
    }
    int stems = 0;
    int heads = 0;
    std::map<std::string, int> owner;
    for (int i = 0; i < n; ++i) {
        const Block& b = g.blocks[static_cast<std::size_t>(i)];
        if (b.id != i) add(b.id, "block ids must be consecutive (position " + std::to_string(i) + ")");
        if (b.kind == BlockKind::stem) ++stems;
        if (b.kind == BlockKind::classifier_head) ++heads;
        for (const auto& name : b.param_names) {
            auto [it, inserted] = owner.emplace(name, b.id);
            if (!inserted)
                add(b.id, "param owned twice: " + name + " (also block " + std::to_string(it->second) + ")");
        }
        std::vector<std::string> expected;
        for (const auto& p : block_params(g, b)) expected.push_back(p.name);
        if (expected != b.param_names) add(b.id, "param_names do not match the block's layer layout");
        if (b.kind == BlockKind::dense_unit && g.topology != Topology::dense)
            add(b.id, "dense_unit outside a dense topology");
        if (b.kind == BlockKind::residual_unit && g.topology != Topology::residual)
            add(b.id, "residual_unit outside a residual topology");
    }
    if (stems != 1) add(-1, "expected exactly one stem, found " + std::to_string(stems));
    if (heads != 1) add(-1, "expected exactly one classifier_head, found " + std::to_string(heads));
    if (g.blocks.front().kind != BlockKind::stem) add(0, "first block must be the stem");
    if (g.blocks.back().kind != BlockKind::classifier_head) add(n - 1, "last block must be the classifier head");
    if (g.blocks.front().in_shape != g.meta.input_shape) add(0, "stem input does not match dataset input shape");
    if (g.blocks.back().out_shape != Shape3{g.meta.num_classes, 1, 1})
        add(n - 1, "head output does not match num_classes");

    if (g.topology == Topology::dense) {
        int running = 0;
        for (const Block& b : g.blocks) {
            switch (b.kind) {
            case BlockKind::stem:
                running = b.out_shape.c;
                break;
            case BlockKind::dense_unit:
                if (b.in_shape.c != running)
                    add(b.id, "input channels " + std::to_string(b.in_shape.c) +
                                  " disagree with surviving producers (expected " + std::to_string(running) + ")");
                if (b.out_shape.c != b.in_shape.c + b.produces_channels || b.produces_channels <= 0)
                    add(b.id, "dense unit output must be input plus produces_channels");
                running = b.out_shape.c;
                break;
            case BlockKind::transition:
            case BlockKind::classifier_head:
                if (b.in_shape.c != running)
                    add(b.id, "input channels " + std::to_string(b.in_shape.c) +
                                  " disagree with surviving producers (expected " + std::to_string(running) + ")");
                running = b.out_shape.c;
                break;
            default:
                add(b.id, "unexpected block kind in dense topology");
            }
        }
    } else {
        for (int i = 1; i < n; ++i) {
            const Block& prev = g.blocks[static_cast<std::size_t>(i - 1)];
            const Block& b = g.blocks[static_cast<std::size_t>(i)];
            if (b.in_shape != prev.out_shape)
                add(b.id, "input shape " + to_string(b.in_shape) + " does not match predecessor output " +
                              to_string(prev.out_shape));
            if (is_unit(b.kind) && b.in_shape != b.out_shape &&
                !(b.out_shape.h * 2 == b.in_shape.h && b.out_shape.w * 2 == b.in_shape.w))
                add(b.id, "unit may only keep resolution or halve it");
            if (b.produces_channels != 0) add(b.id, "produces_channels must be 0 outside dense topology");
        }
    }

    for (const Edge& e : g.edges)
        if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n || e.src >= e.dst)
            add(e.dst, "edge endpoints must be existing blocks in forward order");
    if (g.topology == Topology::residual) {
        for (const Block& b : g.blocks) {
            if (b.kind != BlockKind::residual_unit) continue;
            bool seq = false;
            bool skip = false;
            for (const Edge& e : g.edges) {
                if (e.dst != b.id) continue;
                seq |= e.kind == EdgeKind::sequential;
                skip |= e.kind == EdgeKind::identity_skip;
            }
            if (!seq || !skip) add(b.id, "residual unit needs both a sequential and an identity_skip edge");
        }
    }
    if (g.edges != derive_edges(g.topology, g.blocks)) add(-1, "edge list inconsistent with block topology");
    return v;
}

std::vector<Violation> validate_weights(const BlockGraph& graph, const WeightStore& weights) {
    std::vector<Violation> v;
    std::size_t expected = 0;
    for (const Block& b : graph.blocks) {
        for (const ParamSpec& p : block_params(graph, b)) {
            ++expected;
            if (!weights.contains(p.name)) {
                v.push_back({b.id, "missing weight " + p.name});
                continue;
            }
            if (weights.at(p.name).shape() != p.shape)
                v.push_back({b.id, "shape of " + p.name + " is " + shape_string(weights.at(p.name).shape()) +
                                       ", expected " + shape_string(p.shape)});
        }
    }
    if (weights.size() != expected)
        v.push_back({-1, "weight store holds " + std::to_string(weights.size()) + " tensors, graph declares " +
                             std::to_string(expected)});
    return v;
}

int unit_count(const BlockGraph& graph) {
    return static_cast<int>(
        std::count_if(graph.blocks.begin(), graph.blocks.end(), [](const Block& b) { return is_unit(b.kind); }));
}

json graph_to_json(const BlockGraph& g) {
    json blocks = json::array();
    for (const Block& b : g.blocks) {
        blocks.push_back({{"id", b.id},
                          {"kind", to_string(b.kind)},
                          {"scope", b.scope},
                          {"stage", b.stage},
                          {"in_shape", shape_json(b.in_shape)},
                          {"out_shape", shape_json(b.out_shape)},
                          {"param_names", b.param_names},
                          {"produces_channels", b.produces_channels}});
    }
    json edges = json::array();
    for (const Edge& e : g.edges) edges.push_back({{"src", e.src}, {"dst", e.dst}, {"kind", to_string(e.kind)}});
    return {{"format", "blockprune.graph/1"},
            {"topology", to_string(g.topology)},
            {"dataset_meta", {{"num_classes", g.meta.num_classes}, {"input_shape", shape_json(g.meta.input_shape)}}},
            {"blocks", blocks},
            {"edges", edges}};
}

BlockGraph graph_from_json(const json& j) {
    BlockGraph g;
    g.topology = parse_topology(j.at("topology").get<std::string>());
    g.meta.num_classes = j.at("dataset_meta").at("num_classes").get<int>();
    g.meta.input_shape = shape_from_json(j.at("dataset_meta").at("input_shape"));
    for (const auto& jb : j.at("blocks")) {
        Block b;
        b.id = jb.at("id").get<int>();
        b.kind = parse_block_kind(jb.at("kind").get<std::string>());
        b.scope = jb.at("scope").get<std::string>();
        b.stage = jb.at("stage").get<int>();
        b.in_shape = shape_from_json(jb.at("in_shape"));
        b.out_shape = shape_from_json(jb.at("out_shape"));
        b.param_names = jb.at("param_names").get<std::vector<std::string>>();
        b.produces_channels = jb.at("produces_channels").get<int>();
        g.blocks.push_back(std::move(b));
    }
    for (const auto& je : j.at("edges"))
        g.edges.push_back({je.at("src").get<int>(), je.at("dst").get<int>(),
                           parse_edge_kind(je.at("kind").get<std::string>())});
    return g;
}

void save_graph(const BlockGraph& graph, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f << graph_to_json(graph).dump(2) << "\n";
}

BlockGraph load_graph(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open graph: " + path.string());
    try {
        return graph_from_json(json::parse(f));
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed graph descriptor " + path.string() + ": " + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& dir, const BlockGraph& graph, const WeightStore& weights) {
    std::filesystem::create_directories(dir);
    save_graph(graph, dir / "graph.json");
    save_weights(weights, dir / "weights.bin");
}

BuiltModel load_checkpoint(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw std::runtime_error("checkpoint not found: " + dir.string());
    BuiltModel m{load_graph(dir / "graph.json"), load_weights(dir / "weights.bin")};
    auto v = validate_graph(m.graph);
    if (!v.empty()) throw std::runtime_error("invalid graph in checkpoint: " + v.front().message);
    v = validate_weights(m.graph, m.weights);
    if (!v.empty()) throw std::runtime_error("checkpoint/graph mismatch: " + v.front().message);
    return m;
}

json arch_to_json(const ArchDesc& a) {
    return {{"family", to_string(a.family)},
            {"depth", a.depth},
            {"units_per_stage", a.units_per_stage},
            {"base_width", a.base_width},
            {"growth", a.growth},
            {"stem_channels", a.stem_channels},
            {"num_classes", a.meta.num_classes},
            {"input_shape", shape_json(a.meta.input_shape)}};
}

ArchDesc arch_from_json(const json& j) {
    ArchDesc a;
    a.family = parse_family(j.value("family", std::string(to_string(a.family))));
    a.depth = j.value("depth", a.depth);
    a.units_per_stage = j.value("units_per_stage", a.units_per_stage);
    a.base_width = j.value("base_width", a.base_width);
    a.growth = j.value("growth", a.growth);
    a.stem_channels = j.value("stem_channels", a.stem_channels);
    a.meta.num_classes = j.value("num_classes", a.meta.num_classes);
    if (j.contains("input_shape")) a.meta.input_shape = shape_from_json(j.at("input_shape"));
    return a;
}

}  // namespace blockprune
