#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include <json.hpp>

#include "blockprune/probes.hpp"

namespace blockprune {

struct Contribution {
    int block_id = 0;
    /// ACC(block) - ACC(previous block); 0 for the stem.
    double contribution = 0.0;
    /// Same delta in correct-prediction counts, when the report carries counts.
    /// Ranking and the degraded flag use it in preference to the float delta.
    std::optional<std::int64_t> delta_correct;
    bool degraded = false;
    bool prunable = false;

    friend bool operator==(const Contribution&, const Contribution&) = default;
};

/// One row per block id in forward order.
struct ContributionTable {
    std::vector<Contribution> rows;

    int degraded_count() const;
    /// Sum of all contributions.
    double total() const;
    /// Exact sum of delta_correct; nullopt unless every row has one.
    std::optional<std::int64_t> total_correct_delta() const;

    friend bool operator==(const ContributionTable&, const ContributionTable&) = default;
};

nlohmann::json to_json(const ContributionTable& t);
ContributionTable contribution_table_from_json(const nlohmann::json& j);

ContributionTable contributions(const ProbeReport& report, const std::set<int>& prunable);

/// The `count` prunable blocks with the smallest contributions. Equal
/// contributions prefer the deeper block.
std::set<int> select_prune_set(const ContributionTable& table, int count);

double round_ratio(double global_ratio, int rounds);

/// Blocks removed per round: round(beta * remaining), at least one while the
/// target is unmet, final round absorbing the remainder so the total is
/// round(G * n_prunable).
std::vector<int> round_counts(int n_prunable, double global_ratio, int rounds);

struct PruneSchedule {
    double global_ratio = 0.0;
    int rounds = 3;
    double beta = 0.0;
    std::vector<int> counts;
};

PruneSchedule make_schedule(int n_prunable, double global_ratio, int rounds);
nlohmann::json to_json(const PruneSchedule& s);

}  // namespace blockprune
