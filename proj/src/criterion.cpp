#include "blockprune/criterion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace blockprune {

int ContributionTable::degraded_count() const {
    return static_cast<int>(std::count_if(rows.begin(), rows.end(), [](const Contribution& c) { return c.degraded; }));
}

double ContributionTable::total() const {
    double s = 0.0;
    for (const auto& r : rows) s += r.contribution;
    return s;
}

std::optional<std::int64_t> ContributionTable::total_correct_delta() const {
    std::int64_t s = 0;
    for (const auto& r : rows) {
        if (!r.delta_correct) return std::nullopt;
        s += *r.delta_correct;
    }
    return s;
}

nlohmann::json to_json(const ContributionTable& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) {
        nlohmann::json row = {{"block_id", r.block_id},
                              {"contribution", r.contribution},
                              {"degraded", r.degraded},
                              {"prunable", r.prunable}};
        if (r.delta_correct) row["delta_correct"] = *r.delta_correct;
        rows.push_back(std::move(row));
    }
    return rows;
}

ContributionTable contribution_table_from_json(const nlohmann::json& j) {
    ContributionTable t;
    for (const auto& r : j) {
        Contribution c;
        c.block_id = r.at("block_id").get<int>();
        c.contribution = r.at("contribution").get<double>();
        if (r.contains("delta_correct")) c.delta_correct = r.at("delta_correct").get<std::int64_t>();
        c.degraded = r.at("degraded").get<bool>();
        c.prunable = r.at("prunable").get<bool>();
        t.rows.push_back(c);
    }
    return t;
}

ContributionTable contributions(const ProbeReport& report, const std::set<int>& prunable) {
    if (report.accuracies.empty()) throw std::invalid_argument("contributions: empty probe report");
    const int n = static_cast<int>(report.accuracies.size());
    for (int id = 0; id < n; ++id)
        if (!report.accuracies.contains(id))
            throw std::invalid_argument("contributions: probe report is missing block " + std::to_string(id));
    for (int id : prunable)
        if (!report.accuracies.contains(id))
            throw std::invalid_argument("contributions: probe report is missing block " + std::to_string(id));
    bool counts = true;
    for (int id = 0; id < n; ++id) counts = counts && report.correct.contains(id);
    ContributionTable t;
    for (int id = 0; id < n; ++id) {
        Contribution c;
        c.block_id = id;
        c.contribution = id == 0 ? 0.0 : report.accuracies.at(id) - report.accuracies.at(id - 1);
        if (counts) c.delta_correct = id == 0 ? 0 : report.correct.at(id) - report.correct.at(id - 1);
        c.degraded = c.delta_correct ? *c.delta_correct < 0 : c.contribution < 0.0;
        c.prunable = prunable.contains(id);
        t.rows.push_back(c);
    }
    return t;
}

std::set<int> select_prune_set(const ContributionTable& table, int count) {
    std::vector<const Contribution*> cand;
    for (const auto& r : table.rows)
        if (r.prunable) cand.push_back(&r);
    if (count < 0) throw std::invalid_argument("select_prune_set: negative count");
    if (count > static_cast<int>(cand.size()))
        throw std::invalid_argument("select_prune_set: count " + std::to_string(count) + " exceeds " +
                                    std::to_string(cand.size()) + " prunable blocks");
    const bool exact = std::all_of(cand.begin(), cand.end(), [](const Contribution* c) { return c->delta_correct.has_value(); });
    std::sort(cand.begin(), cand.end(), [exact](const Contribution* a, const Contribution* b) {
        if (exact) {
            if (*a->delta_correct != *b->delta_correct) return *a->delta_correct < *b->delta_correct;
        } else if (a->contribution != b->contribution) {
            return a->contribution < b->contribution;
        }
        return a->block_id > b->block_id;
    });
    std::set<int> out;
    for (int i = 0; i < count; ++i) out.insert(cand[static_cast<std::size_t>(i)]->block_id);
    return out;
}

double round_ratio(double global_ratio, int rounds) {
    if (!(global_ratio >= 0.0 && global_ratio < 1.0))
        throw std::invalid_argument("global prune ratio G must lie in [0, 1)");
    if (rounds < 1) throw std::invalid_argument("rounds must be at least 1");
    return -std::expm1(std::log1p(-global_ratio) / rounds);
}

std::vector<int> round_counts(int n_prunable, double global_ratio, int rounds) {
    const double beta = round_ratio(global_ratio, rounds);
    if (n_prunable < 0) throw std::invalid_argument("n_prunable must be non-negative");
    const int target = static_cast<int>(std::lround(global_ratio * n_prunable));
    if (target > n_prunable) throw std::invalid_argument("infeasible prune target");
    std::vector<int> counts;
    int removed = 0;
    int remaining = n_prunable;
    for (int r = 0; r < rounds; ++r) {
        int c;
        if (r + 1 == rounds) {
            c = target - removed;
        } else {
            c = static_cast<int>(std::lround(beta * remaining));
            if (c < 1 && removed < target) c = 1;
            c = std::min(c, target - removed);
        }
        counts.push_back(c);
        removed += c;
        remaining -= c;
    }
    return counts;
}

PruneSchedule make_schedule(int n_prunable, double global_ratio, int rounds) {
    return {global_ratio, rounds, round_ratio(global_ratio, rounds), round_counts(n_prunable, global_ratio, rounds)};
}

nlohmann::json to_json(const PruneSchedule& s) {
    return {{"G", s.global_ratio}, {"R", s.rounds}, {"beta", s.beta}, {"round_counts", s.counts}};
}

}  // namespace blockprune
