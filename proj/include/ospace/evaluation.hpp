/**
 * @file evaluation.hpp
 * @brief Tolerance-based group matching with precision / recall / F1.
 *
 * A predicted group P matches a labelled group G at tolerance T when
 *
 *     |P ∩ G| >= ceil(T |G|)   and   |P \ G| <= ceil((1 - T) |G|).
 *
 * Only blocks with two or more members are scored.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "ospace/core.hpp"

namespace ospace {

inline constexpr double kToleranceLoose = 2.0 / 3.0;
inline constexpr double kToleranceExact = 1.0;

namespace detail {

// T * |G| lands a few ulps off integers (2/3 * 3, (1 - 2/3) * 3); snap before ceil.
inline std::size_t ceil_snapped(double x) { return static_cast<std::size_t>(std::ceil(x - 1e-9)); }

}  // namespace detail

inline std::size_t required_correct(std::size_t gt_size, double T) {
    return detail::ceil_snapped(T * static_cast<double>(gt_size));
}

inline std::size_t max_false(std::size_t gt_size, double T) {
    return detail::ceil_snapped((1.0 - T) * static_cast<double>(gt_size));
}

inline void check_tolerance(double T) {
    if (!(T > 0.0 && T <= 1.0)) throw std::invalid_argument("tolerance must lie in (0, 1]");
}

inline bool group_matches(std::span<const std::size_t> pred, std::span<const std::size_t> gt, double T) {
    check_tolerance(T);
    std::size_t correct = 0;
    for (std::size_t p : pred)
        if (std::find(gt.begin(), gt.end(), p) != gt.end()) ++correct;
    const std::size_t wrong = pred.size() - correct;
    return correct >= required_correct(gt.size(), T) && wrong <= max_false(gt.size(), T);
}

struct MatchCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    MatchCounts& operator+=(const MatchCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

/// Greedy one-to-one matching: labelled groups in descending size (ties by
/// smallest member) each claim the first unclaimed predicted group they
/// match, predicted groups taken in canonical order.
inline MatchCounts match_scene(const Partition& pred, const Partition& gt, double T) {
    check_tolerance(T);
    std::size_t n = 0;
    for (const auto& g : gt) n += g.size();
    validate_partition(gt, n);
    validate_partition(pred, n);

    const Partition p = canonical_partition(conversational_groups(pred));
    Partition g = canonical_partition(conversational_groups(gt));
    std::stable_sort(g.begin(), g.end(), [](const Group& a, const Group& b) { return a.size() > b.size(); });

    std::vector<char> claimed(p.size(), 0);
    MatchCounts c;
    for (const auto& gg : g) {
        bool hit = false;
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (claimed[k] || !group_matches(p[k], gg, T)) continue;
            claimed[k] = 1;
            hit = true;
            break;
        }
        if (hit)
            ++c.tp;
        else
            ++c.fn;
    }
    c.fp = p.size() - c.tp;
    return c;
}

struct GroupMetrics {
    MatchCounts counts;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double tolerance = 1.0;
};

/// P/R/F1 from summed counts; zero denominators give zero.
inline GroupMetrics metrics_from_counts(const MatchCounts& c, double T) {
    GroupMetrics m;
    m.counts = c;
    m.tolerance = T;
    const double tp = static_cast<double>(c.tp);
    m.precision = c.tp + c.fp == 0 ? 0.0 : tp / static_cast<double>(c.tp + c.fp);
    m.recall = c.tp + c.fn == 0 ? 0.0 : tp / static_cast<double>(c.tp + c.fn);
    m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

/// Micro-average over scenes.
inline GroupMetrics aggregate(std::span<const MatchCounts> per_scene, double T) {
    MatchCounts total;
    for (const auto& c : per_scene) total += c;
    return metrics_from_counts(total, T);
}

inline GroupMetrics evaluate_partitions(std::span<const Partition> pred, std::span<const Partition> gt, double T) {
    if (pred.size() != gt.size()) throw std::invalid_argument("prediction and ground-truth scene counts differ");
    std::vector<MatchCounts> counts;
    counts.reserve(gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i) counts.push_back(match_scene(pred[i], gt[i], T));
    return aggregate(counts, T);
}

}  // namespace ospace
