#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "ospace/core.hpp"
#include "ospace/groundtruth.hpp"
#include "ospace/network.hpp"

namespace ospace {

struct Detection {
    Point2 center;  // cell center
    double score = 0.0;
    CellIndex cell;

    friend bool operator==(const Detection&, const Detection&) = default;
};

struct AssignParams {
    double nms_threshold = 0.5;
    /// Kept detections are at least this far apart.
    double min_group_separation_m = 1.0;
    /// A proposal farther than this from every detection leaves the person alone.
    double max_assign_dist_m = 1.0;
    double stride_m = kDefaultStride;

    void validate() const {
        if (!(nms_threshold >= 0.0 && nms_threshold <= 1.0)) throw std::invalid_argument("nms threshold must be in [0, 1]");
        if (!(min_group_separation_m >= 0.0) || !(max_assign_dist_m >= 0.0) || !(stride_m >= 0.0))
            throw std::invalid_argument("assignment distances must be non-negative");
    }

    friend bool operator==(const AssignParams&, const AssignParams&) = default;
};

/// Thresholded 8-neighbourhood local maxima (ties count as maxima), then
/// greedy suppression in descending score order, ties in row-major order.
inline std::vector<Detection> nms(const OSpaceMap& map, const AssignParams& params) {
    params.validate();
    const RoomSpec& s = map.spec();
    std::vector<Detection> candidates;
    for (int r = 0; r < s.rows; ++r)
        for (int c = 0; c < s.cols; ++c) {
            const double v = map.at(r, c);
            if (!(v >= params.nms_threshold)) continue;
            bool peak = true;
            for (int dr = -1; dr <= 1 && peak; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    const int rr = r + dr, cc = c + dc;
                    if (rr < 0 || rr >= s.rows || cc < 0 || cc >= s.cols) continue;
                    if (map.at(rr, cc) > v) {
                        peak = false;
                        break;
                    }
                }
            if (peak) candidates.push_back({cell_center(r, c, s), v, {r, c}});
        }
    // stable sort keeps row-major order among equal scores
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    std::vector<Detection> kept;
    for (const auto& d : candidates) {
        const bool clear = std::all_of(kept.begin(), kept.end(), [&](const Detection& k) {
            return distance(k.center, d.center) >= params.min_group_separation_m;
        });
        if (clear) kept.push_back(d);
    }
    return kept;
}

/// Each person joins the detection nearest their proposed o-space (lowest
/// index on ties) if within max_assign_dist_m. Detections claimed by fewer
/// than two persons dissolve into singletons. Returns a canonical partition.
inline Partition assign_groups(std::span<const Person> persons, std::span<const Detection> detections,
                               const AssignParams& params) {
    params.validate();
    std::map<std::size_t, Group> by_detection;
    Partition out;
    for (std::size_t i = 0; i < persons.size(); ++i) {
        const Point2 proposal = propose_center(persons[i], params.stride_m);
        std::size_t best = detections.size();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < detections.size(); ++k) {
            const double d = distance(proposal, detections[k].center);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        if (best < detections.size() && best_d <= params.max_assign_dist_m)
            by_detection[best].push_back(i);
        else
            out.push_back({i});
    }
    for (auto& [k, g] : by_detection) {
        if (g.size() >= 2)
            out.push_back(std::move(g));
        else
            for (std::size_t i : g) out.push_back({i});
    }
    return canonical_partition(std::move(out));
}

struct ScenePrediction {
    OSpaceMap map;
    std::vector<Detection> detections;
    Partition groups;
};

/// NMS and assignment on a given map (predicted, or ground truth for oracle checks).
inline ScenePrediction groups_from_map(const Scene& s, OSpaceMap map, const AssignParams& params) {
    ScenePrediction p;
    p.detections = nms(map, params);
    p.groups = assign_groups(s.persons, p.detections, params);
    p.map = std::move(map);
    return p;
}

inline ScenePrediction predict_scene(const Scene& s, const ModelWeights& m, const RoomFeature& room,
                                     const AssignParams& params) {
    validate_scene(s, m.config.room, m.config.encoder.max_people);
    return groups_from_map(s, predict_map(s, room, m), params);
}

}  // namespace ospace
