#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "ospace/core.hpp"

namespace ospace {

inline constexpr double kDefaultStride = 0.7;

struct GaussianParams {
    double sigma_m = 0.5;

    void validate() const {
        if (!(sigma_m > 0.0) || !std::isfinite(sigma_m)) throw std::invalid_argument("sigma must be positive");
    }

    friend bool operator==(const GaussianParams&, const GaussianParams&) = default;
};

struct OSpaceCenter {
    Point2 center;
    Group group;
};

/// Point `stride_m` in front of the person along their heading.
inline Point2 propose_center(const Person& p, double stride_m) {
    const double a = deg_to_rad(p.yaw_deg);
    return {p.x + stride_m * std::cos(a), p.y + stride_m * std::sin(a)};
}

/// Least-squares o-space: the point minimising the summed squared distance
/// to every member's proposal, which is the proposals' centroid.
inline Point2 group_ospace(std::span<const Person> members, double stride_m) {
    if (members.empty()) throw std::invalid_argument("o-space of an empty group");
    double sx = 0.0, sy = 0.0;
    for (const auto& p : members) {
        const Point2 c = propose_center(p, stride_m);
        sx += c.x;
        sy += c.y;
    }
    const double n = static_cast<double>(members.size());
    return {sx / n, sy / n};
}

/// Centers of every non-singleton block, clamped into the room.
inline std::vector<OSpaceCenter> ground_truth_centers(const Scene& s, double stride_m, const RoomSpec& spec) {
    std::vector<OSpaceCenter> out;
    for (const auto& g : s.groups) {
        if (g.size() < 2) continue;
        std::vector<Person> members;
        members.reserve(g.size());
        for (std::size_t i : g) members.push_back(s.persons.at(i));
        out.push_back({spec.clamp(group_ospace(members, stride_m)), g});
    }
    return out;
}

/// Peak-one Gaussians around each center, combined by max.
inline OSpaceMap render_heatmap(std::span<const Point2> centers, const GaussianParams& params, const RoomSpec& spec) {
    params.validate();
    OSpaceMap m(spec);
    const double inv = 1.0 / (2.0 * params.sigma_m * params.sigma_m);
    for (int r = 0; r < spec.rows; ++r)
        for (int c = 0; c < spec.cols; ++c) {
            const Point2 cc = cell_center(r, c, spec);
            double v = 0.0;
            for (const auto& k : centers) v = std::max(v, std::exp(-squared_distance(cc, spec.clamp(k)) * inv));
            m.at(r, c) = v;
        }
    return m;
}

/// Training target: one Gaussian per conversational group, none for singletons.
inline OSpaceMap scene_target(const Scene& s, double stride_m, const GaussianParams& params, const RoomSpec& spec) {
    std::vector<Point2> centers;
    for (const auto& oc : ground_truth_centers(s, stride_m, spec)) centers.push_back(oc.center);
    return render_heatmap(centers, params, spec);
}

}  // namespace ospace
