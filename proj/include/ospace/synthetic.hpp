/**
 * @file synthetic.hpp
 * @brief Seeded standing-group scenes with known o-space centers.
 *
 * Each group stands evenly spaced on a circle around its center, everyone
 * facing the center, so with stride equal to the circle radius every member
 * proposes the true center exactly (before jitter). Lone people are kept
 * away from every group center, and their own proposals are kept away from
 * the centers and from one another.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ospace/core.hpp"
#include "ospace/groundtruth.hpp"
#include "ospace/random.hpp"

namespace ospace {

struct IntRange {
    int min = 0;
    int max = 0;

    bool valid() const { return min <= max; }
};

struct SynthConfig {
    std::uint64_t seed = 0;
    std::size_t n_scenes = 100;
    IntRange groups_per_scene{1, 3};
    IntRange group_size{2, 6};
    IntRange singleton_count{0, 2};
    double circle_radius_m = kDefaultStride;
    double min_intergroup_dist_m = 2.0;
    double jitter_m = 0.0;
    double jitter_deg = 0.0;
    RoomSpec room;
    std::size_t max_people = kDefaultMaxPeople;
    int max_attempts = 1000;

    void validate() const {
        room.validate();
        if (!groups_per_scene.valid() || !group_size.valid() || !singleton_count.valid())
            throw std::invalid_argument("synth ranges must satisfy min <= max");
        if (groups_per_scene.min < 0 || singleton_count.min < 0 || group_size.min < 2)
            throw std::invalid_argument("groups need >= 2 members and counts must be non-negative");
        if (!(circle_radius_m > 0.0) || !(min_intergroup_dist_m >= 0.0) || !(jitter_m >= 0.0) || !(jitter_deg >= 0.0))
            throw std::invalid_argument("synth distances and jitter must be non-negative");
        const auto worst = static_cast<std::size_t>(groups_per_scene.max * group_size.max + singleton_count.max);
        if (worst > max_people)
            throw std::invalid_argument("largest possible scene has " + std::to_string(worst) + " persons, capacity " +
                                        std::to_string(max_people));
        if (2.0 * (circle_radius_m + 0.1) >= std::min(room.width_m(), room.height_m()))
            throw std::invalid_argument("group circle does not fit in the room");
        if (max_attempts < 1) throw std::invalid_argument("max_attempts must be positive");
    }
};

struct SynthScene {
    Scene scene;
    std::vector<Point2> centers;  // one per conversational group, in block order
};

namespace detail {

inline bool far_from_all(Point2 p, std::span<const Point2> others, double d) {
    for (const auto& o : others)
        if (distance(p, o) < d) return false;
    return true;
}

inline bool try_scene(const SynthConfig& cfg, Rng& rng, SynthScene& out) {
    const RoomSpec& room = cfg.room;
    const int n_groups = static_cast<int>(rng.integer(cfg.groups_per_scene.min, cfg.groups_per_scene.max));
    const int n_single = static_cast<int>(rng.integer(cfg.singleton_count.min, cfg.singleton_count.max));
    const double margin = cfg.circle_radius_m + 0.1;

    out.scene.persons.clear();
    out.scene.groups.clear();
    out.centers.clear();

    for (int g = 0; g < n_groups; ++g) {
        Point2 c;
        bool placed = false;
        for (int a = 0; a < cfg.max_attempts && !placed; ++a) {
            c = {rng.uniform(margin, room.width_m() - margin), rng.uniform(margin, room.height_m() - margin)};
            placed = far_from_all(c, out.centers, cfg.min_intergroup_dist_m);
        }
        if (!placed) return false;
        out.centers.push_back(c);
    }

    for (int g = 0; g < n_groups; ++g) {
        const int size = static_cast<int>(rng.integer(cfg.group_size.min, cfg.group_size.max));
        const double phase = rng.uniform(0.0, 2.0 * kPi);
        Group block;
        for (int k = 0; k < size; ++k) {
            const double theta = phase + 2.0 * kPi * k / size;
            Point2 p{out.centers[g].x + cfg.circle_radius_m * std::cos(theta),
                     out.centers[g].y + cfg.circle_radius_m * std::sin(theta)};
            double yaw = (theta + kPi) * 180.0 / kPi;
            if (cfg.jitter_m > 0.0) {
                p.x += cfg.jitter_m * rng.normal();
                p.y += cfg.jitter_m * rng.normal();
            }
            if (cfg.jitter_deg > 0.0) yaw += cfg.jitter_deg * rng.normal();
            p = room.clamp(p);
            block.push_back(out.scene.persons.size());
            out.scene.persons.emplace_back(p.x, p.y, yaw);
        }
        out.scene.groups.push_back(std::move(block));
    }

    std::vector<Point2> lone_proposals;
    for (int s = 0; s < n_single; ++s) {
        bool placed = false;
        for (int a = 0; a < cfg.max_attempts && !placed; ++a) {
            const Person p(rng.uniform(0.1, room.width_m() - 0.1), rng.uniform(0.1, room.height_m() - 0.1),
                           rng.uniform(0.0, 360.0));
            const Point2 prop = propose_center(p, cfg.circle_radius_m);
            if (!far_from_all(p.position(), out.centers, cfg.min_intergroup_dist_m) ||
                !far_from_all(prop, out.centers, cfg.min_intergroup_dist_m) ||
                !far_from_all(prop, lone_proposals, cfg.min_intergroup_dist_m))
                continue;
            lone_proposals.push_back(prop);
            out.scene.groups.push_back({out.scene.persons.size()});
            out.scene.persons.push_back(p);
            placed = true;
        }
        if (!placed) return false;
    }
    return true;
}

}  // namespace detail

/// Deterministic for a given config; one generator stream feeds all scenes in order.
inline std::vector<SynthScene> generate(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(derive_seed(cfg.seed, 3));
    std::vector<SynthScene> out;
    out.reserve(cfg.n_scenes);
    for (std::size_t i = 0; i < cfg.n_scenes; ++i) {
        SynthScene s;
        bool ok = false;
        for (int a = 0; a < cfg.max_attempts && !ok; ++a) ok = detail::try_scene(cfg, rng, s);
        if (!ok)
            throw DataError("synthetic scene " + std::to_string(i) + " infeasible after " +
                            std::to_string(cfg.max_attempts) + " attempts");
        s.scene.frame_id = "synth-" + std::to_string(cfg.seed) + "-" + std::to_string(i);
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<Scene> scenes_of(std::span<const SynthScene> synth) {
    std::vector<Scene> out;
    out.reserve(synth.size());
    for (const auto& s : synth) out.push_back(s.scene);
    return out;
}

/// Sidecar line: {"frame_id": ..., "centers": [[x, y], ...]}.
inline void write_centers(std::ostream& out, std::span<const SynthScene> synth) {
    for (const auto& s : synth) {
        nlohmann::json c = nlohmann::json::array();
        for (const auto& p : s.centers) c.push_back({p.x, p.y});
        out << nlohmann::json{{"frame_id", s.scene.frame_id}, {"centers", std::move(c)}}.dump() << '\n';
    }
}

}  // namespace ospace
