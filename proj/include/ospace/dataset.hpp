/**
 * @file dataset.hpp
 * @brief Scene ingestion (JSON Lines), sequential splits, person features
 *        and flip augmentation.
 *
 * Scene record, one per line:
 *
 *     {"frame_id": "f0", "persons": [{"x": 1.0, "y": 2.0, "yaw_deg": 90}],
 *      "groups": [[0, 1], [2]]}
 *
 * Persons absent from every block become singleton blocks.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ospace/core.hpp"

namespace ospace {

inline constexpr std::size_t kYawBins = 16;
inline constexpr double kYawBinDeg = 360.0 / kYawBins;
inline constexpr std::size_t kFeatureDim = 2 + kYawBins;

/// (norm_x, norm_y, one-hot yaw bucket).
struct PersonFeature {
    std::array<double, kFeatureDim> values{};

    double norm_x() const { return values[0]; }
    double norm_y() const { return values[1]; }
    std::span<const double, kYawBins> yaw_onehot() const {
        return std::span<const double, kYawBins>(values.data() + 2, kYawBins);
    }

    friend bool operator==(const PersonFeature&, const PersonFeature&) = default;
};

struct NormStats {
    double mean_x = 0.0;
    double mean_y = 0.0;
    double std_x = 1.0;
    double std_y = 1.0;

    friend bool operator==(const NormStats&, const NormStats&) = default;
};

struct SplitRatios {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;

    void validate() const {
        for (double r : {train, val, test})
            if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("split ratios must lie in (0, 1)");
        if (std::abs(train + val + test - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");
    }
};

struct Split {
    std::vector<Scene> train;
    std::vector<Scene> val;
    std::vector<Scene> test;
};

// ---------------------------------------------------------------------------
// JSON Lines

inline Scene scene_from_json(const nlohmann::json& j) {
    Scene s;
    if (!j.is_object()) throw DataError("record is not a JSON object");
    if (!j.contains("persons") || !j.at("persons").is_array()) throw DataError("missing 'persons' array");
    if (j.contains("frame_id")) {
        const auto& f = j.at("frame_id");
        s.frame_id = f.is_string() ? f.get<std::string>() : f.dump();
    }
    for (const auto& p : j.at("persons")) {
        if (!p.is_object() || !p.contains("x") || !p.contains("y") || !p.contains("yaw_deg"))
            throw DataError("person needs x, y and yaw_deg");
        const auto& x = p.at("x");
        const auto& y = p.at("y");
        const auto& yaw = p.at("yaw_deg");
        if (!x.is_number() || !y.is_number() || !yaw.is_number()) throw DataError("person fields must be numbers");
        const double yd = yaw.get<double>();
        if (!std::isfinite(yd)) throw DataError("non-finite yaw");
        s.persons.emplace_back(x.get<double>(), y.get<double>(), yd);
    }
    if (j.contains("groups")) {
        const auto& gs = j.at("groups");
        if (!gs.is_array()) throw DataError("'groups' must be an array of index arrays");
        for (const auto& g : gs) {
            if (!g.is_array()) throw DataError("group block must be an array");
            Group block;
            for (const auto& idx : g) {
                if (!idx.is_number_integer() || idx.get<long long>() < 0) throw DataError("group index must be a non-negative integer");
                block.push_back(idx.get<std::size_t>());
            }
            s.groups.push_back(std::move(block));
        }
    }
    s.groups = complete_partition(std::move(s.groups), s.persons.size());
    return s;
}

inline nlohmann::json scene_to_json(const Scene& s) {
    nlohmann::json persons = nlohmann::json::array();
    for (const auto& p : s.persons) persons.push_back({{"x", p.x}, {"y", p.y}, {"yaw_deg", p.yaw_deg}});
    return {{"frame_id", s.frame_id}, {"persons", std::move(persons)}, {"groups", s.groups}};
}

/// Parses JSON Lines. Blank lines are skipped; errors carry the 1-based line number.
inline std::vector<Scene> parse_scenes(std::istream& in, const RoomSpec& spec = {},
                                       std::size_t max_people = kDefaultMaxPeople) {
    std::vector<Scene> scenes;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            Scene s = scene_from_json(nlohmann::json::parse(line));
            if (s.frame_id.empty()) s.frame_id = std::to_string(line_no);
            validate_scene(s, spec, max_people);
            scenes.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return scenes;
}

inline void write_scenes(std::ostream& out, std::span<const Scene> scenes) {
    for (const auto& s : scenes) out << scene_to_json(s).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Splits

/// Contiguous train/val/test; sizes floor(N*train), floor(N*val), remainder.
inline Split sequential_split(std::span<const Scene> scenes, const SplitRatios& ratios = {}) {
    ratios.validate();
    const std::size_t n = scenes.size();
    // the epsilon absorbs products such as 0.29 * 100 = 28.999999999999996
    const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios.train + 1e-9));
    const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios.val + 1e-9));
    Split s;
    s.train.assign(scenes.begin(), scenes.begin() + n_train);
    s.val.assign(scenes.begin() + n_train, scenes.begin() + n_train + n_val);
    s.test.assign(scenes.begin() + n_train + n_val, scenes.end());
    return s;
}

// ---------------------------------------------------------------------------
// Features

/// Half-open buckets [k*22.5, (k+1)*22.5).
inline std::size_t bucket_yaw(double yaw_deg) {
    if (!std::isfinite(yaw_deg)) throw std::invalid_argument("yaw must be finite");
    const auto k = static_cast<std::size_t>(std::floor(normalize_yaw(yaw_deg) / kYawBinDeg));
    return std::min(k, kYawBins - 1);
}

/// Population mean/std of positions; a degenerate axis falls back to std 1.
inline NormStats fit_norm_stats(std::span<const Scene> train) {
    double n = 0.0, sx = 0.0, sy = 0.0;
    for (const auto& s : train)
        for (const auto& p : s.persons) {
            n += 1.0;
            sx += p.x;
            sy += p.y;
        }
    if (n == 0.0) throw DataError("cannot fit normalisation: no persons in training scenes");
    NormStats st;
    st.mean_x = sx / n;
    st.mean_y = sy / n;
    double vx = 0.0, vy = 0.0;
    for (const auto& s : train)
        for (const auto& p : s.persons) {
            vx += (p.x - st.mean_x) * (p.x - st.mean_x);
            vy += (p.y - st.mean_y) * (p.y - st.mean_y);
        }
    st.std_x = std::sqrt(vx / n);
    st.std_y = std::sqrt(vy / n);
    if (!(st.std_x > 1e-12)) st.std_x = 1.0;
    if (!(st.std_y > 1e-12)) st.std_y = 1.0;
    return st;
}

inline PersonFeature person_feature(const Person& p, const NormStats& st) {
    PersonFeature f;
    f.values[0] = (p.x - st.mean_x) / st.std_x;
    f.values[1] = (p.y - st.mean_y) / st.std_y;
    f.values[2 + bucket_yaw(p.yaw_deg)] = 1.0;
    return f;
}

inline std::vector<PersonFeature> scene_features(const Scene& s, const NormStats& st) {
    std::vector<PersonFeature> out;
    out.reserve(s.persons.size());
    for (const auto& p : s.persons) out.push_back(person_feature(p, st));
    return out;
}

// ---------------------------------------------------------------------------
// Augmentation

inline Person flip_person(const Person& p, FlipAxis axis, const RoomSpec& spec) {
    Person q = p;
    if (axis == FlipAxis::horizontal || axis == FlipAxis::both) {
        q.x = spec.width_m() - q.x;
        q.yaw_deg = normalize_yaw(180.0 - q.yaw_deg);
    }
    if (axis == FlipAxis::vertical || axis == FlipAxis::both) {
        q.y = spec.height_m() - q.y;
        q.yaw_deg = normalize_yaw(360.0 - q.yaw_deg);
    }
    return q;
}

/// Mirrors positions and headings; group blocks are left as they are.
inline Scene flip_scene(const Scene& s, FlipAxis axis, const RoomSpec& spec) {
    Scene out = s;
    for (auto& p : out.persons) p = flip_person(p, axis, spec);
    return out;
}

inline constexpr std::array<FlipAxis, 4> kAugmentOrder{FlipAxis::none, FlipAxis::horizontal, FlipAxis::vertical,
                                                       FlipAxis::both};

inline const char* flip_suffix(FlipAxis a) {
    switch (a) {
        case FlipAxis::horizontal: return "#h";
        case FlipAxis::vertical: return "#v";
        case FlipAxis::both: return "#hv";
        default: return "";
    }
}

/// Four variants per input scene, interleaved: scene i occupies
/// [4i, 4i+4) in kAugmentOrder. Flipped copies get a suffixed frame id.
inline std::vector<Scene> augment(std::span<const Scene> scenes, const RoomSpec& spec) {
    std::vector<Scene> out;
    out.reserve(scenes.size() * kAugmentOrder.size());
    for (const auto& s : scenes)
        for (FlipAxis a : kAugmentOrder) {
            out.push_back(flip_scene(s, a, spec));
            out.back().frame_id += flip_suffix(a);
        }
    return out;
}

}  // namespace ospace
