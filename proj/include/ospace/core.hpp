/**
 * @file core.hpp
 * @brief Room geometry, people, scenes and o-space maps.
 *
 * Coordinate convention used throughout the library: the origin sits at a
 * fixed room corner, x grows to the right, y grows upward, and yaw is
 * measured counterclockwise from +x in degrees. Grid cells are indexed
 * (row, col) with the row following y and the column following x; maps are
 * flattened row-major.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ospace {

/// Malformed or inconsistent input data.
class DataError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

/// Non-finite values during optimisation.
class NumericError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

inline double squared_distance(Point2 a, Point2 b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

inline double distance(Point2 a, Point2 b) { return std::sqrt(squared_distance(a, b)); }

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }

/// Maps any finite angle into [0, 360).
inline double normalize_yaw(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r < 0.0) r += 360.0;
    // fmod of a tiny negative value can round up to exactly 360
    if (r >= 360.0) r = 0.0;
    return r;
}

/// Floor grid over the room. Physical extent is derived from the grid.
struct RoomSpec {
    int rows = 10;
    int cols = 12;
    double cell_m = 0.5;

    double width_m() const { return cols * cell_m; }
    double height_m() const { return rows * cell_m; }
    std::size_t cell_count() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }

    /// Closed bounds [0, width] x [0, height]; mirrored positions may land on the far wall.
    bool contains(Point2 p) const {
        return std::isfinite(p.x) && std::isfinite(p.y) && p.x >= 0.0 && p.y >= 0.0 && p.x <= width_m() &&
               p.y <= height_m();
    }

    Point2 clamp(Point2 p) const {
        return {std::clamp(p.x, 0.0, width_m()), std::clamp(p.y, 0.0, height_m())};
    }

    void validate() const {
        if (rows < 1 || cols < 1 || !(cell_m > 0.0) || !std::isfinite(cell_m))
            throw std::invalid_argument("room spec needs rows, cols >= 1 and a positive cell size");
    }

    friend bool operator==(const RoomSpec&, const RoomSpec&) = default;
};

struct CellIndex {
    int row = 0;
    int col = 0;

    friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

inline Point2 cell_center(int row, int col, const RoomSpec& spec) {
    if (row < 0 || row >= spec.rows || col < 0 || col >= spec.cols)
        throw std::out_of_range("cell (" + std::to_string(row) + ", " + std::to_string(col) + ") outside grid");
    return {(col + 0.5) * spec.cell_m, (row + 0.5) * spec.cell_m};
}

inline CellIndex point_to_cell(Point2 p, const RoomSpec& spec) {
    if (!spec.contains(p))
        throw std::out_of_range("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") outside room");
    const int row = std::clamp(static_cast<int>(std::floor(p.y / spec.cell_m)), 0, spec.rows - 1);
    const int col = std::clamp(static_cast<int>(std::floor(p.x / spec.cell_m)), 0, spec.cols - 1);
    return {row, col};
}

struct Person {
    double x = 0.0;
    double y = 0.0;
    double yaw_deg = 0.0;  // always in [0, 360)

    Person() = default;
    Person(double x_m, double y_m, double yaw) : x(x_m), y(y_m), yaw_deg(normalize_yaw(yaw)) {}

    Point2 position() const { return {x, y}; }

    friend bool operator==(const Person&, const Person&) = default;
};

using Group = std::vector<std::size_t>;
using Partition = std::vector<Group>;

/// Sorts members within blocks and blocks by their smallest member.
inline Partition canonical_partition(Partition p) {
    for (auto& g : p) std::sort(g.begin(), g.end());
    std::sort(p.begin(), p.end(), [](const Group& a, const Group& b) {
        if (a.empty() || b.empty()) return a.size() < b.size();
        return a.front() < b.front();
    });
    return p;
}

/// Throws DataError unless `p` partitions {0, ..., n-1} into nonempty blocks.
inline void validate_partition(const Partition& p, std::size_t n) {
    std::vector<char> seen(n, 0);
    for (const auto& g : p) {
        if (g.empty()) throw DataError("empty group block");
        for (std::size_t i : g) {
            if (i >= n) throw DataError("group references person " + std::to_string(i) + " of " + std::to_string(n));
            if (seen[i]) throw DataError("person " + std::to_string(i) + " appears in more than one group");
            seen[i] = 1;
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!seen[i]) throw DataError("person " + std::to_string(i) + " missing from partition");
}

/// Adds singleton blocks for persons that no block mentions.
inline Partition complete_partition(Partition p, std::size_t n) {
    std::vector<char> seen(n, 0);
    for (const auto& g : p)
        for (std::size_t i : g)
            if (i < n) seen[i] = 1;
    for (std::size_t i = 0; i < n; ++i)
        if (!seen[i]) p.push_back({i});
    return p;
}

/// Blocks with at least two members.
inline Partition conversational_groups(const Partition& p) {
    Partition out;
    for (const auto& g : p)
        if (g.size() >= 2) out.push_back(g);
    return out;
}

struct Scene {
    std::string frame_id;
    std::vector<Person> persons;
    Partition groups;

    friend bool operator==(const Scene&, const Scene&) = default;
};

inline constexpr std::size_t kDefaultMaxPeople = 25;

inline void validate_scene(const Scene& s, const RoomSpec& spec, std::size_t max_people = kDefaultMaxPeople) {
    if (s.persons.size() > max_people)
        throw DataError("scene '" + s.frame_id + "' has " + std::to_string(s.persons.size()) +
                        " persons, capacity is " + std::to_string(max_people));
    for (std::size_t i = 0; i < s.persons.size(); ++i) {
        const Person& p = s.persons[i];
        if (!std::isfinite(p.yaw_deg) || !spec.contains(p.position()))
            throw DataError("scene '" + s.frame_id + "': person " + std::to_string(i) + " outside the room");
    }
    validate_partition(s.groups, s.persons.size());
}

/// rows x cols grid of o-space likelihoods, row-major.
class OSpaceMap {
 public:
    OSpaceMap() : OSpaceMap(RoomSpec{}) {}
    explicit OSpaceMap(const RoomSpec& spec) : spec_(spec), values_(spec.cell_count(), 0.0) {}
    OSpaceMap(const RoomSpec& spec, std::vector<double> values) : spec_(spec), values_(std::move(values)) {
        if (values_.size() != spec_.cell_count())
            throw std::invalid_argument("map needs " + std::to_string(spec_.cell_count()) + " values, got " +
                                        std::to_string(values_.size()));
    }

    const RoomSpec& spec() const { return spec_; }
    double at(int row, int col) const { return values_[index(row, col)]; }
    double& at(int row, int col) { return values_[index(row, col)]; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    friend bool operator==(const OSpaceMap&, const OSpaceMap&) = default;

 private:
    std::size_t index(int row, int col) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(spec_.cols) + static_cast<std::size_t>(col);
    }

    RoomSpec spec_;
    std::vector<double> values_;
};

enum class FlipAxis { none, horizontal, vertical, both };

/// Mirrors the grid: horizontal reverses columns, vertical reverses rows.
inline OSpaceMap flip_map(const OSpaceMap& m, FlipAxis axis) {
    const RoomSpec& s = m.spec();
    OSpaceMap out(s);
    const bool fc = axis == FlipAxis::horizontal || axis == FlipAxis::both;
    const bool fr = axis == FlipAxis::vertical || axis == FlipAxis::both;
    for (int r = 0; r < s.rows; ++r)
        for (int c = 0; c < s.cols; ++c) out.at(fr ? s.rows - 1 - r : r, fc ? s.cols - 1 - c : c) = m.at(r, c);
    return out;
}

}  // namespace ospace
