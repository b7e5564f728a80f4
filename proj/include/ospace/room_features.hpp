/**
 * @file room_features.hpp
 * @brief Room-layout feature vectors and PCA reduction.
 *
 * Two providers yield the raw room vector: a precomputed file
 * (`dim N` header, then N floats) or an occupancy pyramid computed from a
 * labelled floor grid. PCA (power iteration with deflation) reduces the raw
 * vectors to a fixed width, zero-padded when fewer components exist.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ospace/core.hpp"
#include "ospace/dataset.hpp"
#include "ospace/random.hpp"

namespace ospace {

enum class CellClass : std::uint8_t { free = 0, wall = 1, table = 2, other = 3 };
inline constexpr std::size_t kCellClasses = 4;

inline const char* to_string(CellClass c) {
    switch (c) {
        case CellClass::wall: return "wall";
        case CellClass::table: return "table";
        case CellClass::other: return "other";
        default: return "free";
    }
}

inline CellClass cell_class_from_string(const std::string& s) {
    if (s == "free") return CellClass::free;
    if (s == "wall") return CellClass::wall;
    if (s == "table") return CellClass::table;
    if (s == "other" || s == "furniture") return CellClass::other;
    throw DataError("unknown layout class '" + s + "'");
}

struct LayoutMap {
    RoomSpec spec;
    std::vector<CellClass> cells;  // row-major

    explicit LayoutMap(const RoomSpec& s = {}) : spec(s), cells(s.cell_count(), CellClass::free) {}

    CellClass at(int r, int c) const { return cells[static_cast<std::size_t>(r) * spec.cols + c]; }
    CellClass& at(int r, int c) { return cells[static_cast<std::size_t>(r) * spec.cols + c]; }

    friend bool operator==(const LayoutMap&, const LayoutMap&) = default;
};

inline LayoutMap flip_layout(const LayoutMap& m, FlipAxis axis) {
    LayoutMap out(m.spec);
    const bool fc = axis == FlipAxis::horizontal || axis == FlipAxis::both;
    const bool fr = axis == FlipAxis::vertical || axis == FlipAxis::both;
    for (int r = 0; r < m.spec.rows; ++r)
        for (int c = 0; c < m.spec.cols; ++c)
            out.at(fr ? m.spec.rows - 1 - r : r, fc ? m.spec.cols - 1 - c : c) = m.at(r, c);
    return out;
}

/// {"spec": {"rows": 10, "cols": 12, "cell_m": 0.5}, "cells": [...]} where
/// cells is a flat row-major list or a list of rows of class names.
inline LayoutMap parse_layout(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("layout: ") + e.what());
    }
    RoomSpec spec;
    if (j.contains("spec")) {
        const auto& s = j.at("spec");
        spec.rows = s.value("rows", spec.rows);
        spec.cols = s.value("cols", spec.cols);
        spec.cell_m = s.value("cell_m", spec.cell_m);
    }
    spec.validate();
    LayoutMap m(spec);
    if (!j.contains("cells") || !j.at("cells").is_array()) throw DataError("layout: missing 'cells' array");
    std::vector<std::string> flat;
    for (const auto& e : j.at("cells")) {
        if (e.is_array())
            for (const auto& x : e) flat.push_back(x.get<std::string>());
        else
            flat.push_back(e.get<std::string>());
    }
    if (flat.size() != spec.cell_count())
        throw DataError("layout: expected " + std::to_string(spec.cell_count()) + " cells, got " +
                        std::to_string(flat.size()));
    for (std::size_t i = 0; i < flat.size(); ++i) m.cells[i] = cell_class_from_string(flat[i]);
    return m;
}

inline void write_layout(std::ostream& out, const LayoutMap& m) {
    nlohmann::json cells = nlohmann::json::array();
    for (int r = 0; r < m.spec.rows; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < m.spec.cols; ++c) row.push_back(to_string(m.at(r, c)));
        cells.push_back(std::move(row));
    }
    nlohmann::json j{{"spec", {{"rows", m.spec.rows}, {"cols", m.spec.cols}, {"cell_m", m.spec.cell_m}}},
                     {"cells", std::move(cells)}};
    out << j.dump(1) << '\n';
}

/// Block grids of the occupancy pyramid: whole room, 2x3, 5x6, full grid.
inline std::vector<std::array<int, 2>> pyramid_levels(const RoomSpec& spec) {
    return {{1, 1}, {std::min(2, spec.rows), std::min(3, spec.cols)}, {std::min(5, spec.rows), std::min(6, spec.cols)},
            {spec.rows, spec.cols}};
}

inline std::size_t layout_feature_dim(const RoomSpec& spec) {
    std::size_t n = 0;
    for (auto [br, bc] : pyramid_levels(spec)) n += static_cast<std::size_t>(br * bc) * kCellClasses;
    return n;
}

/// Per-class occupancy fractions for every pyramid block, ordered
/// level, block (row-major), class.
inline std::vector<double> extract_layout_features(const LayoutMap& m) {
    std::vector<double> out;
    out.reserve(layout_feature_dim(m.spec));
    for (auto [br, bc] : pyramid_levels(m.spec)) {
        std::vector<double> counts(static_cast<std::size_t>(br * bc) * kCellClasses, 0.0);
        std::vector<double> sizes(static_cast<std::size_t>(br * bc), 0.0);
        for (int r = 0; r < m.spec.rows; ++r)
            for (int c = 0; c < m.spec.cols; ++c) {
                const std::size_t b = static_cast<std::size_t>((r * br / m.spec.rows) * bc + c * bc / m.spec.cols);
                counts[b * kCellClasses + static_cast<std::size_t>(m.at(r, c))] += 1.0;
                sizes[b] += 1.0;
            }
        for (std::size_t b = 0; b < sizes.size(); ++b)
            for (std::size_t k = 0; k < kCellClasses; ++k) out.push_back(counts[b * kCellClasses + k] / sizes[b]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Feature files

struct RoomFeature {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
    friend bool operator==(const RoomFeature&, const RoomFeature&) = default;
};

/// Reads `dim N` followed by N floats. expected_dim = 0 accepts any size.
inline RoomFeature load_precomputed(std::istream& in, std::size_t expected_dim = 0) {
    std::string tag;
    long long n = -1;
    if (!(in >> tag >> n) || tag != "dim" || n < 0) throw DataError("feature file must start with 'dim N'");
    if (expected_dim != 0 && static_cast<std::size_t>(n) != expected_dim)
        throw DataError("feature file declares dim " + std::to_string(n) + ", model expects " +
                        std::to_string(expected_dim));
    RoomFeature f;
    f.values.reserve(static_cast<std::size_t>(n));
    std::string tok;
    for (long long i = 0; i < n; ++i) {
        if (!(in >> tok)) throw DataError("feature file truncated after " + std::to_string(i) + " values");
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size() || !std::isfinite(v)) throw DataError("bad feature value '" + tok + "'");
        f.values.push_back(v);
    }
    if (in >> tok) throw DataError("feature file has more than " + std::to_string(n) + " values");
    return f;
}

inline void write_feature(std::ostream& out, const RoomFeature& f) {
    out << "dim " << f.values.size() << '\n';
    std::ostringstream s;
    s << std::setprecision(17);
    for (std::size_t i = 0; i < f.values.size(); ++i) s << f.values[i] << ((i + 1) % 8 == 0 ? '\n' : ' ');
    out << s.str() << '\n';
}

// ---------------------------------------------------------------------------
// PCA

struct PcaModel {
    std::vector<double> mean;
    std::vector<std::vector<double>> components;  // k orthonormal rows
    std::vector<double> explained_variances;       // non-increasing

    std::size_t input_dim() const { return mean.size(); }
    std::size_t rank() const { return components.size(); }
};

struct PowerIterationOptions {
    double tolerance = 1e-10;
    std::size_t max_iterations = 10000;
    std::uint64_t seed = 0x5eed;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Removes the components along `basis` (modified Gram-Schmidt) and normalises.
inline bool orthonormalize(std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis) {
            const double d = dot(v, b);
            for (std::size_t i = 0; i < v.size(); ++i) v[i] -= d * b[i];
        }
    const double n = norm(v);
    if (!(n > 1e-300)) return false;
    for (double& x : v) x /= n;
    return true;
}

}  // namespace detail

/// Top-k eigenpairs of a symmetric matrix (row-major n x n) by power
/// iteration with deflation. Iterates are kept orthogonal to the vectors
/// already found, so exhausted (zero) directions still yield an orthonormal
/// basis with eigenvalue 0.
inline void symmetric_top_eigen(std::vector<double> a, std::size_t n, std::size_t k,
                                std::vector<std::vector<double>>& vectors, std::vector<double>& values,
                                const PowerIterationOptions& opt = {}) {
    vectors.clear();
    values.clear();
    Rng rng(opt.seed);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i * n + i]));
    std::vector<double> w(n);
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> v(n);
        do {
            for (double& x : v) x = rng.uniform(-1.0, 1.0);
        } while (!detail::orthonormalize(v, vectors));

        for (std::size_t it = 0; it < opt.max_iterations; ++it) {
            for (std::size_t i = 0; i < n; ++i) w[i] = detail::dot(std::span<const double>(a.data() + i * n, n), v);
            const double wn = detail::norm(w);
            if (wn <= 1e-14 * std::max(scale, 1e-300)) {
                // remaining spectrum is numerically zero
                break;
            }
            std::vector<double> next = w;
            if (!detail::orthonormalize(next, vectors)) break;
            // align sign so a converged eigenvector with negative eigenvalue still compares equal
            if (detail::dot(next, v) < 0.0)
                for (double& x : next) x = -x;
            double delta = 0.0;
            for (std::size_t i = 0; i < n; ++i) delta = std::max(delta, std::abs(next[i] - v[i]));
            v = std::move(next);
            if (delta < opt.tolerance) break;
        }
        for (std::size_t i = 0; i < n; ++i) w[i] = detail::dot(std::span<const double>(a.data() + i * n, n), v);
        const double lambda = detail::dot(v, w);
        // deflate
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) a[i * n + j] -= lambda * v[i] * v[j];
        vectors.push_back(std::move(v));
        values.push_back(lambda);
    }
}

/// Sample covariance (divisor N - 1) of row samples.
inline std::vector<double> covariance(std::span<const std::vector<double>> samples, std::vector<double>& mean) {
    const std::size_t n = samples.front().size();
    const double count = static_cast<double>(samples.size());
    mean.assign(n, 0.0);
    for (const auto& s : samples)
        for (std::size_t i = 0; i < n; ++i) mean[i] += s[i];
    for (double& m : mean) m /= count;
    std::vector<double> cov(n * n, 0.0);
    std::vector<double> d(n);
    for (const auto& s : samples) {
        for (std::size_t i = 0; i < n; ++i) d[i] = s[i] - mean[i];
        for (std::size_t i = 0; i < n; ++i) {
            if (d[i] == 0.0) continue;
            for (std::size_t j = i; j < n; ++j) cov[i * n + j] += d[i] * d[j];
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            cov[i * n + j] /= (count - 1.0);
            cov[j * n + i] = cov[i * n + j];
        }
    return cov;
}

inline PcaModel pca_fit(std::span<const std::vector<double>> samples, std::size_t k,
                        const PowerIterationOptions& opt = {}) {
    if (samples.size() < 2) throw std::invalid_argument("PCA needs at least two samples");
    const std::size_t n = samples.front().size();
    for (const auto& s : samples) check_dim(s.size(), n, "PCA sample");
    if (k < 1 || k > std::min(n, samples.size()))
        throw std::invalid_argument("PCA rank " + std::to_string(k) + " exceeds min(dim, samples) = " +
                                    std::to_string(std::min(n, samples.size())));
    PcaModel m;
    std::vector<double> cov = covariance(samples, m.mean);
    symmetric_top_eigen(std::move(cov), n, k, m.components, m.explained_variances, opt);
    // a covariance is PSD; clip round-off below zero
    for (double& v : m.explained_variances) v = std::max(v, 0.0);
    return m;
}

inline std::vector<double> pca_project(const PcaModel& m, std::span<const double> v) {
    check_dim(v.size(), m.input_dim(), "PCA projection input");
    std::vector<double> centered(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) centered[i] = v[i] - m.mean[i];
    std::vector<double> out(m.rank());
    for (std::size_t c = 0; c < m.rank(); ++c) out[c] = detail::dot(m.components[c], centered);
    return out;
}

/// Projects and zero-pads (or truncates) to `dim`.
inline RoomFeature reduce_to(const PcaModel& m, std::span<const double> raw, std::size_t dim) {
    RoomFeature f;
    f.values = pca_project(m, raw);
    f.values.resize(dim, 0.0);
    return f;
}

/// Room vectors for the four flip variants of a layout (kAugmentOrder),
/// reduced by a PCA fitted on those variants.
inline std::array<RoomFeature, 4> room_features_for_layout(const LayoutMap& layout, std::size_t dim) {
    std::vector<std::vector<double>> raw;
    for (FlipAxis a : kAugmentOrder) raw.push_back(extract_layout_features(flip_layout(layout, a)));
    const std::size_t k = std::min({dim, raw.front().size(), raw.size()});
    std::array<RoomFeature, 4> out;
    if (k == 0) return out;
    const PcaModel pca = pca_fit(raw, k);
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = reduce_to(pca, raw[i], dim);
    return out;
}

}  // namespace ospace
