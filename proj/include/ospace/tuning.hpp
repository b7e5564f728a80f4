#pragma once

// Exhaustive validation-set search over the assignment hyperparameters,
// plus a Gaussian-width sweep that retrains per candidate.

#include <algorithm>
#include <functional>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "ospace/evaluation.hpp"
#include "ospace/network.hpp"
#include "ospace/parallel.hpp"
#include "ospace/postprocess.hpp"

namespace ospace {

struct Grid {
    std::vector<double> nms_thresholds{0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    std::vector<double> separations_m{0.5, 1.0, 1.5};
    std::vector<double> assign_dists_m{0.5, 1.0, 1.5, 2.0};
    std::vector<double> strides_m{0.4, 0.7, 1.0};

    void validate() const {
        if (nms_thresholds.empty() || separations_m.empty() || assign_dists_m.empty() || strides_m.empty())
            throw std::invalid_argument("every grid axis needs at least one value");
        for (double t : nms_thresholds)
            if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("grid thresholds must lie in [0, 1]");
        for (const auto* axis : {&separations_m, &assign_dists_m, &strides_m})
            for (double d : *axis)
                if (!(d >= 0.0)) throw std::invalid_argument("grid distances must be non-negative");
    }
};

struct GridRow {
    AssignParams params;
    GroupMetrics metrics;
};

struct TuneResult {
    AssignParams best;
    double best_f1 = 0.0;
    std::vector<GridRow> table;
};

namespace detail {

/// True when `a` should win a tie against `b`: higher threshold, then larger
/// separation, then smaller assignment distance, then smaller stride.
inline bool preferred(const AssignParams& a, const AssignParams& b) {
    return std::make_tuple(a.nms_threshold, a.min_group_separation_m, -a.max_assign_dist_m, -a.stride_m) >
           std::make_tuple(b.nms_threshold, b.min_group_separation_m, -b.max_assign_dist_m, -b.stride_m);
}

}  // namespace detail

/// Scores every grid combination on fixed maps (one per scene).
inline TuneResult grid_search_maps(std::span<const Scene> scenes, std::span<const OSpaceMap> maps, const Grid& grid,
                                   double T) {
    grid.validate();
    check_tolerance(T);
    if (scenes.empty()) throw std::invalid_argument("grid search needs validation scenes");
    if (maps.size() != scenes.size()) throw std::invalid_argument("one map per scene required");

    std::vector<AssignParams> combos;
    for (double t : grid.nms_thresholds)
        for (double s : grid.separations_m)
            for (double a : grid.assign_dists_m)
                for (double st : grid.strides_m) combos.push_back({t, s, a, st});

    std::vector<GridRow> table(combos.size());
    parallel_for(combos.size(), [&](std::size_t i) {
        const AssignParams& p = combos[i];
        MatchCounts total;
        for (std::size_t k = 0; k < scenes.size(); ++k) {
            const auto dets = nms(maps[k], p);
            total += match_scene(assign_groups(scenes[k].persons, dets, p), scenes[k].groups, T);
        }
        table[i] = {p, metrics_from_counts(total, T)};
    });

    TuneResult r;
    r.table = std::move(table);
    std::size_t best = 0;
    for (std::size_t i = 1; i < r.table.size(); ++i) {
        const double f = r.table[i].metrics.f1, fb = r.table[best].metrics.f1;
        if (f > fb || (f == fb && detail::preferred(r.table[i].params, r.table[best].params))) best = i;
    }
    r.best = r.table[best].params;
    r.best_f1 = r.table[best].metrics.f1;
    return r;
}

/// Grid search with the model's predicted maps. `rooms` holds one room
/// vector per scene, or a single vector shared by all.
inline TuneResult grid_search(const ModelWeights& model, std::span<const Scene> val_scenes,
                              std::span<const RoomFeature> rooms, const Grid& grid, double T) {
    if (rooms.empty() || (rooms.size() != 1 && rooms.size() != val_scenes.size()))
        throw std::invalid_argument("need one shared room vector or one per scene");
    std::vector<OSpaceMap> maps(val_scenes.size());
    parallel_for(val_scenes.size(), [&](std::size_t i) {
        maps[i] = predict_map(val_scenes[i], rooms[rooms.size() == 1 ? 0 : i], model);
    });
    return grid_search_maps(val_scenes, maps, grid, T);
}

struct SigmaRow {
    double sigma_m = 0.0;
    TuneResult tuning;
};

struct SigmaSweepResult {
    double best_sigma_m = 0.0;
    ModelWeights best_model;
    std::vector<SigmaRow> rows;
};

/// Retrains from the same initialisation for every Gaussian width and keeps
/// the width whose tuned validation F1 is highest (ties: smaller width).
/// `make_examples` rebuilds training and validation examples for a model.
inline SigmaSweepResult sigma_sweep(
    std::span<const double> sigmas, const ModelWeights& init, std::span<const Scene> val_scenes,
    std::span<const RoomFeature> val_rooms, const Grid& grid, double T, const TrainConfig& train_cfg,
    const std::function<std::pair<std::vector<Example>, std::vector<Example>>(const ModelWeights&)>& make_examples) {
    if (sigmas.empty()) throw std::invalid_argument("sigma sweep needs at least one width");
    std::vector<double> ordered(sigmas.begin(), sigmas.end());
    std::sort(ordered.begin(), ordered.end());
    SigmaSweepResult out;
    double best_f1 = -1.0;
    for (double sigma : ordered) {
        ModelWeights m = init;
        m.config.gaussian.sigma_m = sigma;
        m.config.validate();
        auto [tr, va] = make_examples(m);
        TrainResult trained = train(tr, va, train_cfg, m);
        TuneResult tuned = grid_search(trained.model, val_scenes, val_rooms, grid, T);
        if (tuned.best_f1 > best_f1) {
            best_f1 = tuned.best_f1;
            out.best_sigma_m = sigma;
            out.best_model = trained.model;
        }
        out.rows.push_back({sigma, std::move(tuned)});
    }
    return out;
}

}  // namespace ospace
