#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace ospace;

namespace {

struct Fixture {
    std::vector<Scene> scenes;
    std::vector<OSpaceMap> maps;
};

Fixture truth_maps(std::uint64_t seed, std::size_t n) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.n_scenes = n;
    Fixture f;
    for (const auto& g : generate(cfg)) {
        f.scenes.push_back(g.scene);
        f.maps.push_back(scene_target(g.scene, 0.7, {0.5}, RoomSpec{}));
    }
    return f;
}

}  // namespace

TEST(GridSearch, SingleCell) {
    const Fixture f = truth_maps(1, 20);
    const Grid g{{0.5}, {1.0}, {1.0}, {0.7}};
    const auto r = grid_search_maps(f.scenes, f.maps, g, 1.0);
    ASSERT_EQ(r.table.size(), 1u);
    EXPECT_EQ(r.best, (AssignParams{0.5, 1.0, 1.0, 0.7}));
    EXPECT_EQ(r.best_f1, r.table[0].metrics.f1);
}

TEST(GridSearch, FindsOracleParameters) {
    const Fixture f = truth_maps(2, 40);
    const auto r = grid_search_maps(f.scenes, f.maps, Grid{}, 1.0);
    EXPECT_EQ(r.table.size(), 6u * 3u * 4u * 3u);
    EXPECT_EQ(r.best_f1, 1.0);
    double top = 0.0;
    for (const auto& row : r.table) top = std::max(top, row.metrics.f1);
    EXPECT_EQ(r.best_f1, top);
    // the oracle stride reproduces every group
    const auto oracle_row = std::find_if(r.table.begin(), r.table.end(), [](const GridRow& row) {
        return row.params == AssignParams{0.5, 1.0, 1.0, 0.7};
    });
    ASSERT_NE(oracle_row, r.table.end());
    EXPECT_EQ(oracle_row->metrics.f1, 1.0);
}

TEST(GridSearch, TieBreakPrefersHigherThresholdLargerSeparationSmallerDistances) {
    const Fixture f = truth_maps(3, 20);
    const auto r = grid_search_maps(f.scenes, f.maps, Grid{}, 1.0);
    for (const auto& row : r.table)
        if (row.metrics.f1 == r.best_f1) EXPECT_FALSE(detail::preferred(row.params, r.best));
    EXPECT_TRUE(detail::preferred({0.6, 1.0, 1.0, 0.7}, {0.5, 1.5, 0.5, 0.4}));
    EXPECT_TRUE(detail::preferred({0.5, 1.5, 1.0, 0.7}, {0.5, 1.0, 0.5, 0.4}));
    EXPECT_TRUE(detail::preferred({0.5, 1.0, 0.5, 0.7}, {0.5, 1.0, 1.0, 0.4}));
    EXPECT_TRUE(detail::preferred({0.5, 1.0, 0.5, 0.4}, {0.5, 1.0, 0.5, 0.7}));
}

TEST(GridSearch, DuplicatedValuesDoNotChangeResult) {
    const Fixture f = truth_maps(4, 20);
    Grid g{{0.4, 0.6}, {0.5, 1.0}, {1.0, 2.0}, {0.4, 0.7}};
    Grid dup{{0.6, 0.4, 0.6}, {1.0, 0.5, 1.0}, {2.0, 1.0, 1.0}, {0.7, 0.7, 0.4}};
    const auto a = grid_search_maps(f.scenes, f.maps, g, kToleranceLoose);
    const auto b = grid_search_maps(f.scenes, f.maps, dup, kToleranceLoose);
    EXPECT_EQ(a.best, b.best);
    EXPECT_EQ(a.best_f1, b.best_f1);
}

TEST(GridSearch, DeterministicWithModel) {
    const ModelWeights m = oracle::small_model(5, {RoomSpec{}, {8}, {8}, 2, 25});
    const Fixture f = truth_maps(5, 10);
    const std::vector<RoomFeature> rooms{m.rooms[0]};
    const auto a = grid_search(m, f.scenes, rooms, Grid{}, 1.0);
    const auto b = grid_search(m, f.scenes, rooms, Grid{}, 1.0);
    EXPECT_EQ(a.best, b.best);
    ASSERT_EQ(a.table.size(), b.table.size());
    for (std::size_t i = 0; i < a.table.size(); ++i) EXPECT_EQ(a.table[i].metrics.counts, b.table[i].metrics.counts);
}

TEST(GridSearch, RejectsBadInput) {
    const Fixture f = truth_maps(6, 3);
    EXPECT_THROW(grid_search_maps(f.scenes, f.maps, Grid{{}, {1.0}, {1.0}, {0.7}}, 1.0), std::invalid_argument);
    EXPECT_THROW(grid_search_maps(f.scenes, f.maps, Grid{{1.2}, {1.0}, {1.0}, {0.7}}, 1.0), std::invalid_argument);
    EXPECT_THROW(grid_search_maps({}, {}, Grid{}, 1.0), std::invalid_argument);
    EXPECT_THROW(grid_search_maps(f.scenes, std::span<const OSpaceMap>(f.maps).subspan(1), Grid{}, 1.0), std::invalid_argument);
}

TEST(SigmaSweep, RetrainsPerWidthAndPicksBest) {
    SynthConfig sc;
    sc.seed = 7;
    sc.n_scenes = 24;
    sc.groups_per_scene = {1, 2};
    const auto scenes = scenes_of(generate(sc));
    const std::vector<Scene> tr(scenes.begin(), scenes.begin() + 16), va(scenes.begin() + 16, scenes.end());
    ModelWeights init = oracle::small_model(7, {RoomSpec{}, {8, 8}, {16}, 2, 25});
    init.norm = fit_norm_stats(tr);
    const std::vector<RoomFeature> rooms{init.rooms[0]};
    TrainConfig tc;
    tc.epochs = 3;
    const std::vector<double> sigmas{0.75, 0.25, 0.5};
    std::vector<double> seen;
    const auto r = sigma_sweep(sigmas, init, va, rooms, Grid{{0.4, 0.6}, {1.0}, {1.0}, {0.7}}, 1.0, tc,
                               [&](const ModelWeights& m) {
                                   seen.push_back(m.config.gaussian.sigma_m);
                                   std::vector<Example> a, b;
                                   for (const auto& s : tr) a.push_back(make_example(s, m.rooms[0], m, 1.0));
                                   for (const auto& s : va) b.push_back(make_example(s, m.rooms[0], m, 1.0));
                                   return std::pair{a, b};
                               });
    EXPECT_EQ(seen, (std::vector<double>{0.25, 0.5, 0.75}));
    ASSERT_EQ(r.rows.size(), 3u);
    double best = -1;
    for (const auto& row : r.rows) best = std::max(best, row.tuning.best_f1);
    const auto chosen = std::find_if(r.rows.begin(), r.rows.end(), [&](const SigmaRow& row) { return row.tuning.best_f1 == best; });
    EXPECT_EQ(r.best_sigma_m, chosen->sigma_m);
    EXPECT_EQ(r.best_model.config.gaussian.sigma_m, r.best_sigma_m);
}
