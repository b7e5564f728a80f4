#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace ospace;

namespace {

OSpaceMap flat(double v, const RoomSpec& spec = {}) { return OSpaceMap(spec, std::vector<double>(spec.cell_count(), v)); }

}  // namespace

TEST(Nms, SinglePeak) {
    OSpaceMap m = flat(0.1);
    m.at(3, 4) = 0.9;
    const auto d = nms(m, {0.5, 1.0, 1.0, 0.7});
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].cell, (CellIndex{3, 4}));
    EXPECT_EQ(d[0].center, cell_center(3, 4, m.spec()));
    EXPECT_EQ(d[0].score, 0.9);
}

TEST(Nms, AllBelowThreshold) {
    EXPECT_TRUE(nms(flat(0.3), {0.5, 1.0, 1.0, 0.7}).empty());
}

TEST(Nms, SuppressesCloseWeakerPeak) {
    OSpaceMap m = flat(0.1);
    m.at(3, 4) = 0.9;
    m.at(3, 5) = 0.8;  // 0.5 m away; not a local max because of the 0.9 neighbour
    m.at(5, 4) = 0.8;  // 1.0 m away, a local max
    auto d = nms(m, {0.5, 1.5, 1.0, 0.7});
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].score, 0.9);
    d = nms(m, {0.5, 1.0, 1.0, 0.7});
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d[1].cell, (CellIndex{5, 4}));
}

TEST(Nms, TwoMaximaHalfMeterApart) {
    // two separated plateaus whose maxima sit 0.5 m apart (diagonal neighbours would block, so use a valley)
    OSpaceMap m = flat(0.1);
    m.at(2, 2) = 0.9;
    m.at(2, 3) = 0.8;
    // 0.8 is not >= 0.9, so it is no candidate; emulate the separation rule with equal plateau heights
    OSpaceMap p = flat(0.1);
    p.at(2, 2) = 0.9;
    p.at(2, 3) = 0.9;
    auto d = nms(p, {0.5, 1.0, 1.0, 0.7});
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].cell, (CellIndex{2, 2}));  // row-major tie order
    d = nms(p, {0.5, 0.5, 1.0, 0.7});
    EXPECT_EQ(d.size(), 2u);
    EXPECT_EQ(nms(m, {0.5, 1.0, 1.0, 0.7}).size(), 1u);
}

TEST(Nms, PlateauTiesAreRowMajor) {
    OSpaceMap m = flat(0.7);
    const auto d = nms(m, {0.5, 10.0, 1.0, 0.7});
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].cell, (CellIndex{0, 0}));
}

TEST(Nms, SeparationSortedAndMonotoneInThreshold) {
    Rng rng(3);
    for (int t = 0; t < 300; ++t) {
        OSpaceMap m(RoomSpec{});
        for (double& v : m.values()) v = rng.uniform();
        const AssignParams p{rng.uniform(0.2, 0.8), rng.uniform(0.0, 2.0), 1.0, 0.7};
        const auto d = nms(m, p);
        for (std::size_t i = 0; i < d.size(); ++i) {
            EXPECT_GE(d[i].score, p.nms_threshold);
            if (i > 0) EXPECT_GE(d[i - 1].score, d[i].score);
            for (std::size_t j = i + 1; j < d.size(); ++j) EXPECT_GE(distance(d[i].center, d[j].center), p.min_group_separation_m);
        }
        AssignParams higher = p;
        higher.nms_threshold = std::min(1.0, p.nms_threshold + rng.uniform(0.0, 0.3));
        // raising the threshold only removes candidates; survivors of the stricter run were kept before
        const auto e = nms(m, higher);
        EXPECT_LE(e.size(), nms(m, AssignParams{p.nms_threshold, 0.0, 1.0, 0.7}).size());
        for (const auto& x : e) EXPECT_GE(x.score, higher.nms_threshold);
    }
}

TEST(Nms, RejectsBadParams) {
    EXPECT_THROW(nms(flat(0.1), {1.5, 1.0, 1.0, 0.7}), std::invalid_argument);
    EXPECT_THROW(nms(flat(0.1), {0.5, -1.0, 1.0, 0.7}), std::invalid_argument);
}

TEST(AssignGroups, FacingPairFormsDyad) {
    const std::vector<Person> persons{Person(1.0, 1.0, 0), Person(2.5, 1.0, 180)};
    const std::vector<Detection> dets{{{1.75, 1.0}, 0.9, {2, 3}}};
    EXPECT_EQ(assign_groups(persons, dets, {}), (Partition{{0, 1}}));
}

TEST(AssignGroups, NoDetectionsAllSingletons) {
    const std::vector<Person> persons{Person(1, 1, 0), Person(2, 1, 180), Person(3, 3, 90)};
    EXPECT_EQ(assign_groups(persons, {}, {}), (Partition{{0}, {1}, {2}}));
}

TEST(AssignGroups, FarProposalStaysAlone) {
    const std::vector<Person> persons{Person(1.0, 1.0, 0), Person(2.4, 1.0, 180), Person(5.0, 4.0, 0)};
    const std::vector<Detection> dets{{{1.7, 1.0}, 0.9, {2, 3}}};
    EXPECT_EQ(assign_groups(persons, dets, {0.5, 1.0, 1.0, 0.7}), (Partition{{0, 1}, {2}}));
}

TEST(AssignGroups, LoneClaimDissolves) {
    const std::vector<Person> persons{Person(1.0, 1.0, 0), Person(2.4, 1.0, 180), Person(4.0, 4.0, 0)};
    const std::vector<Detection> dets{{{1.7, 1.0}, 0.9, {2, 3}}, {{4.7, 4.0}, 0.8, {8, 9}}};
    EXPECT_EQ(assign_groups(persons, dets, {}), (Partition{{0, 1}, {2}}));
}

TEST(AssignGroups, AlwaysAValidCanonicalPartition) {
    Rng rng(4);
    for (int t = 0; t < 300; ++t) {
        const Scene s = oracle::random_scene(static_cast<std::size_t>(rng.integer(0, 15)), RoomSpec{}, rng);
        std::vector<Detection> dets;
        for (int k = 0; k < rng.integer(0, 4); ++k) dets.push_back({{rng.uniform(0, 6), rng.uniform(0, 5)}, 0.9, {}});
        const Partition p = assign_groups(s.persons, dets, {0.5, 1.0, rng.uniform(0, 3), rng.uniform(0, 1.5)});
        EXPECT_NO_THROW(validate_partition(p, s.persons.size()));
        EXPECT_EQ(p, canonical_partition(p));
    }
}

TEST(PredictScene, EmptyHeatmapGivesSingletons) {
    const Scene s{"s", {Person(1, 1, 0), Person(2, 1, 180)}, {{0, 1}}};
    const auto p = groups_from_map(s, flat(0.0), {});
    EXPECT_TRUE(p.detections.empty());
    EXPECT_EQ(p.groups, (Partition{{0}, {1}}));
}

TEST(PredictScene, GroundTruthMapRecoversPartition) {
    SynthConfig cfg;
    cfg.seed = 21;
    cfg.n_scenes = 50;
    for (const auto& g : generate(cfg)) {
        const OSpaceMap truth = scene_target(g.scene, 0.7, {0.5}, RoomSpec{});
        EXPECT_EQ(oracle::as_group_set(groups_from_map(g.scene, truth, {}).groups), oracle::as_group_set(g.scene.groups));
    }
}

TEST(PredictScene, PersonOrderInvariant) {
    Rng rng(5);
    const ModelWeights m = oracle::small_model(5, {RoomSpec{}, {8, 8}, {16}, 3, 25});
    for (int t = 0; t < 100; ++t) {
        const Scene s = oracle::random_scene(static_cast<std::size_t>(rng.integer(1, 12)), RoomSpec{}, rng);
        const AssignParams params{rng.uniform(0.3, 0.7), 1.0, 1.5, 0.7};
        const auto base = predict_scene(s, m, m.rooms[0], params);

        std::vector<std::size_t> perm(s.persons.size());
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        Scene shuffled = s;
        for (std::size_t i = 0; i < perm.size(); ++i) shuffled.persons[i] = s.persons[perm[i]];
        const auto moved = predict_scene(shuffled, m, m.rooms[0], params);
        EXPECT_EQ(moved.map, base.map);
        Partition mapped;
        for (const auto& g : moved.groups) {
            Group h;
            for (std::size_t i : g) h.push_back(perm[i]);
            mapped.push_back(h);
        }
        EXPECT_EQ(canonical_partition(mapped), base.groups);
    }
}
