// Acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>

#include "oracles.hpp"

using namespace ospace;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
    if (!ok) ++failures;
    std::printf("criterion %d: %s %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

// ---------------------------------------------------------------------------

void invariance() {
    const auto t0 = Clock::now();
    Rng rng(101);
    std::size_t perm_bad = 0, pad_bad = 0, flip_bad = 0, order_bad = 0;
    for (int t = 0; t < 1000; ++t) {
        EncoderConfig cfg;
        cfg.layer_widths = {static_cast<std::size_t>(rng.integer(1, 12)), static_cast<std::size_t>(rng.integer(1, 16))};
        EncoderWeights w = EncoderWeights::random(cfg, rng);
        for (auto& l : w.layers)
            for (double& b : l.bias) b = rng.uniform(-0.3, 0.3);
        auto f = oracle::random_features(static_cast<std::size_t>(rng.integer(1, 25)), rng);
        const auto base = encode(f, w);
        rng.shuffle(f);
        if (encode(f, w) != base) ++perm_bad;
        EncoderWeights tight = w;
        tight.config.max_people = f.size();
        if (encode(f, tight) != base) ++pad_bad;

        const Scene s = oracle::random_scene(static_cast<std::size_t>(rng.integer(1, 12)), RoomSpec{}, rng);
        for (FlipAxis a : {FlipAxis::horizontal, FlipAxis::vertical, FlipAxis::both}) {
            const Scene ff = flip_scene(flip_scene(s, a, RoomSpec{}), a, RoomSpec{});
            for (std::size_t p = 0; p < s.persons.size(); ++p) {
                const double dyaw = std::abs(std::remainder(ff.persons[p].yaw_deg - s.persons[p].yaw_deg, 360.0));
                if (distance(ff.persons[p].position(), s.persons[p].position()) > 1e-12 || dyaw > 1e-9) ++flip_bad;
            }
            if (ff.groups != s.groups) ++flip_bad;
            OSpaceMap m(RoomSpec{});
            for (double& v : m.values()) v = rng.uniform();
            if (flip_map(flip_map(m, a), a) != m) ++flip_bad;
        }
    }
    const ModelWeights model = oracle::small_model(102, {RoomSpec{}, {16, 32}, {32}, 4, 25});
    for (int t = 0; t < 100; ++t) {
        const Scene s = oracle::random_scene(static_cast<std::size_t>(rng.integer(1, 15)), RoomSpec{}, rng);
        const AssignParams params{rng.uniform(0.3, 0.7), 1.0, 1.5, 0.7};
        const auto base = predict_scene(s, model, model.rooms[0], params);
        std::vector<std::size_t> perm(s.persons.size());
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        Scene moved = s;
        for (std::size_t i = 0; i < perm.size(); ++i) moved.persons[i] = s.persons[perm[i]];
        const auto p = predict_scene(moved, model, model.rooms[0], params);
        Partition mapped;
        for (const auto& g : p.groups) {
            Group h;
            for (std::size_t i : g) h.push_back(perm[i]);
            mapped.push_back(h);
        }
        if (p.map != base.map || canonical_partition(mapped) != base.groups) ++order_bad;
    }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "permutation_mismatch=" << perm_bad << " padding_mismatch=" << pad_bad << " flip_mismatch=" << flip_bad
      << " order_mismatch=" << order_bad << fmt(" time=%.2fs (limit 10s)", secs);
    report(1, perm_bad + pad_bad + flip_bad + order_bad == 0 && secs < 10.0, d.str());
}

// ---------------------------------------------------------------------------

void gradients() {
    const auto t0 = Clock::now();
    Rng rng(201);
    double worst = 0.0;
    std::size_t params = 0;
    const int configs = 60;
    for (int c = 0; c < configs; ++c) {
        oracle::SmallModelSpec spec;
        spec.room = {static_cast<int>(rng.integer(2, 4)), static_cast<int>(rng.integer(2, 4)), 0.5};
        spec.encoder.clear();
        for (int l = 0; l < rng.integer(1, 3); ++l) spec.encoder.push_back(static_cast<std::size_t>(rng.integer(2, 7)));
        spec.head.clear();
        for (int l = 0; l < rng.integer(0, 2); ++l) spec.head.push_back(static_cast<std::size_t>(rng.integer(2, 8)));
        spec.room_dim = static_cast<std::size_t>(rng.integer(1, 4));
        const ModelWeights m = oracle::small_model(1000 + static_cast<std::uint64_t>(c), spec);
        std::vector<Example> batch;
        const double mgw = rng.uniform(1.0, 3.0);
        for (int b = 0; b < rng.integer(1, 3); ++b) {
            const Scene s = oracle::random_scene(static_cast<std::size_t>(rng.integer(1, 6)), spec.room, rng);
            batch.push_back(make_example(s, m.rooms[0], m, mgw));
            // perturb targets away from the logistic range edges
            for (double& v : batch.back().target) v = rng.uniform(0.05, 0.95);
        }
        const auto g = oracle::check_model_gradient(m, batch);
        worst = std::max(worst, g.max_rel_error);
        params += g.parameters;
    }
    const double secs = seconds_since(t0);
    report(2, worst < 1e-4 && secs < 60.0,
           "configs=" + std::to_string(configs) + " parameters=" + std::to_string(params) +
               fmt(" max_rel_error=%.3g (limit 1e-4) time=%.2fs (limit 60s)", worst, secs));
}

// ---------------------------------------------------------------------------

void metric() {
    constexpr std::size_t a = 0, b = 1, c = 2, d = 3, e = 4, x = 5;
    std::size_t bad = 0;
    auto expect = [&](bool ok) { bad += ok ? 0 : 1; };
    const Partition gt{{a, b, c}, {d, e}};
    expect(match_scene(Partition{{a, b, d}, {c, e}}, gt, 2.0 / 3.0) == MatchCounts{1, 1, 1});
    expect(match_scene(Partition{{a, b, d}, {c, e}}, gt, 1.0) == MatchCounts{0, 2, 2});
    expect(match_scene(gt, gt, 1.0) == MatchCounts{2, 0, 0});
    expect(match_scene(gt, gt, 2.0 / 3.0) == MatchCounts{2, 0, 0});
    expect(match_scene(Partition{{a}, {b}, {c}, {d}, {e}}, gt, 2.0 / 3.0) == MatchCounts{0, 0, 2});
    expect(group_matches(Group{a, b, x}, Group{a, b, c}, 2.0 / 3.0));
    expect(!group_matches(Group{a, b, x}, Group{a, b, c}, 1.0));
    expect(!group_matches(Group{c, e}, Group{d, e}, 2.0 / 3.0));
    const auto agg = metrics_from_counts({2, 1, 1}, 1.0);
    expect(std::abs(agg.f1 - 2.0 / 3.0) < 1e-15);
    expect(metrics_from_counts({0, 0, 0}, 1.0).f1 == 0.0);
    const std::size_t hand_bad = bad;

    Rng rng(301);
    std::size_t random_bad = 0;
    for (int t = 0; t < 10000; ++t) {
        const std::size_t n = static_cast<std::size_t>(rng.integer(2, 12));
        const Partition g = oracle::random_partition(n, static_cast<std::size_t>(rng.integer(1, 5)), rng);
        const Partition p = oracle::random_partition(n, static_cast<std::size_t>(rng.integer(1, 5)), rng);
        std::set<std::set<std::size_t>> gs, ps;
        for (const auto& blk : conversational_groups(g)) gs.insert({blk.begin(), blk.end()});
        for (const auto& blk : conversational_groups(p)) ps.insert({blk.begin(), blk.end()});
        std::size_t common = 0;
        for (const auto& blk : gs) common += ps.count(blk);
        const MatchCounts m = match_scene(p, g, 1.0);
        if (m.tp != common || m.fp != ps.size() - common || m.fn != gs.size() - common) ++random_bad;
    }
    report(3, hand_bad == 0 && random_bad == 0,
           "hand_failures=" + std::to_string(hand_bad) + " random_mismatch=" + std::to_string(random_bad) + "/10000");
}

// ---------------------------------------------------------------------------

void pca_oracle() {
    Rng rng(401);
    double value_err = 0.0, vector_err = 0.0;
    int cases = 0;
    for (std::size_t n = 1; n <= 8; ++n)
        for (int t = 0; t < 20; ++t) {
            // random symmetric positive semi-definite matrix B^T B with a spread spectrum
            std::vector<double> bm(n * n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) bm[i * n + j] = rng.normal() * std::pow(1.6, static_cast<double>(n - i));
            std::vector<double> a(n * n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    for (std::size_t k = 0; k < n; ++k) a[i * n + j] += bm[k * n + i] * bm[k * n + j];
            const auto ref = oracle::jacobi_eigen(a, n);
            std::vector<std::vector<double>> vecs;
            std::vector<double> vals;
            symmetric_top_eigen(a, n, n, vecs, vals);
            const double scale = std::max(1.0, ref.values[0]);
            for (std::size_t k = 0; k < n; ++k) {
                value_err = std::max(value_err, std::abs(vals[k] - ref.values[k]) / scale);
                vector_err = std::max(vector_err, 1.0 - std::abs(detail::dot(vecs[k], ref.vectors[k])));
            }
            ++cases;

            // the same through the PCA front end on raw samples
            const auto samples = oracle::random_samples(n, 4 * n + 8, rng);
            std::vector<double> mean;
            const auto cov = covariance(samples, mean);
            const auto cref = oracle::jacobi_eigen(cov, n);
            const PcaModel pm = pca_fit(samples, n);
            const double cscale = std::max(1.0, cref.values[0]);
            for (std::size_t k = 0; k < n; ++k) {
                value_err = std::max(value_err, std::abs(pm.explained_variances[k] - cref.values[k]) / cscale);
                vector_err = std::max(vector_err, 1.0 - std::abs(detail::dot(pm.components[k], cref.vectors[k])));
            }
            ++cases;
        }
    report(4, value_err < 1e-8 && vector_err < 1e-8,
           "cases=" + std::to_string(cases) + fmt(" max_eigenvalue_error=%.3g max_vector_error=%.3g (limit 1e-8)", value_err, vector_err));
}

// ---------------------------------------------------------------------------

void short_circuit() {
    SynthConfig cfg;
    cfg.seed = 501;
    cfg.n_scenes = 200;
    cfg.jitter_m = 0.0;
    cfg.jitter_deg = 0.0;
    cfg.min_intergroup_dist_m = 2.0;
    std::vector<Partition> pred, gt;
    for (const auto& g : generate(cfg)) {
        const OSpaceMap truth = scene_target(g.scene, 0.7, {0.5}, cfg.room);
        pred.push_back(groups_from_map(g.scene, truth, {}).groups);
        gt.push_back(g.scene.groups);
    }
    const auto m = evaluate_partitions(pred, gt, kToleranceExact);
    report(5, m.f1 == 1.0,
           "scenes=200 tp=" + std::to_string(m.counts.tp) + " fp=" + std::to_string(m.counts.fp) +
               " fn=" + std::to_string(m.counts.fn) + fmt(" f1@T=1=%.4f (required 1.0)", m.f1));
}

// ---------------------------------------------------------------------------

ModelConfig bench_config() {
    ModelConfig cfg;
    cfg.encoder.layer_widths = {64, 256};
    cfg.head.hidden_widths = {256};
    cfg.head.room_dim = 8;
    return cfg;
}

struct Trained {
    ModelWeights model;
    std::vector<RoomFeature> rooms;
};

/// Trains on flip-augmented train scenes; validation scenes pick the best epoch.
Trained fit(const std::vector<Scene>& train_scenes, const std::vector<Scene>& val_scenes, const ModelConfig& cfg,
            const TrainConfig& tc, std::size_t workers = worker_count()) {
    ModelWeights m = init_model(cfg, tc.seed);
    m.norm = fit_norm_stats(train_scenes);
    const std::vector<RoomFeature> rooms = m.rooms;
    const auto aug = augment(train_scenes, cfg.room);
    std::vector<Example> tr, va;
    tr.reserve(aug.size());
    for (std::size_t i = 0; i < aug.size(); ++i) tr.push_back(make_example(aug[i], rooms[i % rooms.size()], m, tc.multi_group_weight));
    for (const auto& s : val_scenes) va.push_back(make_example(s, rooms[0], m, tc.multi_group_weight));
    TrainResult r = train(tr, va, tc, m, workers);
    r.model.rooms = rooms;
    return {std::move(r.model), rooms};
}

void learning_benchmark() {
    const auto t0 = Clock::now();
    SynthConfig sc;
    sc.seed = 601;
    sc.n_scenes = 1000;
    sc.jitter_m = 0.05;
    sc.jitter_deg = 5.0;
    sc.groups_per_scene = {1, 3};
    const auto all = scenes_of(generate(sc));
    const std::vector<Scene> tr(all.begin(), all.begin() + 800), va(all.begin() + 800, all.begin() + 900),
        te(all.begin() + 900, all.end());

    TrainConfig tc;
    tc.epochs = 40;
    tc.batch_size = 16;
    tc.learning_rate = 1e-3;
    tc.seed = 602;
    const Trained t = fit(tr, va, bench_config(), tc);

    double f1[2];
    std::string detail;
    const double tols[2] = {kToleranceLoose, kToleranceExact};
    for (int k = 0; k < 2; ++k) {
        const TuneResult tuned = grid_search(t.model, va, t.rooms, Grid{}, tols[k]);
        std::vector<Partition> pred, gt;
        for (const auto& s : te) {
            pred.push_back(predict_scene(s, t.model, t.rooms[0], tuned.best).groups);
            gt.push_back(s.groups);
        }
        f1[k] = evaluate_partitions(pred, gt, tols[k]).f1;
    }
    const double secs = seconds_since(t0);
    report(6, f1[0] >= 0.90 && f1[1] >= 0.75 && secs < 600.0,
           fmt("test_f1@T=2/3=%.4f (>=0.90) test_f1@T=1=%.4f (>=0.75) time=%.1fs (limit 600s)", f1[0], f1[1], secs));
}

// ---------------------------------------------------------------------------

std::vector<Scene> synth_scenes(std::uint64_t seed, std::size_t n, IntRange groups) {
    SynthConfig sc;
    sc.seed = seed;
    sc.n_scenes = n;
    sc.jitter_m = 0.05;
    sc.jitter_deg = 5.0;
    sc.groups_per_scene = groups;
    return scenes_of(generate(sc));
}

/// Deterministic interleave of two scene lists by a seeded shuffle.
std::vector<Scene> mix(std::vector<Scene> a, const std::vector<Scene>& b, std::uint64_t seed) {
    a.insert(a.end(), b.begin(), b.end());
    Rng rng(seed);
    rng.shuffle(a);
    return a;
}

void imbalance() {
    const auto t0 = Clock::now();
    const auto train_set = mix(synth_scenes(701, 600, {1, 1}), synth_scenes(702, 200, {2, 3}), 703);
    const auto val_set = mix(synth_scenes(704, 20, {1, 1}), synth_scenes(705, 80, {2, 3}), 706);
    const auto test_set = mix(synth_scenes(707, 40, {1, 1}), synth_scenes(708, 160, {2, 3}), 709);

    double multi_f1[2];
    for (int run = 0; run < 2; ++run) {
        TrainConfig tc;
        tc.epochs = 20;
        tc.batch_size = 16;
        tc.learning_rate = 1e-3;
        tc.seed = 710;
        tc.multi_group_weight = run == 0 ? 1.0 : 3.0;
        const Trained t = fit(train_set, val_set, bench_config(), tc);
        const TuneResult tuned = grid_search(t.model, val_set, t.rooms, Grid{}, kToleranceLoose);
        std::vector<Partition> pred, gt;
        for (const auto& s : test_set) {
            if (conversational_groups(s.groups).size() < 2) continue;
            pred.push_back(predict_scene(s, t.model, t.rooms[0], tuned.best).groups);
            gt.push_back(s.groups);
        }
        multi_f1[run] = evaluate_partitions(pred, gt, kToleranceLoose).f1;
    }
    report(7, multi_f1[1] >= multi_f1[0],
           fmt("multi_group_f1@T=2/3 weighted(3)=%.4f unweighted=%.4f time=%.1fs", multi_f1[1], multi_f1[0],
               seconds_since(t0)));
}

// ---------------------------------------------------------------------------

std::string checkpoint_bytes(const ModelWeights& m) {
    std::ostringstream out(std::ios::binary);
    save_checkpoint(out, m);
    return out.str();
}

std::string tune_table(const TuneResult& r) {
    std::ostringstream out;
    out << std::setprecision(17) << "threshold,separation,assign_dist,stride,tp,fp,fn,f1\n";
    for (const auto& row : r.table)
        out << row.params.nms_threshold << ',' << row.params.min_group_separation_m << ',' << row.params.max_assign_dist_m
            << ',' << row.params.stride_m << ',' << row.metrics.counts.tp << ',' << row.metrics.counts.fp << ','
            << row.metrics.counts.fn << ',' << row.metrics.f1 << '\n';
    return out.str();
}

void determinism() {
    const auto scenes = synth_scenes(801, 120, {1, 3});
    const std::vector<Scene> tr(scenes.begin(), scenes.begin() + 96), va(scenes.begin() + 96, scenes.end());
    ModelConfig cfg;
    cfg.encoder.layer_widths = {16, 32};
    cfg.head.hidden_widths = {32};
    cfg.head.room_dim = 4;
    TrainConfig tc;
    tc.epochs = 3;
    tc.seed = 802;
    tc.multi_group_weight = 2.0;
    std::vector<std::string> ckpts, tables;
    for (std::size_t workers : {std::size_t{1}, std::size_t{1}, std::size_t{4}}) {
        const Trained t = fit(tr, va, cfg, tc, workers);
        ckpts.push_back(checkpoint_bytes(t.model));
        tables.push_back(tune_table(grid_search(t.model, va, t.rooms, Grid{}, kToleranceLoose)));
    }
    const bool same_ckpt = ckpts[0] == ckpts[1] && ckpts[0] == ckpts[2];
    const bool same_table = tables[0] == tables[1] && tables[0] == tables[2];
    report(8, same_ckpt && same_table,
           std::string("checkpoints_identical=") + (same_ckpt ? "yes" : "no") + " tables_identical=" +
               (same_table ? "yes" : "no") + " checkpoint_bytes=" + std::to_string(ckpts[0].size()) +
               " runs=3 (workers 1,1,4)");
}

}  // namespace

int main() {
    try {
        invariance();
        gradients();
        metric();
        pca_oracle();
        short_circuit();
        learning_benchmark();
        imbalance();
        determinism();
    } catch (const std::exception& e) {
        std::printf("acceptance aborted: FAIL %s\n", e.what());
        return 1;
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
