// ospace command line: ingest, synth, train, tune, predict, eval, render.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ospace/ospace.hpp"

namespace ospace::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

class UsageError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::ifstream open_in(const std::string& path, bool binary = false) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw UsageError("cannot open '" + path + "'");
    return in;
}

inline std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw UsageError("cannot write '" + path + "'");
    return out;
}

/// Accepts decimals and fractions such as "2/3".
inline double parse_fraction(const std::string& s) {
    const auto slash = s.find('/');
    try {
        std::size_t used = 0;
        if (slash == std::string::npos) {
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        }
        const double num = std::stod(s.substr(0, slash));
        const double den = std::stod(s.substr(slash + 1));
        if (den == 0.0) throw std::invalid_argument(s);
        return num / den;
    } catch (const std::exception&) {
        throw UsageError("not a number: '" + s + "'");
    }
}

inline std::string tolerance_label(double T) {
    if (std::abs(T - 2.0 / 3.0) < 1e-12) return "2/3";
    std::ostringstream s;
    s << T;
    return s.str();
}

inline std::vector<Scene> read_scenes(const std::string& path, const RoomSpec& spec, std::size_t max_people) {
    auto in = open_in(path);
    return parse_scenes(in, spec, max_people);
}

inline std::vector<Scene> pick_split(const std::vector<Scene>& all, const std::string& which, const SplitRatios& r) {
    if (which == "all") return all;
    Split s = sequential_split(all, r);
    if (which == "train") return s.train;
    if (which == "val") return s.val;
    if (which == "test") return s.test;
    throw UsageError("unknown split '" + which + "' (train, val, test, all)");
}

inline nlohmann::json params_json(const AssignParams& p) {
    return {{"nms_threshold", p.nms_threshold},
            {"min_group_separation_m", p.min_group_separation_m},
            {"max_assign_dist_m", p.max_assign_dist_m},
            {"stride_m", p.stride_m}};
}

inline AssignParams params_from_json(const nlohmann::json& j, AssignParams p) {
    p.nms_threshold = j.value("nms_threshold", p.nms_threshold);
    p.min_group_separation_m = j.value("min_group_separation_m", p.min_group_separation_m);
    p.max_assign_dist_m = j.value("max_assign_dist_m", p.max_assign_dist_m);
    p.stride_m = j.value("stride_m", p.stride_m);
    return p;
}

inline ModelWeights read_model(const std::string& path) {
    auto in = open_in(path, true);
    return load_checkpoint(in);
}

struct RoomFlags {
    int rows = 10;
    int cols = 12;
    double cell = 0.5;

    RoomSpec spec() const {
        RoomSpec s{rows, cols, cell};
        try {
            s.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        return s;
    }

    void add_to(CLI::App* app) {
        app->add_option("--rows", rows, "Grid rows")->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--cols", cols, "Grid columns")->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--cell", cell, "Cell size in meters")->check(CLI::PositiveNumber)->capture_default_str();
    }
};

struct AssignFlags {
    std::string params_file;
    std::optional<double> threshold, separation, assign_dist, stride;

    void add_to(CLI::App* app) {
        app->add_option("--params", params_file, "Assignment parameters JSON (as written by tune)")
            ->check(CLI::ExistingFile);
        app->add_option("--threshold", threshold, "NMS threshold")->check(CLI::Range(0.0, 1.0));
        app->add_option("--separation", separation, "Minimum separation between detections (m)")
            ->check(CLI::NonNegativeNumber);
        app->add_option("--assign-dist", assign_dist, "Maximum proposal-to-detection distance (m)")
            ->check(CLI::NonNegativeNumber);
        app->add_option("--stride", stride, "Proposal stride (m)")->check(CLI::NonNegativeNumber);
    }

    AssignParams resolve(double model_stride) const {
        AssignParams p;
        p.stride_m = model_stride;
        if (!params_file.empty()) {
            auto in = open_in(params_file);
            try {
                p = params_from_json(nlohmann::json::parse(in), p);
            } catch (const nlohmann::json::exception& e) {
                throw DataError(std::string("params file: ") + e.what());
            }
        }
        if (threshold) p.nms_threshold = *threshold;
        if (separation) p.min_group_separation_m = *separation;
        if (assign_dist) p.max_assign_dist_m = *assign_dist;
        if (stride) p.stride_m = *stride;
        p.validate();
        return p;
    }
};

inline std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(parse_fraction(tok));
    if (out.empty()) throw UsageError("empty list '" + s + "'");
    return out;
}

inline std::vector<std::size_t> parse_widths(const std::string& s) {
    std::vector<std::size_t> out;
    for (double v : parse_list(s)) {
        if (!(v >= 1.0) || v != std::floor(v)) throw UsageError("widths must be positive integers: '" + s + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------

struct Context {
    std::ostream& out;
    std::ostream& err;
};

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    using namespace detail;
    CLI::App app{"Conversational group detection from o-space heatmaps"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    // ingest
    RoomFlags ingest_room;
    std::string ingest_in, ingest_out, ingest_augment = "none";
    std::size_t ingest_max_people = kDefaultMaxPeople;
    SplitRatios ingest_ratios;
    auto* ingest = app.add_subcommand("ingest", "Validate a scene file and print a summary; optionally write it back augmented");
    ingest->add_option("-i,--input", ingest_in, "Scene JSON Lines file")->required()->check(CLI::ExistingFile);
    ingest->add_option("-o,--output", ingest_out, "Write the (augmented) scenes here");
    ingest->add_option("--augment", ingest_augment, "Flip augmentation: none, train, all")
        ->check(CLI::IsMember({"none", "train", "all"}))
        ->capture_default_str();
    ingest->add_option("--max-people", ingest_max_people, "Person capacity per scene")->check(CLI::PositiveNumber);
    ingest->add_option("--train-ratio", ingest_ratios.train, "Train fraction")->capture_default_str();
    ingest->add_option("--val-ratio", ingest_ratios.val, "Validation fraction")->capture_default_str();
    ingest->add_option("--test-ratio", ingest_ratios.test, "Test fraction")->capture_default_str();
    ingest_room.add_to(ingest);

    // synth
    SynthConfig synth_cfg;
    std::string synth_out, synth_centers;
    auto* synth = app.add_subcommand("synth", "Generate synthetic scenes with known o-space centers");
    synth->add_option("--seed", synth_cfg.seed, "Random seed")->capture_default_str();
    synth->add_option("--scenes", synth_cfg.n_scenes, "Number of scenes")->capture_default_str();
    synth->add_option("-o,--output", synth_out, "Scene JSON Lines output")->required();
    synth->add_option("--centers", synth_centers, "Sidecar file of true centers (default: <output>.centers.jsonl)");
    synth->add_option("--groups-min", synth_cfg.groups_per_scene.min, "Fewest groups per scene")->capture_default_str();
    synth->add_option("--groups-max", synth_cfg.groups_per_scene.max, "Most groups per scene")->capture_default_str();
    synth->add_option("--size-min", synth_cfg.group_size.min, "Smallest group")->capture_default_str();
    synth->add_option("--size-max", synth_cfg.group_size.max, "Largest group")->capture_default_str();
    synth->add_option("--singletons-min", synth_cfg.singleton_count.min, "Fewest lone people")->capture_default_str();
    synth->add_option("--singletons-max", synth_cfg.singleton_count.max, "Most lone people")->capture_default_str();
    synth->add_option("--radius", synth_cfg.circle_radius_m, "Group circle radius (m)")->capture_default_str();
    synth->add_option("--min-dist", synth_cfg.min_intergroup_dist_m, "Minimum distance between groups (m)")
        ->capture_default_str();
    synth->add_option("--jitter-m", synth_cfg.jitter_m, "Position noise std (m)")->capture_default_str();
    synth->add_option("--jitter-deg", synth_cfg.jitter_deg, "Yaw noise std (deg)")->capture_default_str();
    RoomFlags synth_room;
    synth_room.add_to(synth);

    // train
    RoomFlags train_room;
    std::string train_in, train_out, train_layout, train_room_features, train_trace, train_augment = "train";
    std::string train_enc = "64,256,1024", train_head = "1024", train_opt = "adam";
    TrainConfig train_cfg;
    std::size_t room_dim = 1024, train_max_people = kDefaultMaxPeople;
    double train_sigma = 0.5, train_stride = kDefaultStride;
    SplitRatios train_ratios;
    auto* trn = app.add_subcommand("train", "Train a model on the train split; the val split picks the best epoch");
    trn->add_option("-i,--input", train_in, "Scene JSON Lines file (split sequentially)")->required()->check(CLI::ExistingFile);
    trn->add_option("-o,--output", train_out, "Checkpoint output")->required();
    trn->add_option("--epochs", train_cfg.epochs, "Epochs")->capture_default_str();
    trn->add_option("--batch", train_cfg.batch_size, "Minibatch size")->check(CLI::PositiveNumber)->capture_default_str();
    trn->add_option("--lr", train_cfg.learning_rate, "Learning rate")->check(CLI::NonNegativeNumber)->capture_default_str();
    trn->add_option("--optimizer", train_opt, "sgd or adam")->check(CLI::IsMember({"sgd", "adam"}))->capture_default_str();
    trn->add_option("--multi-group-weight", train_cfg.multi_group_weight, "Loss weight of scenes with >= 2 groups")
        ->check(CLI::Range(1.0, 1e6))
        ->capture_default_str();
    trn->add_option("--seed", train_cfg.seed, "Seed for initialisation and shuffling")->capture_default_str();
    trn->add_option("--sigma", train_sigma, "Target Gaussian std (m)")->check(CLI::PositiveNumber)->capture_default_str();
    trn->add_option("--stride", train_stride, "Ground-truth proposal stride (m)")->check(CLI::NonNegativeNumber)->capture_default_str();
    trn->add_option("--encoder-widths", train_enc, "Set-encoder layer widths")->capture_default_str();
    trn->add_option("--head-widths", train_head, "Hidden widths of the head (empty list not allowed; use 'none')")
        ->capture_default_str();
    trn->add_option("--room-dim", room_dim, "Room feature width")->check(CLI::PositiveNumber)->capture_default_str();
    trn->add_option("--max-people", train_max_people, "Person capacity")->check(CLI::PositiveNumber)->capture_default_str();
    trn->add_option("--augment", train_augment, "Flip augmentation: none, train, all")
        ->check(CLI::IsMember({"none", "train", "all"}))
        ->capture_default_str();
    auto* layout_opt = trn->add_option("--layout", train_layout, "Room layout JSON")->check(CLI::ExistingFile);
    trn->add_option("--room-features", train_room_features, "Precomputed room feature file")
        ->check(CLI::ExistingFile)
        ->excludes(layout_opt);
    trn->add_option("--trace", train_trace, "Per-epoch loss CSV");
    trn->add_option("--train-ratio", train_ratios.train, "Train fraction")->capture_default_str();
    trn->add_option("--val-ratio", train_ratios.val, "Validation fraction")->capture_default_str();
    trn->add_option("--test-ratio", train_ratios.test, "Test fraction")->capture_default_str();
    train_room.add_to(trn);

    // tune
    std::string tune_model, tune_in, tune_split = "val", tune_T = "2/3", tune_table, tune_params;
    std::string g_thr = "0.3,0.4,0.5,0.6,0.7,0.8", g_sep = "0.5,1.0,1.5", g_ad = "0.5,1.0,1.5,2.0", g_st = "0.4,0.7,1.0";
    SplitRatios tune_ratios;
    auto* tune = app.add_subcommand("tune", "Grid-search assignment parameters on a split");
    tune->add_option("--model", tune_model, "Checkpoint")->required()->check(CLI::ExistingFile);
    tune->add_option("-i,--input", tune_in, "Scene JSON Lines file")->required()->check(CLI::ExistingFile);
    tune->add_option("--split", tune_split, "train, val, test or all")->capture_default_str();
    tune->add_option("-T,--tolerance", tune_T, "Match tolerance (e.g. 2/3 or 1)")->capture_default_str();
    tune->add_option("--thresholds", g_thr, "NMS threshold candidates")->capture_default_str();
    tune->add_option("--separations", g_sep, "Separation candidates (m)")->capture_default_str();
    tune->add_option("--assign-dists", g_ad, "Assignment distance candidates (m)")->capture_default_str();
    tune->add_option("--strides", g_st, "Stride candidates (m)")->capture_default_str();
    tune->add_option("-o,--table", tune_table, "Full result table CSV");
    tune->add_option("--params", tune_params, "Chosen parameters JSON");
    tune->add_option("--train-ratio", tune_ratios.train, "Train fraction")->capture_default_str();
    tune->add_option("--val-ratio", tune_ratios.val, "Validation fraction")->capture_default_str();
    tune->add_option("--test-ratio", tune_ratios.test, "Test fraction")->capture_default_str();

    // predict
    std::string pred_model, pred_in, pred_out, pred_split = "all", pred_pgm;
    AssignFlags pred_assign;
    SplitRatios pred_ratios;
    auto* pred = app.add_subcommand("predict", "Predict heatmaps, detections and groups per scene");
    pred->add_option("--model", pred_model, "Checkpoint")->required()->check(CLI::ExistingFile);
    pred->add_option("-i,--input", pred_in, "Scene JSON Lines file")->required()->check(CLI::ExistingFile);
    pred->add_option("-o,--output", pred_out, "Predictions JSON Lines (default: stdout)");
    pred->add_option("--split", pred_split, "train, val, test or all")->capture_default_str();
    pred->add_option("--pgm-dir", pred_pgm, "Directory for per-scene heatmap PGMs");
    pred->add_option("--train-ratio", pred_ratios.train, "Train fraction")->capture_default_str();
    pred->add_option("--val-ratio", pred_ratios.val, "Validation fraction")->capture_default_str();
    pred->add_option("--test-ratio", pred_ratios.test, "Test fraction")->capture_default_str();
    pred_assign.add_to(pred);

    // eval
    std::string eval_pred, eval_truth, eval_csv, eval_T = "2/3,1";
    bool eval_no_split = false;
    std::size_t eval_max_people = kDefaultMaxPeople;
    SplitRatios eval_ratios;
    RoomFlags eval_room;
    auto* ev = app.add_subcommand("eval", "Precision, recall and F1 of predicted groups per split");
    ev->add_option("--pred", eval_pred, "Predictions JSON Lines (from predict, or any file with frame_id + groups)")
        ->required()
        ->check(CLI::ExistingFile);
    ev->add_option("--truth", eval_truth, "Ground-truth scene file")->required()->check(CLI::ExistingFile);
    ev->add_option("-T,--tolerances", eval_T, "Comma-separated tolerances")->capture_default_str();
    ev->add_option("-o,--csv", eval_csv, "CSV output (split,T,tp,fp,fn,precision,recall,f1)");
    ev->add_flag("--no-split", eval_no_split, "Report only the whole file");
    ev->add_option("--max-people", eval_max_people, "Person capacity")->check(CLI::PositiveNumber);
    ev->add_option("--train-ratio", eval_ratios.train, "Train fraction")->capture_default_str();
    ev->add_option("--val-ratio", eval_ratios.val, "Validation fraction")->capture_default_str();
    ev->add_option("--test-ratio", eval_ratios.test, "Test fraction")->capture_default_str();
    eval_room.add_to(ev);

    // render
    std::string render_in, render_model, render_pgm, render_csv, render_frame;
    std::size_t render_index = 0;
    double render_sigma = 0.5, render_stride = kDefaultStride;
    RoomFlags render_room;
    auto* rnd = app.add_subcommand("render", "Render a ground-truth (or predicted) heatmap as PGM/CSV");
    rnd->add_option("-i,--input", render_in, "Scene JSON Lines file")->required()->check(CLI::ExistingFile);
    rnd->add_option("--index", render_index, "Scene index (0-based)")->capture_default_str();
    rnd->add_option("--frame", render_frame, "Scene frame_id (overrides --index)");
    rnd->add_option("--model", render_model, "Render this model's prediction instead of the ground truth")
        ->check(CLI::ExistingFile);
    rnd->add_option("--sigma", render_sigma, "Gaussian std (m)")->check(CLI::PositiveNumber)->capture_default_str();
    rnd->add_option("--stride", render_stride, "Proposal stride (m)")->check(CLI::NonNegativeNumber)->capture_default_str();
    rnd->add_option("--pgm", render_pgm, "PGM output (default: stdout)");
    rnd->add_option("--csv", render_csv, "CSV output");
    render_room.add_to(rnd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return kOk;
        }
        err << "error: " << e.what() << "\n" << "run with --help for usage\n";
        return kUsage;
    }

    try {
        // -------------------------------------------------------------- ingest
        if (*ingest) {
            const RoomSpec spec = ingest_room.spec();
            auto scenes = read_scenes(ingest_in, spec, ingest_max_people);
            Split split = sequential_split(scenes, ingest_ratios);
            std::size_t persons = 0, groups = 0, multi = 0;
            for (const auto& s : scenes) {
                persons += s.persons.size();
                const auto g = conversational_groups(s.groups).size();
                groups += g;
                multi += g >= 2 ? 1 : 0;
            }
            nlohmann::json summary{{"scenes", scenes.size()},
                                   {"persons", persons},
                                   {"groups", groups},
                                   {"multi_group_scenes", multi},
                                   {"train", split.train.size()},
                                   {"val", split.val.size()},
                                   {"test", split.test.size()}};
            if (!ingest_out.empty()) {
                std::vector<Scene> written;
                auto add = [&](const std::vector<Scene>& part, bool aug) {
                    if (!aug) {
                        written.insert(written.end(), part.begin(), part.end());
                        return;
                    }
                    auto a = augment(part, spec);
                    written.insert(written.end(), a.begin(), a.end());
                };
                add(split.train, ingest_augment != "none");
                add(split.val, ingest_augment == "all");
                add(split.test, ingest_augment == "all");
                auto o = open_out(ingest_out);
                write_scenes(o, written);
                summary["written"] = written.size();
            }
            out << summary.dump() << '\n';
            return kOk;
        }

        // --------------------------------------------------------------- synth
        if (*synth) {
            synth_cfg.room = synth_room.spec();
            try {
                synth_cfg.validate();
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            const auto generated = generate(synth_cfg);
            auto o = open_out(synth_out);
            write_scenes(o, scenes_of(generated));
            auto c = open_out(synth_centers.empty() ? synth_out + ".centers.jsonl" : synth_centers);
            write_centers(c, generated);
            out << nlohmann::json{{"scenes", generated.size()}, {"output", synth_out}}.dump() << '\n';
            return kOk;
        }

        // --------------------------------------------------------------- train
        if (*trn) {
            ModelConfig mc;
            mc.room = train_room.spec();
            mc.encoder.max_people = train_max_people;
            mc.encoder.layer_widths = parse_widths(train_enc);
            mc.head.hidden_widths = train_head == "none" ? std::vector<std::size_t>{} : parse_widths(train_head);
            mc.head.room_dim = room_dim;
            mc.gaussian.sigma_m = train_sigma;
            mc.stride_m = train_stride;
            train_cfg.optimizer = train_opt == "sgd" ? Optimizer::sgd : Optimizer::adam;
            try {
                train_cfg.validate();
                train_ratios.validate();
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }

            auto scenes = read_scenes(train_in, mc.room, train_max_people);
            Split split = sequential_split(scenes, train_ratios);
            if (split.train.empty()) throw DataError("training split is empty");

            const bool aug_train = train_augment != "none";
            const bool aug_eval = train_augment == "all";
            std::vector<Scene> tr = aug_train ? augment(split.train, mc.room) : split.train;
            std::vector<Scene> va = aug_eval ? augment(split.val, mc.room) : split.val;

            ModelWeights model = init_model(mc, train_cfg.seed);
            model.norm = fit_norm_stats(tr);
            std::vector<RoomFeature> rooms;
            if (!train_layout.empty()) {
                auto in = open_in(train_layout);
                const LayoutMap layout = parse_layout(in);
                if (!(layout.spec == mc.room)) throw DataError("layout grid does not match the room spec");
                const auto variants = room_features_for_layout(layout, room_dim);
                rooms.assign(variants.begin(), variants.end());
            } else if (!train_room_features.empty()) {
                auto in = open_in(train_room_features);
                rooms.push_back(load_precomputed(in, room_dim));
            } else {
                rooms.push_back({std::vector<double>(room_dim, 0.0)});
            }
            model.rooms = rooms;

            auto room_of = [&](std::size_t i, bool augmented) -> const RoomFeature& {
                return rooms[augmented ? i % kAugmentOrder.size() % rooms.size() : 0];
            };
            std::vector<Example> tex, vex;
            for (std::size_t i = 0; i < tr.size(); ++i)
                tex.push_back(make_example(tr[i], room_of(i, aug_train), model, train_cfg.multi_group_weight));
            for (std::size_t i = 0; i < va.size(); ++i)
                vex.push_back(make_example(va[i], room_of(i, aug_eval), model, train_cfg.multi_group_weight));

            TrainResult result = train(tex, vex, train_cfg, model);
            auto o = open_out(train_out, true);
            save_checkpoint(o, result.model);
            if (!train_trace.empty()) {
                auto t = open_out(train_trace);
                t << "epoch,train_loss,val_loss\n" << std::setprecision(17);
                for (const auto& e : result.trace) t << e.epoch << ',' << e.train_loss << ',' << e.val_loss << '\n';
            }
            out << nlohmann::json{{"train_examples", tex.size()},
                                  {"val_examples", vex.size()},
                                  {"epochs", train_cfg.epochs},
                                  {"best_epoch", result.best_epoch},
                                  {"final_train_loss", result.trace.empty() ? 0.0 : result.trace.back().train_loss}}
                       .dump()
                << '\n';
            return kOk;
        }

        // ---------------------------------------------------------------- tune
        if (*tune) {
            const ModelWeights model = read_model(tune_model);
            const double T = parse_fraction(tune_T);
            check_tolerance(T);
            Grid grid{parse_list(g_thr), parse_list(g_sep), parse_list(g_ad), parse_list(g_st)};
            try {
                grid.validate();
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            const auto all = read_scenes(tune_in, model.config.room, model.config.encoder.max_people);
            const auto scenes = pick_split(all, tune_split, tune_ratios);
            if (scenes.empty()) throw DataError("split '" + tune_split + "' is empty");
            const std::vector<RoomFeature> rooms{model.room_for_variant(0)};
            const TuneResult r = grid_search(model, scenes, rooms, grid, T);
            if (!tune_table.empty()) {
                auto t = open_out(tune_table);
                t << "nms_threshold,min_group_separation_m,max_assign_dist_m,stride_m,tp,fp,fn,precision,recall,f1\n"
                  << std::setprecision(17);
                for (const auto& row : r.table)
                    t << row.params.nms_threshold << ',' << row.params.min_group_separation_m << ','
                      << row.params.max_assign_dist_m << ',' << row.params.stride_m << ',' << row.metrics.counts.tp << ','
                      << row.metrics.counts.fp << ',' << row.metrics.counts.fn << ',' << row.metrics.precision << ','
                      << row.metrics.recall << ',' << row.metrics.f1 << '\n';
            }
            nlohmann::json chosen = params_json(r.best);
            if (!tune_params.empty()) {
                auto p = open_out(tune_params);
                p << chosen.dump(2) << '\n';
            }
            out << nlohmann::json{{"best", chosen}, {"f1", r.best_f1}, {"tolerance", T}, {"scenes", scenes.size()}}.dump()
                << '\n';
            return kOk;
        }

        // ------------------------------------------------------------- predict
        if (*pred) {
            const ModelWeights model = read_model(pred_model);
            const AssignParams params = pred_assign.resolve(model.config.stride_m);
            const auto all = read_scenes(pred_in, model.config.room, model.config.encoder.max_people);
            const auto scenes = pick_split(all, pred_split, pred_ratios);
            if (!pred_pgm.empty()) std::filesystem::create_directories(pred_pgm);
            std::vector<ScenePrediction> preds(scenes.size());
            parallel_for(scenes.size(), [&](std::size_t i) {
                preds[i] = predict_scene(scenes[i], model, model.room_for_variant(0), params);
            });
            std::ofstream file;
            if (!pred_out.empty()) file = open_out(pred_out);
            std::ostream& o = pred_out.empty() ? out : file;
            for (std::size_t i = 0; i < scenes.size(); ++i) {
                nlohmann::json dets = nlohmann::json::array();
                for (const auto& d : preds[i].detections)
                    dets.push_back({{"x", d.center.x}, {"y", d.center.y}, {"score", d.score}});
                o << nlohmann::json{{"frame_id", scenes[i].frame_id}, {"detections", std::move(dets)}, {"groups", preds[i].groups}}
                         .dump()
                  << '\n';
                if (!pred_pgm.empty()) {
                    std::string name = scenes[i].frame_id;
                    for (char& ch : name)
                        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
                    auto p = open_out((std::filesystem::path(pred_pgm) / (std::to_string(i) + "_" + name + ".pgm")).string());
                    write_pgm(p, preds[i].map);
                }
            }
            return kOk;
        }

        // ---------------------------------------------------------------- eval
        if (*ev) {
            std::vector<double> tolerances = parse_list(eval_T);
            for (double T : tolerances)
                if (!(T > 0.0 && T <= 1.0)) throw UsageError("tolerances must lie in (0, 1]");
            const RoomSpec spec = eval_room.spec();
            const auto truth = read_scenes(eval_truth, spec, eval_max_people);
            std::map<std::string, Partition> predicted;
            {
                auto in = open_in(eval_pred);
                std::string line;
                std::size_t line_no = 0;
                while (std::getline(in, line)) {
                    ++line_no;
                    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                    try {
                        const auto j = nlohmann::json::parse(line);
                        predicted[j.at("frame_id").get<std::string>()] = j.at("groups").get<Partition>();
                    } catch (const nlohmann::json::exception& e) {
                        throw DataError("predictions line " + std::to_string(line_no) + ": " + e.what());
                    }
                }
            }
            std::map<std::string, std::size_t> truth_index;
            for (std::size_t i = 0; i < truth.size(); ++i) truth_index[truth[i].frame_id] = i;
            for (const auto& [id, _] : predicted)
                if (!truth_index.count(id)) throw DataError("prediction for unknown frame '" + id + "'");

            std::vector<std::pair<std::string, std::vector<Scene>>> parts;
            if (eval_no_split) {
                parts.push_back({"all", truth});
            } else {
                Split s = sequential_split(truth, eval_ratios);
                parts = {{"train", s.train}, {"val", s.val}, {"test", s.test}, {"all", truth}};
            }

            std::ofstream csv;
            if (!eval_csv.empty()) {
                csv = open_out(eval_csv);
                csv << "split,T,tp,fp,fn,precision,recall,f1\n" << std::setprecision(17);
            }
            out << std::left << std::setw(6) << "split" << std::setw(6) << "T" << std::setw(6) << "tp" << std::setw(6)
                << "fp" << std::setw(6) << "fn" << std::setw(10) << "precision" << std::setw(10) << "recall" << "f1\n";
            for (const auto& [name, scenes] : parts) {
                std::vector<Partition> p, g;
                for (const auto& s : scenes) {
                    auto it = predicted.find(s.frame_id);
                    if (it == predicted.end()) continue;
                    p.push_back(it->second);
                    g.push_back(s.groups);
                }
                if (g.empty()) continue;
                for (double T : tolerances) {
                    const GroupMetrics m = evaluate_partitions(p, g, T);
                    out << std::left << std::setw(6) << name << std::setw(6) << tolerance_label(T) << std::setw(6)
                        << m.counts.tp << std::setw(6) << m.counts.fp << std::setw(6) << m.counts.fn << std::fixed
                        << std::setprecision(4) << std::setw(10) << m.precision << std::setw(10) << m.recall << m.f1
                        << std::defaultfloat << '\n';
                    if (csv.is_open())
                        csv << name << ',' << T << ',' << m.counts.tp << ',' << m.counts.fp << ',' << m.counts.fn << ','
                            << m.precision << ',' << m.recall << ',' << m.f1 << '\n';
                }
            }
            return kOk;
        }

        // -------------------------------------------------------------- render
        if (*rnd) {
            std::optional<ModelWeights> model;
            RoomSpec spec = render_room.spec();
            std::size_t max_people = kDefaultMaxPeople;
            if (!render_model.empty()) {
                model = read_model(render_model);
                spec = model->config.room;
                max_people = model->config.encoder.max_people;
            }
            const auto scenes = read_scenes(render_in, spec, max_people);
            std::size_t idx = render_index;
            if (!render_frame.empty()) {
                auto it = std::find_if(scenes.begin(), scenes.end(), [&](const Scene& s) { return s.frame_id == render_frame; });
                if (it == scenes.end()) throw DataError("no scene with frame_id '" + render_frame + "'");
                idx = static_cast<std::size_t>(it - scenes.begin());
            }
            if (idx >= scenes.size())
                throw DataError("scene index " + std::to_string(idx) + " out of range (" + std::to_string(scenes.size()) +
                                " scenes)");
            const OSpaceMap map = model ? predict_map(scenes[idx], model->room_for_variant(0), *model)
                                        : scene_target(scenes[idx], render_stride, GaussianParams{render_sigma}, spec);
            if (render_pgm.empty()) {
                write_pgm(out, map);
            } else {
                auto p = open_out(render_pgm);
                write_pgm(p, map);
            }
            if (!render_csv.empty()) {
                auto c = open_out(render_csv);
                write_csv(c, map);
            }
            return kOk;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return kNumeric;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::invalid_argument& e) {
        err << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::out_of_range& e) {
        err << "data error: " << e.what() << '\n';
        return kData;
    }
    return kUsage;
}

}  // namespace ospace::cli
