/**
 * @file network.hpp
 * @brief Fully connected head over [room features, people code], weighted
 *        MSE loss, exact gradients, and the training loop.
 *
 * The head concatenates the room vector (frozen input) with the set
 * encoder's output, applies rectified hidden layers and a logistic output
 * layer with one unit per grid cell. Gradients cover the head and the set
 * encoder jointly.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ospace/dataset.hpp"
#include "ospace/dense.hpp"
#include "ospace/groundtruth.hpp"
#include "ospace/parallel.hpp"
#include "ospace/random.hpp"
#include "ospace/room_features.hpp"
#include "ospace/set_encoder.hpp"

namespace ospace {

struct HeadConfig {
    std::size_t room_dim = 1024;
    std::size_t people_dim = 1024;
    std::vector<std::size_t> hidden_widths{1024};
    std::size_t output_dim = 120;

    std::size_t input_dim() const { return room_dim + people_dim; }

    friend bool operator==(const HeadConfig&, const HeadConfig&) = default;
};

struct ModelConfig {
    RoomSpec room;
    EncoderConfig encoder;
    HeadConfig head;
    GaussianParams gaussian;
    double stride_m = kDefaultStride;

    /// Keeps the head's people_dim and output_dim tied to the encoder and grid.
    void sync() {
        head.people_dim = encoder.output_dim();
        head.output_dim = room.cell_count();
    }

    void validate() const {
        room.validate();
        encoder.validate();
        gaussian.validate();
        if (head.people_dim != encoder.output_dim()) throw std::invalid_argument("head people_dim != encoder output");
        if (head.output_dim != room.cell_count()) throw std::invalid_argument("head output_dim != rows * cols");
        for (std::size_t w : head.hidden_widths)
            if (w < 1) throw std::invalid_argument("head hidden widths must be >= 1");
        if (!(stride_m >= 0.0)) throw std::invalid_argument("stride must be non-negative");
    }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Everything needed to reproduce predictions: configs, normalisation,
/// parameters, and the room vectors (one per flip variant, or one shared).
struct ModelWeights {
    ModelConfig config;
    EncoderWeights encoder;
    std::vector<DenseLayer> head;
    NormStats norm;
    std::uint64_t seed = 0;
    std::vector<RoomFeature> rooms;

    const RoomFeature& room_for_variant(std::size_t variant) const {
        if (rooms.empty()) throw std::invalid_argument("model carries no room features");
        return rooms[variant % rooms.size()];
    }

    friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

inline std::vector<DenseLayer> make_head_layers(const HeadConfig& h) {
    std::vector<DenseLayer> layers;
    std::size_t in = h.input_dim();
    for (std::size_t w : h.hidden_widths) {
        layers.emplace_back(in, w);
        in = w;
    }
    layers.emplace_back(in, h.output_dim);
    return layers;
}

/// Fan-in scaled uniform initialisation from the seed; room vectors default to zeros.
inline ModelWeights init_model(ModelConfig cfg, std::uint64_t seed) {
    cfg.sync();
    cfg.validate();
    ModelWeights m;
    m.config = cfg;
    m.seed = seed;
    Rng rng(derive_seed(seed, 1));
    m.encoder = EncoderWeights::random(cfg.encoder, rng);
    m.head = make_head_layers(cfg.head);
    for (auto& l : m.head) l.init_uniform(rng);
    m.rooms = {RoomFeature{std::vector<double>(cfg.head.room_dim, 0.0)}};
    return m;
}

// ---------------------------------------------------------------------------
// Forward

struct HeadTrace {
    std::vector<std::vector<double>> acts;  // acts[0] = concat input, last = logistic output
};

inline HeadTrace head_trace(std::span<const double> room, std::span<const double> people,
                            const std::vector<DenseLayer>& head, const HeadConfig& cfg) {
    check_dim(room.size(), cfg.room_dim, "room feature");
    check_dim(people.size(), cfg.people_dim, "people feature");
    HeadTrace t;
    t.acts.resize(head.size() + 1);
    t.acts[0].reserve(cfg.input_dim());
    t.acts[0].insert(t.acts[0].end(), room.begin(), room.end());
    t.acts[0].insert(t.acts[0].end(), people.begin(), people.end());
    for (std::size_t l = 0; l < head.size(); ++l) {
        t.acts[l + 1].resize(head[l].out);
        affine(head[l], t.acts[l], t.acts[l + 1]);
        if (l + 1 < head.size())
            relu_inplace(t.acts[l + 1]);
        else
            for (double& v : t.acts[l + 1]) v = logistic(v);
    }
    return t;
}

inline std::vector<double> forward(const RoomFeature& room, std::span<const double> people, const ModelWeights& m) {
    return head_trace(room.values, people, m.head, m.config.head).acts.back();
}

inline std::vector<double> forward_scene(const Scene& s, const RoomFeature& room, const ModelWeights& m) {
    const auto feats = scene_features(s, m.norm);
    return forward(room, encode(feats, m.encoder), m);
}

/// Predicted map. A scene without persons yields the head's response to an all-zero people code.
inline OSpaceMap predict_map(const Scene& s, const RoomFeature& room, const ModelWeights& m) {
    if (s.persons.empty())
        return OSpaceMap(m.config.room, forward(room, std::vector<double>(m.config.head.people_dim, 0.0), m));
    return OSpaceMap(m.config.room, forward_scene(s, room, m));
}

// ---------------------------------------------------------------------------
// Loss

inline double weighted_mse(std::span<const double> pred, std::span<const double> target, double w) {
    check_dim(pred.size(), target.size(), "loss target");
    if (!(w > 0.0)) throw std::invalid_argument("example weight must be positive");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - target[i]) * (pred[i] - target[i]);
    return w * s / static_cast<double>(pred.size());
}

/// multi_group_weight for scenes with two or more conversational groups, else 1.
inline double example_weight(const Scene& s, double multi_group_weight) {
    return conversational_groups(s.groups).size() >= 2 ? multi_group_weight : 1.0;
}

// ---------------------------------------------------------------------------
// Gradients

struct Gradients {
    std::vector<DenseLayer> encoder;
    std::vector<DenseLayer> head;

    static Gradients zeros_for(const ModelWeights& m) { return {zeros_like(m.encoder.layers), zeros_like(m.head)}; }

    void add(const Gradients& g) {
        add_into(encoder, g.encoder);
        add_into(head, g.head);
    }
    void scale_by(double s) {
        scale(encoder, s);
        scale(head, s);
    }
};

/// One supervised item with its inputs precomputed.
struct Example {
    std::vector<PersonFeature> features;
    const RoomFeature* room = nullptr;
    std::vector<double> target;
    double weight = 1.0;
};

inline Example make_example(const Scene& s, const RoomFeature& room, const ModelWeights& m, double multi_group_weight) {
    Example e;
    e.features = scene_features(s, m.norm);
    e.room = &room;
    e.target = scene_target(s, m.config.stride_m, m.config.gaussian, m.config.room).values();
    e.weight = example_weight(s, multi_group_weight);
    return e;
}

/// Adds d(loss)/d(params) of one example, scaled by `factor`, into `g`; returns the loss.
inline double accumulate_example(const Example& e, const ModelWeights& m, double factor, Gradients& g) {
    // a scene without persons feeds the head an all-zero code and leaves the encoder untouched
    std::optional<EncoderTrace> et;
    std::vector<double> code(m.config.head.people_dim, 0.0);
    if (!e.features.empty()) {
        et = encode_trace(e.features, m.encoder);
        code = et->pooled;
    }
    HeadTrace ht = head_trace(e.room->values, code, m.head, m.config.head);
    const auto& pred = ht.acts.back();
    const double loss = weighted_mse(pred, e.target, e.weight);

    // d loss / d logit through the logistic output
    std::vector<double> delta(pred.size());
    const double c = factor * e.weight * 2.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) delta[i] = c * (pred[i] - e.target[i]) * pred[i] * (1.0 - pred[i]);

    for (std::size_t l = m.head.size(); l-- > 0;) {
        std::vector<double> din(m.head[l].in);
        affine_backward(m.head[l], ht.acts[l], delta, g.head[l], din);
        if (l > 0)
            for (std::size_t i = 0; i < din.size(); ++i)
                if (!(ht.acts[l][i] > 0.0)) din[i] = 0.0;
        delta = std::move(din);
    }
    // the room part of the head input is frozen; only the people code flows back
    if (et) {
        std::span<const double> people_grad(delta.data() + m.config.head.room_dim, m.config.head.people_dim);
        encode_backward_into(*et, m.encoder, people_grad, g.encoder);
    }
    return loss;
}

struct BatchResult {
    Gradients grads;
    double loss = 0.0;  // mean weighted loss over the batch
};

inline constexpr std::size_t kReductionChunk = 4;

/// Exact gradient of the mean weighted loss over `batch`. Examples are
/// reduced in fixed chunks of kReductionChunk, then chunks in index order, so
/// the result is bit-identical for any worker count.
inline BatchResult backward(std::span<const Example* const> batch, const ModelWeights& m,
                            std::size_t workers = worker_count()) {
    if (batch.empty()) throw std::invalid_argument("backward on an empty batch");
    const double factor = 1.0 / static_cast<double>(batch.size());
    const std::size_t chunks = (batch.size() + kReductionChunk - 1) / kReductionChunk;
    std::vector<Gradients> partial(chunks);
    std::vector<double> losses(batch.size(), 0.0);
    parallel_for(
        chunks,
        [&](std::size_t c) {
            partial[c] = Gradients::zeros_for(m);
            const std::size_t end = std::min(batch.size(), (c + 1) * kReductionChunk);
            for (std::size_t i = c * kReductionChunk; i < end; ++i)
                losses[i] = accumulate_example(*batch[i], m, factor, partial[c]);
        },
        workers);
    BatchResult r{std::move(partial[0]), 0.0};
    for (std::size_t c = 1; c < chunks; ++c) r.grads.add(partial[c]);
    for (double l : losses) r.loss += l;
    r.loss *= factor;
    return r;
}

inline BatchResult backward(std::span<const Example> batch, const ModelWeights& m, std::size_t workers = worker_count()) {
    std::vector<const Example*> ptrs;
    for (const auto& e : batch) ptrs.push_back(&e);
    return backward(std::span<const Example* const>(ptrs), m, workers);
}

inline double mean_loss(std::span<const Example> examples, const ModelWeights& m, std::size_t workers = worker_count()) {
    if (examples.empty()) return 0.0;
    std::vector<double> losses(examples.size());
    parallel_for(
        examples.size(),
        [&](std::size_t i) {
            const Example& e = examples[i];
            const std::vector<double> code = e.features.empty() ? std::vector<double>(m.config.head.people_dim, 0.0)
                                                                : encode(e.features, m.encoder);
            losses[i] = weighted_mse(forward(*e.room, code, m), e.target, e.weight);
        },
        workers);
    return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(examples.size());
}

// ---------------------------------------------------------------------------
// Optimisation

enum class Optimizer { sgd, adam };

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 16;
    double learning_rate = 1e-3;
    Optimizer optimizer = Optimizer::adam;
    double multi_group_weight = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
            throw std::invalid_argument("learning rate must be finite and non-negative");
        if (!(multi_group_weight >= 1.0)) throw std::invalid_argument("multi-group weight must be >= 1");
    }
};

namespace detail {

template <typename Fn>
void for_each_tensor(std::vector<DenseLayer>& a, std::vector<DenseLayer>& b, Fn&& fn) {
    for (std::size_t l = 0; l < a.size(); ++l) {
        fn(std::span<double>(a[l].weight), std::span<double>(b[l].weight));
        fn(std::span<double>(a[l].bias), std::span<double>(b[l].bias));
    }
}

}  // namespace detail

/// Plain SGD or Adam (beta1 0.9, beta2 0.999, eps 1e-8).
class OptimizerState {
 public:
    OptimizerState(const ModelWeights& m, Optimizer kind) : kind_(kind) {
        if (kind_ == Optimizer::adam) {
            m1_ = Gradients::zeros_for(m);
            m2_ = Gradients::zeros_for(m);
        }
    }

    void step(ModelWeights& m, Gradients& g, double lr) {
        if (kind_ == Optimizer::sgd) {
            apply_sgd(m.encoder.layers, g.encoder, lr);
            apply_sgd(m.head, g.head, lr);
            return;
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        apply_adam(m.encoder.layers, g.encoder, m1_.encoder, m2_.encoder, lr, bc1, bc2);
        apply_adam(m.head, g.head, m1_.head, m2_.head, lr, bc1, bc2);
    }

 private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    static void apply_sgd(std::vector<DenseLayer>& p, std::vector<DenseLayer>& g, double lr) {
        detail::for_each_tensor(p, g, [lr](std::span<double> w, std::span<double> d) {
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * d[i];
        });
    }

    static void apply_adam(std::vector<DenseLayer>& p, std::vector<DenseLayer>& g, std::vector<DenseLayer>& m1,
                           std::vector<DenseLayer>& m2, double lr, double bc1, double bc2) {
        for (std::size_t l = 0; l < p.size(); ++l) {
            auto upd = [&](std::vector<double>& w, const std::vector<double>& d, std::vector<double>& a,
                           std::vector<double>& b) {
                for (std::size_t i = 0; i < w.size(); ++i) {
                    a[i] = kBeta1 * a[i] + (1.0 - kBeta1) * d[i];
                    b[i] = kBeta2 * b[i] + (1.0 - kBeta2) * d[i] * d[i];
                    w[i] -= lr * (a[i] / bc1) / (std::sqrt(b[i] / bc2) + kEps);
                }
            };
            upd(p[l].weight, g[l].weight, m1[l].weight, m2[l].weight);
            upd(p[l].bias, g[l].bias, m1[l].bias, m2[l].bias);
        }
    }

    Optimizer kind_;
    Gradients m1_, m2_;
    std::uint64_t t_ = 0;
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;  // NaN when no validation set
};

struct TrainResult {
    ModelWeights model;
    std::vector<EpochStats> trace;
    std::size_t best_epoch = 0;  // 0 = initial weights kept
};

/// Minibatch training with a seeded shuffle. With validation examples the
/// weights from the epoch with the lowest validation loss are returned;
/// otherwise the final weights. Throws NumericError on a non-finite loss.
inline TrainResult train(std::span<const Example> train_set, std::span<const Example> val_set,
                         const TrainConfig& cfg, ModelWeights model, std::size_t workers = worker_count()) {
    cfg.validate();
    if (train_set.empty()) throw std::invalid_argument("training set is empty");
    TrainResult result;
    result.model = model;
    double best_val = std::numeric_limits<double>::infinity();
    OptimizerState opt(model, cfg.optimizer);
    Rng shuffler(derive_seed(cfg.seed, 2));
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffler.shuffle(order);
        double epoch_loss = 0.0;
        std::vector<const Example*> batch;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            batch.clear();
            for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i)
                batch.push_back(&train_set[order[i]]);
            BatchResult br = backward(std::span<const Example* const>(batch), model, workers);
            if (!std::isfinite(br.loss))
                throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": non-finite loss");
            epoch_loss += br.loss * static_cast<double>(batch.size());
            if (cfg.learning_rate > 0.0) opt.step(model, br.grads, cfg.learning_rate);
        }
        EpochStats st{epoch, epoch_loss / static_cast<double>(order.size()), std::nan("")};
        if (!val_set.empty()) {
            st.val_loss = mean_loss(val_set, model, workers);
            if (!std::isfinite(st.val_loss))
                throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": non-finite validation loss");
            if (st.val_loss < best_val) {
                best_val = st.val_loss;
                result.model = model;
                result.best_epoch = epoch;
            }
        }
        result.trace.push_back(st);
    }
    if (val_set.empty() && cfg.epochs > 0) {
        result.model = std::move(model);
        result.best_epoch = cfg.epochs;
    }
    return result;
}

}  // namespace ospace
