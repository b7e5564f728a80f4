/**
 * @file set_encoder.hpp
 * @brief Order-independent encoding of a set of people.
 *
 * Every person vector passes through the same rectified MLP (the 1x1
 * convolution over the person axis), then a per-dimension max over the real
 * persons collapses the set into one D-dimensional code. Padding rows up to
 * the capacity M never take part in the max, so the code for P persons is
 * identical for any M >= P.
 */
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ospace/dataset.hpp"
#include "ospace/dense.hpp"

namespace ospace {

struct EncoderConfig {
    std::size_t input_dim = kFeatureDim;
    std::size_t max_people = kDefaultMaxPeople;
    std::vector<std::size_t> layer_widths{64, 256, 1024};

    std::size_t output_dim() const { return layer_widths.empty() ? 0 : layer_widths.back(); }

    void validate() const {
        if (input_dim < 1 || max_people < 1 || layer_widths.empty())
            throw std::invalid_argument("encoder needs input_dim, max_people and at least one layer");
        for (std::size_t w : layer_widths)
            if (w < 1) throw std::invalid_argument("encoder layer widths must be >= 1");
    }

    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct EncoderWeights {
    EncoderConfig config;
    std::vector<DenseLayer> layers;

    static EncoderWeights zeros(const EncoderConfig& cfg) {
        cfg.validate();
        EncoderWeights w{cfg, {}};
        std::size_t in = cfg.input_dim;
        for (std::size_t width : cfg.layer_widths) {
            w.layers.emplace_back(in, width);
            in = width;
        }
        return w;
    }

    static EncoderWeights random(const EncoderConfig& cfg, Rng& rng) {
        EncoderWeights w = zeros(cfg);
        for (auto& l : w.layers) l.init_uniform(rng);
        return w;
    }

    std::size_t output_dim() const { return config.output_dim(); }

    friend bool operator==(const EncoderWeights&, const EncoderWeights&) = default;
};

/// Forward activations kept for the backward pass.
struct EncoderTrace {
    std::size_t persons = 0;
    /// acts[0] holds the inputs; acts[l + 1] the rectified output of layer l,
    /// each persons x width row-major.
    std::vector<std::vector<double>> acts;
    std::vector<double> pooled;
    /// Person supplying each pooled dimension (lowest index on ties).
    std::vector<std::size_t> argmax;
};

inline void check_encoder_input(std::span<const PersonFeature> features, const EncoderWeights& w) {
    if (features.empty()) throw std::invalid_argument("set encoder needs at least one person");
    if (features.size() > w.config.max_people)
        throw std::invalid_argument("set encoder capacity is " + std::to_string(w.config.max_people) + " persons, got " +
                                    std::to_string(features.size()));
    check_dim(kFeatureDim, w.config.input_dim, "person feature");
}

inline EncoderTrace encode_trace(std::span<const PersonFeature> features, const EncoderWeights& w) {
    check_encoder_input(features, w);
    const std::size_t P = features.size();
    EncoderTrace t;
    t.persons = P;
    t.acts.resize(w.layers.size() + 1);
    t.acts[0].resize(P * kFeatureDim);
    for (std::size_t p = 0; p < P; ++p)
        std::copy(features[p].values.begin(), features[p].values.end(), t.acts[0].begin() + p * kFeatureDim);

    for (std::size_t l = 0; l < w.layers.size(); ++l) {
        const DenseLayer& layer = w.layers[l];
        t.acts[l + 1].resize(P * layer.out);
        for (std::size_t p = 0; p < P; ++p) {
            std::span<const double> x(t.acts[l].data() + p * layer.in, layer.in);
            std::span<double> y(t.acts[l + 1].data() + p * layer.out, layer.out);
            affine(layer, x, y);
            relu_inplace(y);
        }
    }

    const std::size_t D = w.output_dim();
    const auto& top = t.acts.back();
    t.pooled.assign(top.begin(), top.begin() + D);
    t.argmax.assign(D, 0);
    for (std::size_t p = 1; p < P; ++p)
        for (std::size_t d = 0; d < D; ++d) {
            const double v = top[p * D + d];
            if (v > t.pooled[d]) {
                t.pooled[d] = v;
                t.argmax[d] = p;
            }
        }
    return t;
}

inline std::vector<double> encode(std::span<const PersonFeature> features, const EncoderWeights& w) {
    return encode_trace(features, w).pooled;
}

/// Accumulates parameter gradients of <upstream, encode(...)> into `grads`
/// and returns the gradient with respect to each input row.
inline std::vector<PersonFeature> encode_backward_into(const EncoderTrace& t, const EncoderWeights& w,
                                                       std::span<const double> upstream,
                                                       std::vector<DenseLayer>& grads) {
    const std::size_t P = t.persons;
    const std::size_t D = w.output_dim();
    check_dim(upstream.size(), D, "encoder upstream gradient");

    // gradient w.r.t. the top activations: routed to the argmax person only
    std::vector<double> g(P * D, 0.0);
    for (std::size_t d = 0; d < D; ++d) g[t.argmax[d] * D + d] = upstream[d];

    for (std::size_t l = w.layers.size(); l-- > 0;) {
        const DenseLayer& layer = w.layers[l];
        const auto& a_out = t.acts[l + 1];
        const auto& a_in = t.acts[l];
        std::vector<double> g_in(P * layer.in, 0.0);
        for (std::size_t p = 0; p < P; ++p) {
            std::span<double> gp(g.data() + p * layer.out, layer.out);
            for (std::size_t o = 0; o < layer.out; ++o)
                if (!(a_out[p * layer.out + o] > 0.0)) gp[o] = 0.0;
            affine_backward(layer, std::span<const double>(a_in.data() + p * layer.in, layer.in), gp, grads[l],
                            std::span<double>(g_in.data() + p * layer.in, layer.in));
        }
        g = std::move(g_in);
    }

    std::vector<PersonFeature> dx(P);
    for (std::size_t p = 0; p < P; ++p)
        std::copy(g.begin() + p * kFeatureDim, g.begin() + (p + 1) * kFeatureDim, dx[p].values.begin());
    return dx;
}

struct EncoderGradients {
    std::vector<DenseLayer> weights;
    std::vector<PersonFeature> inputs;
};

inline EncoderGradients encode_backward(std::span<const PersonFeature> features, const EncoderWeights& w,
                                        std::span<const double> upstream) {
    EncoderTrace t = encode_trace(features, w);
    EncoderGradients out;
    out.weights = zeros_like(w.layers);
    out.inputs = encode_backward_into(t, w, upstream, out.weights);
    return out;
}

}  // namespace ospace
