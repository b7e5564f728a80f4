#pragma once

// Fully connected layers with hand-written backward passes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ospace/random.hpp"

namespace ospace {

/// y = W x + b with W stored out x in, row-major.
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weight;
    std::vector<double> bias;

    DenseLayer() = default;
    DenseLayer(std::size_t in_dim, std::size_t out_dim) : in(in_dim), out(out_dim), weight(in_dim * out_dim, 0.0), bias(out_dim, 0.0) {}

    /// Uniform in +-sqrt(6 / fan_in), zero bias.
    void init_uniform(Rng& rng) {
        const double limit = std::sqrt(6.0 / static_cast<double>(in));
        for (double& w : weight) w = rng.uniform(-limit, limit);
        std::fill(bias.begin(), bias.end(), 0.0);
    }

    std::size_t parameter_count() const { return weight.size() + bias.size(); }

    bool finite() const {
        return std::all_of(weight.begin(), weight.end(), [](double v) { return std::isfinite(v); }) &&
               std::all_of(bias.begin(), bias.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

inline void check_dim(std::size_t got, std::size_t want, const char* what) {
    if (got != want)
        throw std::invalid_argument(std::string(what) + ": expected dimension " + std::to_string(want) + ", got " +
                                    std::to_string(got));
}

inline void affine(const DenseLayer& l, std::span<const double> x, std::span<double> y) {
    for (std::size_t o = 0; o < l.out; ++o) {
        const double* w = l.weight.data() + o * l.in;
        double acc = l.bias[o];
        for (std::size_t i = 0; i < l.in; ++i) acc += w[i] * x[i];
        y[o] = acc;
    }
}

inline void relu_inplace(std::span<double> v) {
    for (double& a : v) a = a > 0.0 ? a : 0.0;
}

inline double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// Accumulates dL/dW += g x^T and dL/db += g; writes dL/dx = W^T g when dx is nonempty.
inline void affine_backward(const DenseLayer& l, std::span<const double> x, std::span<const double> g, DenseLayer& grad,
                            std::span<double> dx) {
    if (!dx.empty()) std::fill(dx.begin(), dx.end(), 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
        const double go = g[o];
        if (go == 0.0) continue;
        grad.bias[o] += go;
        double* gw = grad.weight.data() + o * l.in;
        for (std::size_t i = 0; i < l.in; ++i) gw[i] += go * x[i];
        if (!dx.empty()) {
            const double* w = l.weight.data() + o * l.in;
            for (std::size_t i = 0; i < l.in; ++i) dx[i] += w[i] * go;
        }
    }
}

inline std::vector<DenseLayer> zeros_like(const std::vector<DenseLayer>& layers) {
    std::vector<DenseLayer> z;
    z.reserve(layers.size());
    for (const auto& l : layers) z.emplace_back(l.in, l.out);
    return z;
}

inline void add_into(std::vector<DenseLayer>& acc, const std::vector<DenseLayer>& g) {
    for (std::size_t k = 0; k < acc.size(); ++k) {
        for (std::size_t i = 0; i < acc[k].weight.size(); ++i) acc[k].weight[i] += g[k].weight[i];
        for (std::size_t i = 0; i < acc[k].bias.size(); ++i) acc[k].bias[i] += g[k].bias[i];
    }
}

inline void scale(std::vector<DenseLayer>& layers, double s) {
    for (auto& l : layers) {
        for (double& v : l.weight) v *= s;
        for (double& v : l.bias) v *= s;
    }
}

}  // namespace ospace
