#include "scoremerge/scorenet.hpp"

#include <cmath>

#include "scoremerge/errors.hpp"

namespace scoremerge {

namespace {

constexpr double kTwoPi = 6.283185307179586;

double silu(double x) { return x * logistic(x); }

double silu_grad(double x) {
    const double s = logistic(x);
    return s * (1.0 + x * (1.0 - s));
}

}  // namespace

void MlpConfig::validate() const {
    if (dim == 0) throw ConfigError("mlp dim must be positive");
    if (hidden.empty()) throw ConfigError("mlp needs at least one hidden layer");
    for (std::size_t h : hidden)
        if (h == 0) throw ConfigError("mlp hidden widths must be positive");
    if (fourier_bands == 0) throw ConfigError("mlp needs at least one fourier band");
}

ScoreNet::ScoreNet(MlpConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const std::size_t layers = layer_count();
    w_off_.resize(layers);
    b_off_.resize(layers);
    std::size_t off = 0;
    for (std::size_t l = 0; l < layers; ++l) {
        w_off_[l] = off;
        off += in_size(l) * out_size(l);
        b_off_[l] = off;
        off += out_size(l);
    }
    params_.assign(off, 0.0);
}

std::size_t ScoreNet::in_size(std::size_t layer) const {
    return layer == 0 ? cfg_.input_size() : cfg_.hidden[layer - 1];
}

std::size_t ScoreNet::out_size(std::size_t layer) const {
    return layer == cfg_.hidden.size() ? cfg_.dim : cfg_.hidden[layer];
}

void ScoreNet::init(CounterRng& rng) {
    std::fill(params_.begin(), params_.end(), 0.0);
    // Output layer (last) stays zero so the initial prediction is exactly 0.
    for (std::size_t l = 0; l + 1 < layer_count(); ++l) {
        const double sd = 1.0 / std::sqrt(static_cast<double>(in_size(l)));
        double* w = params_.data() + w_off_[l];
        const std::size_t n = in_size(l) * out_size(l);
        for (std::size_t i = 0; i < n; ++i) w[i] = sd * rng.normal();
    }
}

void ScoreNet::features_into(double gamma_norm, std::span<const double> z, Vec& input) const {
    if (z.size() != cfg_.dim) throw ShapeError("scorenet input has wrong dimension");
    input.resize(cfg_.input_size());
    std::copy(z.begin(), z.end(), input.begin());
    double* f = input.data() + cfg_.dim;
    *f++ = 2.0 * gamma_norm - 1.0;
    double freq = 1.0;
    for (std::size_t b = 0; b < cfg_.fourier_bands; ++b, freq *= 2.0) {
        *f++ = std::sin(kTwoPi * freq * gamma_norm);
        *f++ = std::cos(kTwoPi * freq * gamma_norm);
    }
}

void ScoreNet::forward_cached(std::span<const double> z, double gamma_norm, Cache& cache) const {
    const std::size_t layers = layer_count();
    cache.acts.resize(layers);
    cache.pre.resize(layers - 1);
    features_into(gamma_norm, z, cache.acts[0]);
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t ni = in_size(l), no = out_size(l);
        const Vec& a = cache.acts[l];
        Vec& h = (l + 1 == layers) ? cache.out : cache.pre[l];
        h.resize(no);
        const double* w = weight(l);
        const double* b = bias(l);
        for (std::size_t o = 0; o < no; ++o) {
            const double* row = w + o * ni;
            double acc = b[o];
            for (std::size_t i = 0; i < ni; ++i) acc += row[i] * a[i];
            h[o] = acc;
        }
        if (l + 1 < layers) {
            Vec& out = cache.acts[l + 1];
            out.resize(no);
            for (std::size_t o = 0; o < no; ++o) out[o] = silu(h[o]);
        }
    }
}

Vec ScoreNet::forward(std::span<const double> z, double gamma_norm) const {
    Cache cache;
    forward_cached(z, gamma_norm, cache);
    return cache.out;
}

void ScoreNet::param_grad(std::span<const double> z, double gamma_norm,
                          std::span<const double> cotangent, std::span<double> grad) const {
    if (cotangent.size() != cfg_.dim) throw ShapeError("scorenet cotangent has wrong dimension");
    if (grad.size() != params_.size()) throw ShapeError("scorenet grad buffer has wrong size");
    Cache cache;
    forward_cached(z, gamma_norm, cache);

    Vec g(cotangent.begin(), cotangent.end());
    for (std::size_t li = layer_count(); li-- > 0;) {
        const std::size_t ni = in_size(li), no = out_size(li);
        if (li + 1 < layer_count())
            for (std::size_t o = 0; o < no; ++o) g[o] *= silu_grad(cache.pre[li][o]);
        const Vec& a = cache.acts[li];
        double* gw = grad.data() + w_off_[li];
        double* gb = grad.data() + b_off_[li];
        for (std::size_t o = 0; o < no; ++o) {
            double* row = gw + o * ni;
            const double go = g[o];
            for (std::size_t i = 0; i < ni; ++i) row[i] += go * a[i];
            gb[o] += go;
        }
        if (li == 0) break;
        const double* w = weight(li);
        Vec gin(ni, 0.0);
        for (std::size_t o = 0; o < no; ++o) {
            const double* row = w + o * ni;
            const double go = g[o];
            for (std::size_t i = 0; i < ni; ++i) gin[i] += go * row[i];
        }
        g = std::move(gin);
    }
}

Vec ScoreNet::input_vjp(std::span<const double> z, double gamma_norm,
                        std::span<const double> probe) const {
    if (probe.size() != cfg_.dim) throw ShapeError("scorenet probe has wrong dimension");
    Cache cache;
    forward_cached(z, gamma_norm, cache);

    Vec g(probe.begin(), probe.end());
    for (std::size_t li = layer_count(); li-- > 0;) {
        const std::size_t ni = in_size(li), no = out_size(li);
        if (li + 1 < layer_count())
            for (std::size_t o = 0; o < no; ++o) g[o] *= silu_grad(cache.pre[li][o]);
        const double* w = weight(li);
        Vec gin(ni, 0.0);
        for (std::size_t o = 0; o < no; ++o) {
            const double* row = w + o * ni;
            const double go = g[o];
            for (std::size_t i = 0; i < ni; ++i) gin[i] += go * row[i];
        }
        g = std::move(gin);
    }
    // Only the z block of the input carries gradient; time features are
    // functions of t, not z.
    return Vec(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(cfg_.dim));
}

}  // namespace scoremerge
