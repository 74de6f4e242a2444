#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scoremerge/linalg.hpp"
#include "scoremerge/rng.hpp"

namespace scoremerge {

/// Shape of the score MLP. The network maps [z, time features] through
/// SiLU hidden layers to a dim-sized output. Time enters as a normalized
/// log-SNR position gn in [0,1] expanded into 1 + 2*fourier_bands features:
/// 2*gn - 1 and sin/cos(2 pi f gn) for f = 1, 2, 4, ..., 2^(bands-1).
struct MlpConfig {
    std::size_t dim = 0;
    std::vector<std::size_t> hidden = {128, 128, 128};
    std::size_t fourier_bands = 4;

    std::size_t feature_count() const { return 1 + 2 * fourier_bands; }
    std::size_t input_size() const { return dim + feature_count(); }
    void validate() const;

    bool operator==(const MlpConfig&) const = default;
};

/// Fully-connected network with a flat parameter buffer. SiLU activations
/// keep the map C^1 in z, which the divergence-based likelihood needs.
/// The output layer is zero-initialized so an untrained net predicts 0.
class ScoreNet {
public:
    explicit ScoreNet(MlpConfig cfg);

    const MlpConfig& config() const { return cfg_; }
    std::size_t param_count() const { return params_.size(); }
    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }

    /// Hidden weights ~ N(0, 1/fan_in), biases 0, output layer all zero.
    void init(CounterRng& rng);

    Vec forward(std::span<const double> z, double gamma_norm) const;

    /// Accumulates d(cotangent . output)/d(params) into grad (same length
    /// as params). grad is not cleared first.
    void param_grad(std::span<const double> z, double gamma_norm,
                    std::span<const double> cotangent, std::span<double> grad) const;

    /// probe^T d(output)/dz, holding gamma_norm fixed.
    Vec input_vjp(std::span<const double> z, double gamma_norm,
                  std::span<const double> probe) const;

private:
    struct Cache {
        std::vector<Vec> acts;  // acts[0] = input, acts[l+1] = post-SiLU of layer l
        std::vector<Vec> pre;   // pre[l] = pre-activation of hidden layer l
        Vec out;
    };

    std::size_t layer_count() const { return cfg_.hidden.size() + 1; }
    std::size_t in_size(std::size_t layer) const;
    std::size_t out_size(std::size_t layer) const;
    const double* weight(std::size_t layer) const { return params_.data() + w_off_[layer]; }
    const double* bias(std::size_t layer) const { return params_.data() + b_off_[layer]; }

    void features_into(double gamma_norm, std::span<const double> z, Vec& input) const;
    void forward_cached(std::span<const double> z, double gamma_norm, Cache& cache) const;

    MlpConfig cfg_;
    std::vector<double> params_;
    std::vector<std::size_t> w_off_, b_off_;
};

}  // namespace scoremerge
