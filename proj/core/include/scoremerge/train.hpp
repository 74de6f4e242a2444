#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scoremerge/expert.hpp"
#include "scoremerge/linalg.hpp"
#include "scoremerge/schedule.hpp"
#include "scoremerge/scorenet.hpp"

namespace scoremerge {

enum class Weighting { elbo, simple_high_noise };
enum class TimeSampling { uniform, stratified };

std::string to_string(Weighting w);
Weighting weighting_from_string(const std::string& s);
std::string to_string(TimeSampling t);
TimeSampling time_sampling_from_string(const std::string& s);

struct TrainConfig {
    std::size_t steps = 20000;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    Weighting weighting = Weighting::elbo;
    TimeSampling time_sampling = TimeSampling::stratified;
    double ema_decay = 0.999;
    std::uint64_t seed = 0;
    MlpConfig mlp;             // mlp.dim filled from the dataset when 0
    double abort_loss = 1e6;   // divergence threshold

    void validate() const;
};

/// Denoising-score-matching loss of a network predicting noise, plus the
/// full parameter gradient, on one batch.
///
/// Per sample: t drawn per the weighting's time law, z = alpha x + sigma e,
/// target e; loss w(t)/2 ||net(z,t) - e||^2 with w = dgamma/dt under elbo
/// (the g^2-weighted score loss in noise form) and w = 1 under
/// simple-high-noise, where t itself has density 2t so high noise
/// dominates. Randomness is counter-keyed on (seed, step, sample index), so
/// any thread count gives bit-identical results.
struct DsmLossResult {
    double loss = 0.0;
    Vec grad;
    double t_min = 0.0;  // sampled time range, reported in NaN diagnostics
    double t_max = 0.0;
};

DsmLossResult dsm_loss(const ScoreNet& net, const NoiseSchedule& schedule, Weighting weighting,
                       TimeSampling time_sampling, const Matrix& batch, std::uint64_t seed,
                       std::uint64_t step, std::size_t threads = 1);

/// Monte Carlo value of the same loss for an arbitrary score field (no
/// gradient); comparing a perfect score against its closed-form residual
/// floor is the main oracle for the loss itself.
double dsm_loss_value(const ScoreField& field, Weighting weighting, TimeSampling time_sampling,
                      const Matrix& data, std::size_t n_draws, std::uint64_t seed);

struct TrainLogRow {
    std::size_t step;
    double loss;
    double grad_norm;
};

struct TrainResult {
    Expert expert;  // EMA parameters active; raw parameters kept alongside
    std::vector<TrainLogRow> log;
    bool diverged = false;
    std::size_t steps_run = 0;
};

/// Adam (beta 0.9/0.999) + EMA training loop. Deterministic given
/// cfg.seed for any thread count: batches are counter-keyed per (step,
/// index) and gradients accumulate over a fixed chunk grid. A loss above
/// cfg.abort_loss or a non-finite loss stops training and returns the last
/// pre-update parameters with diverged = true.
TrainResult train_expert(const TrainConfig& cfg, const Matrix& data,
                         const NoiseSchedule& schedule, std::size_t threads = 1);

}  // namespace scoremerge
