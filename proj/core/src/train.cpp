#include "scoremerge/train.hpp"

#include <cmath>

#include "scoremerge/errors.hpp"
#include "scoremerge/parallel.hpp"
#include "scoremerge/rng.hpp"
#include "stream_tags.hpp"

namespace scoremerge {

namespace {

// Gradient accumulation always uses this chunk grid, independent of the
// worker count, so parallel runs reduce in the same order as serial ones.
constexpr std::size_t kAccumChunks = 8;

struct DrawnSample {
    double t;
    double weight;
};

DrawnSample draw_time(CounterRng& rng, Weighting weighting, TimeSampling ts, std::size_t index,
                      std::size_t batch, const NoiseSchedule& schedule) {
    double u = rng.uniform();
    if (ts == TimeSampling::stratified)
        u = (static_cast<double>(index) + u) / static_cast<double>(batch);
    DrawnSample s;
    if (weighting == Weighting::simple_high_noise) {
        // Density 2t on [0,1]: inverse CDF of F(t) = t^2. Monotone, so
        // stratification in u carries over to t.
        s.t = std::sqrt(u);
        s.weight = 1.0;
    } else {
        s.t = u;
        s.weight = schedule.gamma_dot(s.t);
    }
    return s;
}

}  // namespace

std::string to_string(Weighting w) {
    return w == Weighting::elbo ? "elbo" : "simple-high-noise";
}

Weighting weighting_from_string(const std::string& s) {
    if (s == "elbo") return Weighting::elbo;
    if (s == "simple-high-noise") return Weighting::simple_high_noise;
    throw ConfigError("unknown weighting: " + s);
}

std::string to_string(TimeSampling t) {
    return t == TimeSampling::uniform ? "uniform" : "stratified";
}

TimeSampling time_sampling_from_string(const std::string& s) {
    if (s == "uniform") return TimeSampling::uniform;
    if (s == "stratified") return TimeSampling::stratified;
    throw ConfigError("unknown time sampling: " + s);
}

void TrainConfig::validate() const {
    if (steps == 0) throw ConfigError("train steps must be positive");
    if (batch_size == 0) throw ConfigError("train batch_size must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(ema_decay > 0.0 && ema_decay < 1.0)) throw ConfigError("ema_decay must be in (0,1)");
    if (!(abort_loss > 0.0)) throw ConfigError("abort_loss must be positive");
}

DsmLossResult dsm_loss(const ScoreNet& net, const NoiseSchedule& schedule, Weighting weighting,
                       TimeSampling time_sampling, const Matrix& batch, std::uint64_t seed,
                       std::uint64_t step, std::size_t threads) {
    const std::size_t b = batch.rows;
    if (b == 0) throw ConfigError("dsm_loss needs a nonempty batch");
    const std::size_t d = net.config().dim;
    if (batch.cols != d) throw ShapeError("dsm_loss batch has wrong dimension");
    const std::size_t np = net.param_count();
    const double gmin = schedule.gamma_min();
    const double gspan = schedule.gamma_max() - gmin;

    struct ChunkAcc {
        double loss = 0.0;
        double t_min = 1.0, t_max = 0.0;
        Vec grad;
        bool used = false;
    };
    std::vector<ChunkAcc> chunks(kAccumChunks);

    const std::size_t per = (b + kAccumChunks - 1) / kAccumChunks;
    parallel_for(kAccumChunks, static_cast<unsigned>(threads), [&](std::size_t c) {
        const std::size_t lo = std::min(b, c * per), hi = std::min(b, lo + per);
        if (lo >= hi) return;
        ChunkAcc& acc = chunks[c];
        acc.used = true;
        acc.grad.assign(np, 0.0);
        Vec z(d), eps(d), cot(d);
        for (std::size_t i = lo; i < hi; ++i) {
            CounterRng rng(seed, tags::kTrainSample, step, i);
            const DrawnSample ds = draw_time(rng, weighting, time_sampling, i, b, schedule);
            acc.t_min = std::min(acc.t_min, ds.t);
            acc.t_max = std::max(acc.t_max, ds.t);
            double alpha, sigma;
            vp_alpha_sigma(schedule.gamma(ds.t), alpha, sigma);
            const double* x = batch.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                eps[j] = rng.normal();
                z[j] = alpha * x[j] + sigma * eps[j];
            }
            const double gn = (schedule.gamma(ds.t) - gmin) / gspan;
            const Vec out = net.forward(z, gn);
            double q = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double r = out[j] - eps[j];
                q += r * r;
                cot[j] = ds.weight * r / static_cast<double>(b);
            }
            acc.loss += 0.5 * ds.weight * q / static_cast<double>(b);
            net.param_grad(z, gn, cot, acc.grad);
        }
    });

    DsmLossResult res;
    res.grad.assign(np, 0.0);
    res.t_min = 1.0;
    res.t_max = 0.0;
    for (const ChunkAcc& acc : chunks) {
        if (!acc.used) continue;
        res.loss += acc.loss;
        res.t_min = std::min(res.t_min, acc.t_min);
        res.t_max = std::max(res.t_max, acc.t_max);
        for (std::size_t j = 0; j < np; ++j) res.grad[j] += acc.grad[j];
    }
    if (!std::isfinite(res.loss))
        throw TrainingError("dsm loss is not finite (sampled t in [" + std::to_string(res.t_min) +
                            ", " + std::to_string(res.t_max) + "])");
    return res;
}

double dsm_loss_value(const ScoreField& field, Weighting weighting, TimeSampling time_sampling,
                      const Matrix& data, std::size_t n_draws, std::uint64_t seed) {
    if (data.rows == 0) throw ConfigError("dsm_loss_value needs data");
    if (n_draws == 0) throw ConfigError("dsm_loss_value needs draws");
    const std::size_t d = field.dim();
    if (data.cols != d) throw ShapeError("dsm_loss_value data has wrong dimension");
    const NoiseSchedule& sched = field.schedule();

    double total = 0.0;
    Vec z(d), eps(d);
    for (std::size_t i = 0; i < n_draws; ++i) {
        CounterRng rng(seed, tags::kLossValue, i);
        const DrawnSample ds = draw_time(rng, weighting, time_sampling, i, n_draws, sched);
        double alpha, sigma;
        vp_alpha_sigma(sched.gamma(ds.t), alpha, sigma);
        const double* x = data.row(rng.below(data.rows));
        for (std::size_t j = 0; j < d; ++j) {
            eps[j] = rng.normal();
            z[j] = alpha * x[j] + sigma * eps[j];
        }
        const Vec s = field.score(z, ds.t);
        // Noise-form residual of the field's score prediction.
        double q = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double r = -sigma * s[j] - eps[j];
            q += r * r;
        }
        total += 0.5 * ds.weight * q;
    }
    return total / static_cast<double>(n_draws);
}

TrainResult train_expert(const TrainConfig& cfg, const Matrix& data,
                         const NoiseSchedule& schedule, std::size_t threads) {
    cfg.validate();
    if (data.rows == 0) throw DataError("training data is empty");
    MlpConfig mlp = cfg.mlp;
    if (mlp.dim == 0) mlp.dim = data.cols;
    if (mlp.dim != data.cols) throw ShapeError("network dim does not match data");

    ScoreNet net(mlp);
    {
        CounterRng init_rng(cfg.seed, tags::kTrainInit);
        net.init(init_rng);
    }
    const std::size_t np = net.param_count();
    std::vector<double> ema(net.params().begin(), net.params().end());
    Vec m(np, 0.0), v(np, 0.0);
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;

    std::vector<TrainLogRow> log;
    log.reserve(cfg.steps);
    bool diverged = false;
    std::size_t steps_run = 0;

    Matrix batch(cfg.batch_size, data.cols);
    double b1k = 1.0, b2k = 1.0;
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        for (std::size_t i = 0; i < cfg.batch_size; ++i) {
            CounterRng rng(cfg.seed, tags::kTrainBatch, step, i);
            batch.set_row(i, data.row_span(rng.below(data.rows)));
        }
        DsmLossResult r;
        try {
            r = dsm_loss(net, schedule, cfg.weighting, cfg.time_sampling, batch, cfg.seed, step,
                         threads);
        } catch (const TrainingError&) {
            diverged = true;
            break;
        }
        const double gnorm = norm2(r.grad);
        if (r.loss > cfg.abort_loss || !std::isfinite(gnorm)) {
            // Stop before applying the bad update; current parameters are
            // the last good state.
            diverged = true;
            break;
        }

        b1k *= kBeta1;
        b2k *= kBeta2;
        auto params = net.params();
        for (std::size_t j = 0; j < np; ++j) {
            m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * r.grad[j];
            v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * r.grad[j] * r.grad[j];
            const double mhat = m[j] / (1.0 - b1k);
            const double vhat = v[j] / (1.0 - b2k);
            params[j] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + kAdamEps);
        }
        for (std::size_t j = 0; j < np; ++j)
            ema[j] = cfg.ema_decay * ema[j] + (1.0 - cfg.ema_decay) * params[j];

        log.push_back({step, r.loss, gnorm});
        ++steps_run;
    }

    std::vector<double> raw(net.params().begin(), net.params().end());
    ScoreNet ema_net(mlp);
    std::copy(ema.begin(), ema.end(), ema_net.params().begin());
    Expert expert = Expert::neural(std::move(ema_net), schedule, ParamKind::noise);
    expert.set_raw_params(std::move(raw));
    return TrainResult{std::move(expert), std::move(log), diverged, steps_run};
}

}  // namespace scoremerge
