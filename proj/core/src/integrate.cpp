#include "scoremerge/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "scoremerge/errors.hpp"
#include "scoremerge/parallel.hpp"
#include "scoremerge/rng.hpp"
#include "stream_tags.hpp"

namespace scoremerge {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kC2 = 1.0 / 5, kC3 = 3.0 / 10, kC4 = 4.0 / 5, kC5 = 8.0 / 9;
constexpr double kA2[] = {1.0 / 5};
constexpr double kA3[] = {3.0 / 40, 9.0 / 40};
constexpr double kA4[] = {44.0 / 45, -56.0 / 15, 32.0 / 9};
constexpr double kA5[] = {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729};
constexpr double kA6[] = {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
                          -5103.0 / 18656};
// Row 7 doubles as the 5th-order weights (FSAL).
constexpr double kA7[] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84};
// 5th-minus-4th order weight differences for the embedded error estimate.
constexpr double kErr[] = {71.0 / 57600,      0.0,        -71.0 / 16695, 71.0 / 1920,
                           -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

double scaled_rms(const Vec& v, const Vec& ref_a, const Vec& ref_b, double atol, double rtol) {
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double sc = atol + rtol * std::max(std::abs(ref_a[i]), std::abs(ref_b[i]));
        const double r = v[i] / sc;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(v.size()));
}

// Hairer's starting-step heuristic: balance |y|, |f| and a one-step
// curvature probe. Costs one extra RHS evaluation.
double initial_step(const OdeRhs& rhs, double t0, const Vec& y0, const Vec& f0, double dir,
                    double span, double atol, double rtol, std::size_t& rhs_evals) {
    const std::size_t n = y0.size();
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sc = atol + rtol * std::abs(y0[i]);
        d0 += (y0[i] / sc) * (y0[i] / sc);
        d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    d0 = std::sqrt(d0 / static_cast<double>(n));
    d1 = std::sqrt(d1 / static_cast<double>(n));
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);

    Vec y1(n);
    for (std::size_t i = 0; i < n; ++i) y1[i] = y0[i] + dir * h0 * f0[i];
    Vec f1 = rhs(t0 + dir * h0, y1);
    ++rhs_evals;
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sc = atol + rtol * std::abs(y0[i]);
        const double df = (f1[i] - f0[i]) / sc;
        d2 += df * df;
    }
    d2 = std::sqrt(d2 / static_cast<double>(n)) / h0;

    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    return std::min({100.0 * h0, h1, span});
}

}  // namespace

std::string to_string(SolverMethod m) {
    switch (m) {
        case SolverMethod::rk45: return "rk45";
        case SolverMethod::euler_maruyama: return "euler-maruyama";
        case SolverMethod::ancestral: return "ancestral";
    }
    throw ConfigError("unknown solver method");
}

SolverMethod solver_method_from_string(const std::string& s) {
    if (s == "rk45") return SolverMethod::rk45;
    if (s == "euler-maruyama") return SolverMethod::euler_maruyama;
    if (s == "ancestral") return SolverMethod::ancestral;
    throw ConfigError("unknown solver method: " + s);
}

void SolverConfig::validate() const {
    if (!(atol > 0.0) || !(rtol > 0.0)) throw ConfigError("solver tolerances must be positive");
    if (max_steps == 0) throw ConfigError("solver max_steps must be positive");
    if (fixed_steps == 0) throw ConfigError("solver fixed_steps must be positive");
}

Vec PfOdeField::operator()(std::span<const double> z, double t) const {
    const VPCoefficients c = field_->schedule().vp_coefficients(t);
    Vec s = field_->score(z, t);
    ++nfe_;
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = c.f * z[i] - 0.5 * c.g2 * s[i];
    return s;
}

Vec PfOdeField::vjp(std::span<const double> z, double t, std::span<const double> probe) const {
    const VPCoefficients c = field_->schedule().vp_coefficients(t);
    Vec sv = field_->score_vjp(z, t, probe);
    for (std::size_t i = 0; i < sv.size(); ++i) sv[i] = c.f * probe[i] - 0.5 * c.g2 * sv[i];
    return sv;
}

Rk45Result rk45_solve(const OdeRhs& rhs, Vec y0, double t0, double t1, const Rk45Options& opt,
                      const StepCallback& on_step) {
    if (!(opt.atol > 0.0) || !(opt.rtol > 0.0))
        throw ConfigError("rk45 tolerances must be positive");
    const std::size_t n = y0.size();
    Rk45Result res;
    res.y = std::move(y0);
    if (t0 == t1 || n == 0) return res;

    const double dir = t1 > t0 ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    constexpr double kSafety = 0.9, kMinScale = 0.2, kMaxScale = 10.0;
    constexpr double kAlpha = 0.7 / 5.0, kBeta = 0.4 / 5.0;  // PI exponents

    Vec k[7];
    k[0] = rhs(t0, res.y);
    ++res.rhs_evals;
    double h = dir * initial_step(rhs, t0, res.y, k[0], dir, span, opt.atol, opt.rtol,
                                  res.rhs_evals);

    double t = t0;
    double err_prev = 1.0;
    Vec ystage(n), ynew(n), yerr(n);
    while (t != t1) {
        if (res.steps_accepted + res.steps_rejected >= opt.max_steps)
            throw SolverError("adaptive solver exceeded max_steps", t);
        const double hmin =
            16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), std::abs(t1));
        if (std::abs(h) < hmin) throw SolverError("adaptive step size underflow", t);
        bool last = false;
        if ((t + h - t1) * dir >= 0.0) {
            h = t1 - t;
            last = true;
        }

        auto run_stage = [&](Vec& out, const double* a, std::size_t s, double c) {
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < s; ++j) acc += a[j] * k[j][i];
                ystage[i] = res.y[i] + h * acc;
            }
            out = rhs(t + c * h, ystage);
            ++res.rhs_evals;
        };
        run_stage(k[1], kA2, 1, kC2);
        run_stage(k[2], kA3, 2, kC3);
        run_stage(k[3], kA4, 3, kC4);
        run_stage(k[4], kA5, 4, kC5);
        run_stage(k[5], kA6, 5, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < 6; ++j) acc += kA7[j] * k[j][i];
            ynew[i] = res.y[i] + h * acc;
        }
        k[6] = rhs(t + h, ynew);
        ++res.rhs_evals;

        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < 7; ++j) acc += kErr[j] * k[j][i];
            yerr[i] = h * acc;
        }
        double err = scaled_rms(yerr, res.y, ynew, opt.atol, opt.rtol);
        if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();

        if (err <= 1.0) {
            t = last ? t1 : t + h;
            std::swap(res.y, ynew);
            std::swap(k[0], k[6]);  // FSAL: last stage is next first stage
            ++res.steps_accepted;
            if (on_step) on_step(t, res.y);
            double factor = err == 0.0 ? kMaxScale
                                       : kSafety * std::pow(err, -kAlpha) *
                                             std::pow(err_prev, kBeta);
            factor = std::clamp(factor, kMinScale, kMaxScale);
            err_prev = std::max(err, 1e-10);
            h *= factor;
        } else {
            ++res.steps_rejected;
            const double factor =
                std::isinf(err) ? kMinScale
                                : std::clamp(kSafety * std::pow(err, -0.2), kMinScale, 1.0);
            h *= factor;
        }
    }
    return res;
}

Trajectory integrate_pf_ode(const ScoreField& field, Vec z, double t_from, double t_to,
                            const SolverConfig& cfg) {
    cfg.validate();
    PfOdeField drift(field);
    OdeRhs rhs = [&](double t, std::span<const double> y) { return drift(y, t); };

    const double lo = std::min(t_from, t_to), hi = std::max(t_from, t_to);
    std::vector<double> cuts;
    for (double c : field.time_discontinuities())
        if (c > lo && c < hi) cuts.push_back(c);
    const bool backward = t_to < t_from;
    std::sort(cuts.begin(), cuts.end());
    if (backward) std::reverse(cuts.begin(), cuts.end());
    cuts.push_back(t_to);

    Rk45Options opt{cfg.atol, cfg.rtol, cfg.max_steps};
    Trajectory traj;
    traj.z = std::move(z);
    double t = t_from;
    for (double c : cuts) {
        Rk45Result r = rk45_solve(rhs, std::move(traj.z), t, c, opt);
        traj.z = std::move(r.y);
        t = c;
    }
    traj.t = t_to;
    traj.nfe = drift.nfe();
    return traj;
}

double SampleRun::nfe_mean() const {
    if (nfe.empty()) return 0.0;
    double s = 0.0;
    for (auto v : nfe) s += static_cast<double>(v);
    return s / static_cast<double>(nfe.size());
}

std::uint64_t SampleRun::nfe_max() const {
    std::uint64_t m = 0;
    for (auto v : nfe) m = std::max(m, v);
    return m;
}

SampleRun sample_ode(const ScoreField& field, std::size_t n, const SolverConfig& cfg,
                     std::size_t threads) {
    cfg.validate();
    const std::size_t d = field.dim();
    SampleRun run;
    run.samples = Matrix(n, d);
    run.nfe.assign(n, 0);
    parallel_for(n, static_cast<unsigned>(threads), [&](std::size_t i) {
        CounterRng rng(cfg.seed, tags::kOdePrior, i);
        Vec z(d);
        for (double& v : z) v = rng.normal();
        Trajectory tr = integrate_pf_ode(field, std::move(z), 1.0, 0.0, cfg);
        run.samples.set_row(i, tr.z);
        run.nfe[i] = tr.nfe;
    });
    return run;
}

SampleRun sample_sde(const ScoreField& field, std::size_t n, const SolverConfig& cfg,
                     std::size_t threads) {
    cfg.validate();
    const std::size_t d = field.dim();
    const std::size_t m = cfg.fixed_steps;
    const double dt = 1.0 / static_cast<double>(m);
    SampleRun run;
    run.samples = Matrix(n, d);
    run.nfe.assign(n, m);
    parallel_for(n, static_cast<unsigned>(threads), [&](std::size_t i) {
        CounterRng rng(cfg.seed, tags::kSde, i);
        Vec z(d);
        for (double& v : z) v = rng.normal();
        for (std::size_t s = 0; s < m; ++s) {
            const double t = 1.0 - static_cast<double>(s) * dt;
            const VPCoefficients c = field.schedule().vp_coefficients(t);
            const Vec sc = field.score(z, t);
            const double noise_sd = std::sqrt(c.g2 * dt);
            for (std::size_t j = 0; j < d; ++j) {
                const double drift = c.f * z[j] - c.g2 * sc[j];
                z[j] += -dt * drift + noise_sd * rng.normal();
            }
            if (!all_finite(z)) throw SolverError("reverse SDE state diverged", t - dt);
        }
        run.samples.set_row(i, z);
    });
    return run;
}

SampleRun sample_ancestral(const ScoreField& field, std::size_t n, const SolverConfig& cfg,
                           std::size_t threads) {
    cfg.validate();
    const std::size_t d = field.dim();
    const std::size_t m = cfg.fixed_steps;
    const double dt = 1.0 / static_cast<double>(m);
    const NoiseSchedule& sched = field.schedule();
    SampleRun run;
    run.samples = Matrix(n, d);
    run.nfe.assign(n, m);
    parallel_for(n, static_cast<unsigned>(threads), [&](std::size_t i) {
        CounterRng rng(cfg.seed, tags::kAncestral, i);
        Vec z(d), xhat(d);
        for (double& v : z) v = rng.normal();
        for (std::size_t k = 0; k < m; ++k) {
            const bool final_step = (k + 1 == m);
            const double t = 1.0 - static_cast<double>(k) * dt;
            const double s = final_step ? 0.0 : t - dt;
            const double gt = sched.gamma(t), gs = sched.gamma(s);
            double at, st, as, ss;
            vp_alpha_sigma(gt, at, st);
            vp_alpha_sigma(gs, as, ss);

            const Vec score = field.score(z, t);
            for (std::size_t j = 0; j < d; ++j) xhat[j] = (z[j] + st * st * score[j]) / at;

            // Forward posterior q(z_s | z_t, xhat): mean mixes z and the
            // reconstruction; variance sigma_s^2 (1 - e^{gamma_s - gamma_t}).
            const double a_ts = at / as;
            const double s2_ts = -(st * st) * std::expm1(gs - gt);
            const double cz = a_ts * (ss * ss) / (st * st);
            const double cx = as * s2_ts / (st * st);
            const double post_sd = final_step ? 0.0 : std::sqrt(-(ss * ss) * std::expm1(gs - gt));
            for (std::size_t j = 0; j < d; ++j)
                z[j] = cz * z[j] + cx * xhat[j] + post_sd * rng.normal();
            if (!all_finite(z)) throw SolverError("ancestral state diverged", s);
        }
        run.samples.set_row(i, z);
    });
    return run;
}

bool trajectory_prefix(const Expert& quality, const Expert& likelihood, double eta1, double eta2,
                       std::uint64_t seed, std::size_t steps) {
    if (!(eta1 <= eta2)) throw ConfigError("trajectory_prefix needs eta1 <= eta2");
    if (steps == 0) throw ConfigError("trajectory_prefix needs at least one step");
    const NoiseSchedule target =
        merged_schedule(quality.native_schedule(), likelihood.native_schedule());
    const MergedField fa(MergedExpert(quality, likelihood, target, eta1));
    const MergedField fb(MergedExpert(quality, likelihood, target, eta2));
    const PfOdeField ha(fa), hb(fb);

    CounterRng rng(seed, tags::kPrefix);
    Vec za(quality.dim());
    for (double& v : za) v = rng.normal();
    Vec zb = za;

    // States after field evaluations at times >= eta2 must be bitwise equal;
    // with eta1 == eta2 the whole trajectory must match.
    const double watch_from = eta1 == eta2 ? -1.0 : eta2;
    const double dt = 1.0 / static_cast<double>(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = 1.0 - static_cast<double>(k) * dt;
        const Vec da = ha(za, t);
        const Vec db = hb(zb, t);
        for (std::size_t j = 0; j < za.size(); ++j) {
            za[j] -= dt * da[j];
            zb[j] -= dt * db[j];
        }
        const double tn = 1.0 - static_cast<double>(k + 1) * dt;
        if (tn >= watch_from - 1e-12 &&
            std::memcmp(za.data(), zb.data(), za.size() * sizeof(double)) != 0)
            return false;
    }
    return true;
}

}  // namespace scoremerge
