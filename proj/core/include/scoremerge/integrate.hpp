#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "scoremerge/expert.hpp"
#include "scoremerge/linalg.hpp"
#include "scoremerge/merge.hpp"

namespace scoremerge {

enum class SolverMethod { rk45, euler_maruyama, ancestral };

std::string to_string(SolverMethod m);
SolverMethod solver_method_from_string(const std::string& s);

struct SolverConfig {
    SolverMethod method = SolverMethod::rk45;
    double atol = 1e-5;
    double rtol = 1e-5;
    std::size_t max_steps = 100000;   // adaptive solver, per segment
    std::size_t fixed_steps = 256;    // stochastic methods
    std::uint64_t seed = 0;

    void validate() const;
};

/// Augmented integration state: position, current time, accumulated
/// divergence integral (nats), and score-evaluation count.
struct Trajectory {
    Vec z;
    double t = 0.0;
    double logp_delta = 0.0;
    std::uint64_t nfe = 0;
};

/// A time-indexed C^1 vector field with reverse-mode Jacobian products;
/// the interface the divergence estimators differentiate.
class DiffVectorField {
public:
    virtual ~DiffVectorField() = default;
    virtual std::size_t dim() const = 0;
    virtual Vec value(std::span<const double> z, double t) const = 0;
    virtual Vec vjp(std::span<const double> z, double t, std::span<const double> probe) const = 0;
};

/// Drift of the probability flow ODE, h(z,t) = f_t z - (g_t^2 / 2) s(z,t).
/// Each drift evaluation consumes exactly one score evaluation and bumps
/// the NFE counter; Jacobian products do not (they are not score calls).
class PfOdeField final : public DiffVectorField {
public:
    explicit PfOdeField(const ScoreField& field) : field_(&field) {}

    Vec operator()(std::span<const double> z, double t) const;

    std::size_t dim() const override { return field_->dim(); }
    Vec value(std::span<const double> z, double t) const override { return (*this)(z, t); }

    /// probe^T dh/dz at fixed t.
    Vec vjp(std::span<const double> z, double t, std::span<const double> probe) const override;

    const ScoreField& field() const { return *field_; }
    std::uint64_t nfe() const { return nfe_; }
    void reset_nfe() { nfe_ = 0; }

private:
    const ScoreField* field_;
    mutable std::uint64_t nfe_ = 0;
};

/// Adaptive Dormand-Prince 5(4) with FSAL and a PI step controller
/// (safety 0.9, exponents -0.14 / 0.08, step-scale clamp [0.2, 10]).
struct Rk45Options {
    double atol = 1e-5;
    double rtol = 1e-5;
    std::size_t max_steps = 100000;
};

struct Rk45Result {
    Vec y;
    std::size_t steps_accepted = 0;
    std::size_t steps_rejected = 0;
    std::size_t rhs_evals = 0;
};

using OdeRhs = std::function<Vec(double, std::span<const double>)>;
using StepCallback = std::function<void(double, std::span<const double>)>;

/// Integrates dy/dt = rhs(t, y) from t0 to t1 (either direction). Throws
/// SolverError (carrying the stuck time) when max_steps is exhausted or the
/// step size underflows. on_step, if set, sees every accepted (t, y).
Rk45Result rk45_solve(const OdeRhs& rhs, Vec y0, double t0, double t1, const Rk45Options& opt,
                      const StepCallback& on_step = {});

/// Solves the PF ODE for one state between arbitrary times, splitting the
/// interval at the field's advertised discontinuities so the adaptive
/// solver never steps across a switch.
Trajectory integrate_pf_ode(const ScoreField& field, Vec z, double t_from, double t_to,
                            const SolverConfig& cfg);

/// A batch of final states plus per-sample solver cost.
struct SampleRun {
    Matrix samples;
    std::vector<std::uint64_t> nfe;

    double nfe_mean() const;
    std::uint64_t nfe_max() const;
};

/// Draw n samples by integrating the PF ODE backward from z_1 ~ N(0, I).
/// Deterministic given cfg.seed; per-sample RNG streams make parallel runs
/// identical to serial ones.
SampleRun sample_ode(const ScoreField& field, std::size_t n, const SolverConfig& cfg,
                     std::size_t threads = 1);

/// Euler-Maruyama on the reverse SDE dz = [f z - g^2 s] dt + g dw, backward
/// from t=1 over cfg.fixed_steps uniform steps.
SampleRun sample_sde(const ScoreField& field, std::size_t n, const SolverConfig& cfg,
                     std::size_t threads = 1);

/// Discrete ancestral sampler on a uniform time grid: reconstruct
/// x = (z + sigma^2 s)/alpha, then draw from the forward posterior
/// q(z_s | z_t, x) with variance sigma_s^2 * (1 - exp(gamma_s - gamma_t));
/// the final step takes the posterior mean without noise.
SampleRun sample_ancestral(const ScoreField& field, std::size_t n, const SolverConfig& cfg,
                           std::size_t threads = 1);

/// Shared-seed comparison of two merged models switching at eta1 < eta2:
/// integrates both backward with a fixed-step Euler scheme and verifies the
/// states agree bitwise at every grid time at or above eta2.
bool trajectory_prefix(const Expert& quality, const Expert& likelihood, double eta1, double eta2,
                       std::uint64_t seed, std::size_t steps = 256);

}  // namespace scoremerge
