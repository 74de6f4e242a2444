#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scoremerge/integrate.hpp"
#include "scoremerge/linalg.hpp"
#include "scoremerge/rng.hpp"

namespace scoremerge {

enum class DivergenceMode { exact, hutchinson };
enum class ProbeDist { rademacher, gaussian };

std::string to_string(DivergenceMode m);
DivergenceMode divergence_mode_from_string(const std::string& s);
std::string to_string(ProbeDist p);
ProbeDist probe_dist_from_string(const std::string& s);

struct DivergenceConfig {
    DivergenceMode mode = DivergenceMode::exact;
    std::size_t probes = 1;  // hutchinson only
    ProbeDist probe_dist = ProbeDist::rademacher;

    void validate() const;
};

/// Divergence (Jacobian trace) of a vector field at one point. Exact mode
/// sums d coordinate Jacobian products; hutchinson mode averages
/// probe^T J probe over random probes with identity covariance, an
/// unbiased trace estimate.
double divergence(const DiffVectorField& field, std::span<const double> z, double t,
                  const DivergenceConfig& cfg, CounterRng& rng);

double std_normal_logpdf(std::span<const double> z);

struct LoglikResult {
    double logp = 0.0;  // nats
    std::uint64_t nfe = 0;
};

/// Exact model log-density of z0 under the PF ODE flow: integrates the
/// state jointly with the accumulated divergence from t=0 to t=1, then adds
/// the N(0,I) prior log-density of the endpoint. Hutchinson probes are
/// drawn once per solve from a per-datum counter stream, so results are
/// deterministic and parallel-safe.
LoglikResult ode_loglik(const ScoreField& field, std::span<const double> z0,
                        const SolverConfig& solver, const DivergenceConfig& div_cfg,
                        std::uint64_t datum_index = 0);

struct VlbResult {
    double total = 0.0;      // nats, upper bound on -log p(x)
    double std_error = 0.0;  // MC error of the diffusion term
    double prior = 0.0;
    double recon = 0.0;
    double diffusion = 0.0;
};

/// Variational bound for continuous data x: closed-form prior KL and
/// reconstruction terms plus a stratified Monte Carlo diffusion term over
/// mc_t time draws. The decoder is the forward-posterior-proportional
/// choice N(x; z0/alpha0, (sigma0/alpha0)^2 I), whose expected term is
/// d/2 (1 + log(2 pi sigma0^2/alpha0^2)) in closed form.
VlbResult vlb(const ScoreField& field, std::span<const double> x, std::size_t mc_t,
              std::uint64_t seed, std::uint64_t datum_index = 0);

enum class DequantMode { uniform, truncated_normal };

std::string to_string(DequantMode m);
DequantMode dequant_mode_from_string(const std::string& s);

struct DequantConfig {
    DequantMode mode = DequantMode::uniform;
    std::size_t bit_depth = 8;
    double tn_sigma = 0.25;  // truncated-normal sd, in bin widths
    std::size_t draws = 1;   // dequantization draws per datum

    void validate() const;
};

struct NLLResult {
    double nats_per_dim = 0.0;
    double nats_per_dim_se = 0.0;
    double bpd = 0.0;     // NaN when no bit depth applies
    double bpd_se = 0.0;  // NaN when no bit depth applies
    double nfe_mean = 0.0;
    std::string bound_kind;  // "ode-elbo" or "vlb"
    std::size_t count = 0;
    std::vector<double> per_datum_nats;  // total nats per datum
    std::vector<std::uint64_t> per_datum_nfe;
};

/// Discrete-data NLL bound via dequantization: per draw, z0 ~ q(z0|x) over
/// the value's bin (mapped to [-1,1) at the given bit depth), bound
/// contribution -ode_loglik(z0) + log q(z0|x). Reported in nats/dim and
/// BPD. Entries of x_discrete must be integers in [0, 2^bit_depth).
NLLResult dequantized_nll(const ScoreField& field, const Matrix& x_discrete,
                          const DequantConfig& deq, const SolverConfig& solver,
                          const DivergenceConfig& div_cfg, std::size_t threads = 1);

/// Continuous-data NLL via ode_loglik over a test set (bound_kind ode-elbo;
/// exact up to solver tolerance for exact divergence).
NLLResult ode_nll(const ScoreField& field, const Matrix& x, const SolverConfig& solver,
                  const DivergenceConfig& div_cfg, std::size_t threads = 1);

/// Continuous-data NLL via the variational bound over a test set.
NLLResult vlb_nll(const ScoreField& field, const Matrix& x, std::size_t mc_t, std::uint64_t seed,
                  std::size_t threads = 1);

/// Model nats in y-space (uniform dequantization convention, data mapped to
/// [-1,1)) to bits/dimension: nll_nats/(dim ln2) + (bit_depth - 1).
double bpd_convert(double nll_nats, std::size_t dim, std::size_t bit_depth);

/// Inverse of bpd_convert.
double bpd_invert(double bpd, std::size_t dim, std::size_t bit_depth);

}  // namespace scoremerge
