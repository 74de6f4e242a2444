#pragma once

#include <span>
#include <vector>

#include "scoremerge/linalg.hpp"
#include "scoremerge/rng.hpp"
#include "scoremerge/schedule.hpp"

namespace scoremerge {

/// Isotropic Gaussian mixture over R^dim. Serves as the analytic data
/// distribution whose noised marginals have closed-form scores, so solvers
/// and likelihood bounds can be checked against exact answers.
struct GaussianMixtureSpec {
    std::size_t dim = 0;
    std::vector<double> weights;    // positive, sum to 1
    std::vector<double> means;      // component-major, K * dim
    std::vector<double> variances;  // per-component isotropic variance

    std::size_t components() const { return weights.size(); }
    std::span<const double> mean(std::size_t k) const { return {means.data() + k * dim, dim}; }

    /// Throws ConfigError unless weights/means/variances are consistent.
    void validate() const;

    static GaussianMixtureSpec single(std::size_t dim, double mean, double variance);
    static GaussianMixtureSpec unit_gaussian(std::size_t dim) { return single(dim, 0.0, 1.0); }
};

/// Score of the noised marginal q(z_t) when data ~ spec and the forward
/// process is the VP schedule: component k noises to
/// N(alpha_t m_k, (alpha_t^2 v_k + sigma_t^2) I), and the mixture score is
/// the responsibility-weighted sum of component scores. Exact up to
/// floating point; responsibilities are computed with log-sum-exp.
Vec gmm_marginal_score(const GaussianMixtureSpec& spec, const NoiseSchedule& schedule,
                       std::span<const double> z, double t);

/// probe^T d(score)/dz of the marginal score above, in closed form.
Vec gmm_marginal_score_vjp(const GaussianMixtureSpec& spec, const NoiseSchedule& schedule,
                           std::span<const double> z, double t, std::span<const double> probe);

/// log q(z_t) of the noised marginal (log density of the mixture).
double gmm_marginal_logpdf(const GaussianMixtureSpec& spec, const NoiseSchedule& schedule,
                           std::span<const double> z, double t);

/// log density of the raw (t-free) mixture itself.
double gmm_logpdf(const GaussianMixtureSpec& spec, std::span<const double> z);

/// Draw one sample from the mixture.
Vec gmm_sample(const GaussianMixtureSpec& spec, CounterRng& rng);

}  // namespace scoremerge
