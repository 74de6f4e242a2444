#include "scoremerge/gmm.hpp"

#include <cmath>
#include <numeric>

#include "scoremerge/errors.hpp"

namespace scoremerge {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

// Per-component noised moments at time t: mean scale alpha and total
// variance alpha^2 v_k + sigma^2.
struct NoisedMoments {
    double alpha;
    std::vector<double> s2;  // K entries
};

NoisedMoments noised_moments(const GaussianMixtureSpec& spec, const NoiseSchedule& schedule,
                             double t) {
    double alpha, sigma;
    vp_alpha_sigma(schedule.gamma(t), alpha, sigma);
    NoisedMoments m;
    m.alpha = alpha;
    m.s2.resize(spec.components());
    const double sigma2 = sigma * sigma;
    for (std::size_t k = 0; k < spec.components(); ++k) {
        m.s2[k] = alpha * alpha * spec.variances[k] + sigma2;
        if (!(m.s2[k] > 0.0))
            throw DomainError("gmm marginal has zero variance at t=" + std::to_string(t));
    }
    return m;
}

// log w_k + log N(z; alpha m_k, s2_k I) for every component.
std::vector<double> component_logliks(const GaussianMixtureSpec& spec, const NoisedMoments& m,
                                      std::span<const double> z) {
    if (z.size() != spec.dim) throw ShapeError("gmm input has wrong dimension");
    const double d = static_cast<double>(spec.dim);
    std::vector<double> ll(spec.components());
    for (std::size_t k = 0; k < spec.components(); ++k) {
        auto mk = spec.mean(k);
        double q = 0.0;
        for (std::size_t i = 0; i < spec.dim; ++i) {
            const double r = z[i] - m.alpha * mk[i];
            q += r * r;
        }
        ll[k] = std::log(spec.weights[k]) - 0.5 * (d * (kLog2Pi + std::log(m.s2[k])) + q / m.s2[k]);
    }
    return ll;
}

std::vector<double> responsibilities(std::vector<double> loglik) {
    const double lse = log_sum_exp(loglik);
    for (double& v : loglik) v = std::exp(v - lse);
    return loglik;
}

}  // namespace

void GaussianMixtureSpec::validate() const {
    if (dim == 0) throw ConfigError("gmm dim must be positive");
    const std::size_t k = components();
    if (k == 0) throw ConfigError("gmm needs at least one component");
    if (means.size() != k * dim) throw ConfigError("gmm means size must be components*dim");
    if (variances.size() != k) throw ConfigError("gmm variances size must match weights");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw ConfigError("gmm weights must be positive");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("gmm weights must sum to 1");
    for (double v : variances)
        if (!(v > 0.0)) throw ConfigError("gmm variances must be positive");
    for (double m : means)
        if (!std::isfinite(m)) throw ConfigError("gmm means must be finite");
}

GaussianMixtureSpec GaussianMixtureSpec::single(std::size_t dim, double mean, double variance) {
    GaussianMixtureSpec s;
    s.dim = dim;
    s.weights = {1.0};
    s.means.assign(dim, mean);
    s.variances = {variance};
    return s;
}

Vec gmm_marginal_score(const GaussianMixtureSpec& spec, const NoiseSchedule& schedule,
                       std::span<const double> z, double t) {
    const auto m = noised_moments(spec, schedule, t);
    const auto resp = responsibilities(component_logliks(spec, m, z));
    Vec score(spec.dim, 0.0);
    for (std::size_t k = 0; k < spec.components(); ++k) {
        auto mk = spec.mean(k);
        const double c = resp[k] / m.s2[k];
        for (std::size_t i = 0; i < spec.dim; ++i) score[i] -= c * (z[i] - m.alpha * mk[i]);
    }
    return score;
}

Vec gmm_marginal_score_vjp(const GaussianMixtureSpec& spec, const NoiseSchedule& schedule,
                           std::span<const double> z, double t, std::span<const double> probe) {
    if (probe.size() != spec.dim) throw ShapeError("gmm probe has wrong dimension");
    const auto m = noised_moments(spec, schedule, t);
    const auto resp = responsibilities(component_logliks(spec, m, z));

    // With u_k = -(z - alpha m_k)/s2_k and sbar = sum_k r_k u_k, the Jacobian
    // of the mixture score is sum_k r_k u_k u_k^T - sbar sbar^T - (sum_k r_k/s2_k) I,
    // which is the Hessian of log q and symmetric.
    Vec sbar(spec.dim, 0.0);
    std::vector<Vec> u(spec.components(), Vec(spec.dim));
    double trace_coef = 0.0;
    for (std::size_t k = 0; k < spec.components(); ++k) {
        auto mk = spec.mean(k);
        for (std::size_t i = 0; i < spec.dim; ++i) {
            u[k][i] = -(z[i] - m.alpha * mk[i]) / m.s2[k];
            sbar[i] += resp[k] * u[k][i];
        }
        trace_coef += resp[k] / m.s2[k];
    }
    Vec out(spec.dim);
    const double probe_sbar = dot(probe, sbar);
    for (std::size_t i = 0; i < spec.dim; ++i)
        out[i] = -probe_sbar * sbar[i] - trace_coef * probe[i];
    for (std::size_t k = 0; k < spec.components(); ++k) {
        const double pu = resp[k] * dot(probe, u[k]);
        for (std::size_t i = 0; i < spec.dim; ++i) out[i] += pu * u[k][i];
    }
    return out;
}

double gmm_marginal_logpdf(const GaussianMixtureSpec& spec, const NoiseSchedule& schedule,
                           std::span<const double> z, double t) {
    const auto m = noised_moments(spec, schedule, t);
    return log_sum_exp(component_logliks(spec, m, z));
}

double gmm_logpdf(const GaussianMixtureSpec& spec, std::span<const double> z) {
    if (z.size() != spec.dim) throw ShapeError("gmm input has wrong dimension");
    const double d = static_cast<double>(spec.dim);
    std::vector<double> ll(spec.components());
    for (std::size_t k = 0; k < spec.components(); ++k) {
        auto mk = spec.mean(k);
        double q = 0.0;
        for (std::size_t i = 0; i < spec.dim; ++i) {
            const double r = z[i] - mk[i];
            q += r * r;
        }
        ll[k] = std::log(spec.weights[k]) -
                0.5 * (d * (kLog2Pi + std::log(spec.variances[k])) + q / spec.variances[k]);
    }
    return log_sum_exp(ll);
}

Vec gmm_sample(const GaussianMixtureSpec& spec, CounterRng& rng) {
    const double u = rng.uniform();
    std::size_t k = 0;
    double acc = 0.0;
    for (; k + 1 < spec.components(); ++k) {
        acc += spec.weights[k];
        if (u < acc) break;
    }
    auto mk = spec.mean(k);
    const double sd = std::sqrt(spec.variances[k]);
    Vec x(spec.dim);
    for (std::size_t i = 0; i < spec.dim; ++i) x[i] = mk[i] + sd * rng.normal();
    return x;
}

}  // namespace scoremerge
