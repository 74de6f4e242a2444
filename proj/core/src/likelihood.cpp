#include "scoremerge/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scoremerge/errors.hpp"
#include "scoremerge/parallel.hpp"
#include "scoremerge/stats.hpp"
#include "stream_tags.hpp"

namespace scoremerge {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kLn2 = 0.6931471805599453;

Vec draw_probe(CounterRng& rng, std::size_t d, ProbeDist dist) {
    Vec p(d);
    if (dist == ProbeDist::rademacher)
        for (double& v : p) v = rng.rademacher();
    else
        for (double& v : p) v = rng.normal();
    return p;
}

double divergence_fixed_probes(const DiffVectorField& field, std::span<const double> z, double t,
                               const std::vector<Vec>& probes) {
    double acc = 0.0;
    for (const Vec& p : probes) acc += dot(field.vjp(z, t, p), p);
    return acc / static_cast<double>(probes.size());
}

double divergence_exact(const DiffVectorField& field, std::span<const double> z, double t) {
    const std::size_t d = field.dim();
    Vec basis(d, 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        basis[i] = 1.0;
        acc += field.vjp(z, t, basis)[i];
        basis[i] = 0.0;
    }
    return acc;
}

}  // namespace

std::string to_string(DivergenceMode m) {
    return m == DivergenceMode::exact ? "exact" : "hutchinson";
}

DivergenceMode divergence_mode_from_string(const std::string& s) {
    if (s == "exact") return DivergenceMode::exact;
    if (s == "hutchinson") return DivergenceMode::hutchinson;
    throw ConfigError("unknown divergence mode: " + s);
}

std::string to_string(ProbeDist p) {
    return p == ProbeDist::rademacher ? "rademacher" : "gaussian";
}

ProbeDist probe_dist_from_string(const std::string& s) {
    if (s == "rademacher") return ProbeDist::rademacher;
    if (s == "gaussian") return ProbeDist::gaussian;
    throw ConfigError("unknown probe distribution: " + s);
}

void DivergenceConfig::validate() const {
    if (probes == 0) throw ConfigError("divergence needs at least one probe");
}

double divergence(const DiffVectorField& field, std::span<const double> z, double t,
                  const DivergenceConfig& cfg, CounterRng& rng) {
    cfg.validate();
    if (cfg.mode == DivergenceMode::exact) return divergence_exact(field, z, t);
    double acc = 0.0;
    for (std::size_t p = 0; p < cfg.probes; ++p) {
        const Vec probe = draw_probe(rng, field.dim(), cfg.probe_dist);
        acc += dot(field.vjp(z, t, probe), probe);
    }
    return acc / static_cast<double>(cfg.probes);
}

double std_normal_logpdf(std::span<const double> z) {
    double q = 0.0;
    for (double v : z) q += v * v;
    return -0.5 * (static_cast<double>(z.size()) * kLog2Pi + q);
}

LoglikResult ode_loglik(const ScoreField& field, std::span<const double> z0,
                        const SolverConfig& solver, const DivergenceConfig& div_cfg,
                        std::uint64_t datum_index) {
    solver.validate();
    div_cfg.validate();
    const std::size_t d = field.dim();
    if (z0.size() != d) throw ShapeError("ode_loglik input has wrong dimension");
    if (!all_finite(z0)) throw DataError("ode_loglik input must be finite");

    PfOdeField drift(field);

    // Hutchinson probes are frozen for the whole solve; redrawing per RHS
    // evaluation would make the integrand non-smooth for the controller.
    std::vector<Vec> probes;
    if (div_cfg.mode == DivergenceMode::hutchinson) {
        CounterRng prng(solver.seed, tags::kProbe, datum_index);
        probes.reserve(div_cfg.probes);
        for (std::size_t p = 0; p < div_cfg.probes; ++p)
            probes.push_back(draw_probe(prng, d, div_cfg.probe_dist));
    }

    OdeRhs rhs = [&](double t, std::span<const double> y) {
        const std::span<const double> z = y.first(d);
        Vec out = drift(z, t);
        const double div = div_cfg.mode == DivergenceMode::exact
                               ? divergence_exact(drift, z, t)
                               : divergence_fixed_probes(drift, z, t, probes);
        out.push_back(div);
        return out;
    };

    const double lo = 0.0, hi = 1.0;
    std::vector<double> cuts;
    for (double c : field.time_discontinuities())
        if (c > lo && c < hi) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(hi);

    Rk45Options opt{solver.atol, solver.rtol, solver.max_steps};
    Vec y(z0.begin(), z0.end());
    y.push_back(0.0);
    double t = lo;
    for (double c : cuts) {
        Rk45Result r = rk45_solve(rhs, std::move(y), t, c, opt);
        y = std::move(r.y);
        t = c;
    }

    LoglikResult res;
    res.logp = std_normal_logpdf(std::span<const double>(y).first(d)) + y[d];
    res.nfe = drift.nfe();
    return res;
}

VlbResult vlb(const ScoreField& field, std::span<const double> x, std::size_t mc_t,
              std::uint64_t seed, std::uint64_t datum_index) {
    if (mc_t == 0) throw ConfigError("vlb needs at least one time draw");
    const std::size_t d = field.dim();
    if (x.size() != d) throw ShapeError("vlb input has wrong dimension");
    const NoiseSchedule& sched = field.schedule();

    VlbResult res;
    double a1, s1, a0, s0;
    vp_alpha_sigma(sched.gamma_max(), a1, s1);
    vp_alpha_sigma(sched.gamma_min(), a0, s0);
    const double dd = static_cast<double>(d);

    // KL( N(alpha_1 x, sigma_1^2 I) || N(0, I) ).
    res.prior = 0.5 * (a1 * a1 * dot(x, x) + dd * (s1 * s1 - 1.0 - 2.0 * std::log(s1)));
    // E_q -log p(x|z0) under the decoder N(x; z0/alpha0, (sigma0/alpha0)^2 I).
    res.recon = 0.5 * dd * (1.0 + kLog2Pi + std::log(s0 * s0 / (a0 * a0)));

    // Diffusion term: (1/2) int_0^1 g^2 E || s_theta(z_t) - grad log q(z_t|x) ||^2 dt,
    // stratified over t, one noise draw per stratum.
    CounterRng rng(seed, tags::kVlbTime, datum_index);
    Vec z(d), eps(d);
    std::vector<double> vals(mc_t);
    for (std::size_t i = 0; i < mc_t; ++i) {
        const double t =
            (static_cast<double>(i) + rng.uniform()) / static_cast<double>(mc_t);
        const VPCoefficients c = sched.vp_coefficients(t);
        for (std::size_t j = 0; j < d; ++j) {
            eps[j] = rng.normal();
            z[j] = c.alpha * x[j] + c.sigma * eps[j];
        }
        const Vec s = field.score(z, t);
        double q = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double r = s[j] + eps[j] / c.sigma;
            q += r * r;
        }
        vals[i] = 0.5 * c.g2 * q;
    }
    res.diffusion = mean(vals);
    res.std_error = mc_t > 1 ? sample_sd(vals) / std::sqrt(static_cast<double>(mc_t)) : 0.0;
    res.total = res.prior + res.recon + res.diffusion;
    return res;
}

std::string to_string(DequantMode m) {
    return m == DequantMode::uniform ? "uniform" : "truncated-normal";
}

DequantMode dequant_mode_from_string(const std::string& s) {
    if (s == "uniform") return DequantMode::uniform;
    if (s == "truncated-normal") return DequantMode::truncated_normal;
    throw ConfigError("unknown dequantization mode: " + s);
}

void DequantConfig::validate() const {
    if (bit_depth == 0 || bit_depth > 16) throw ConfigError("bit depth must be in [1, 16]");
    if (draws == 0) throw ConfigError("dequantization needs at least one draw");
    if (!(tn_sigma > 0.0)) throw ConfigError("truncated-normal sigma must be positive");
}

namespace {

// Dequantization noise u in [0,1) (bin-width units) and its log-density.
struct BinDraw {
    double u;
    double logq;
};

BinDraw draw_bin_noise(CounterRng& rng, const DequantConfig& deq) {
    if (deq.mode == DequantMode::uniform) return {rng.uniform(), 0.0};
    // Truncated normal centered on the bin, sd tn_sigma bin-widths,
    // truncated to the bin; sampled by inverse CDF.
    const double s = deq.tn_sigma;
    const double lo = normal_cdf(-0.5 / s), hi = normal_cdf(0.5 / s);
    const double p = lo + rng.uniform() * (hi - lo);
    const double xi = normal_inv_cdf(p);
    const double u = 0.5 + s * xi;
    const double logq =
        -std::log(s) - 0.5 * (kLog2Pi + xi * xi) - std::log(hi - lo);
    return {u, logq};
}

NLLResult aggregate(std::vector<double> per_nats, std::vector<std::uint64_t> per_nfe,
                    std::size_t dim, std::string bound_kind, bool has_bits) {
    NLLResult res;
    res.count = per_nats.size();
    res.bound_kind = std::move(bound_kind);
    const double dd = static_cast<double>(dim);
    res.nats_per_dim = mean(per_nats) / dd;
    res.nats_per_dim_se =
        per_nats.size() > 1
            ? sample_sd(per_nats) / std::sqrt(static_cast<double>(per_nats.size())) / dd
            : 0.0;
    if (has_bits) {
        res.bpd = res.nats_per_dim / kLn2;
        res.bpd_se = res.nats_per_dim_se / kLn2;
    } else {
        res.bpd = std::numeric_limits<double>::quiet_NaN();
        res.bpd_se = std::numeric_limits<double>::quiet_NaN();
    }
    double nfe_sum = 0.0;
    for (auto v : per_nfe) nfe_sum += static_cast<double>(v);
    res.nfe_mean = per_nfe.empty() ? 0.0 : nfe_sum / static_cast<double>(per_nfe.size());
    res.per_datum_nats = std::move(per_nats);
    res.per_datum_nfe = std::move(per_nfe);
    return res;
}

}  // namespace

NLLResult dequantized_nll(const ScoreField& field, const Matrix& x_discrete,
                          const DequantConfig& deq, const SolverConfig& solver,
                          const DivergenceConfig& div_cfg, std::size_t threads) {
    deq.validate();
    solver.validate();
    div_cfg.validate();
    const std::size_t d = field.dim();
    if (x_discrete.cols != d) throw ShapeError("dequantized_nll data has wrong dimension");
    const double levels = std::pow(2.0, static_cast<double>(deq.bit_depth));
    for (double v : x_discrete.data)
        if (!(v >= 0.0) || !(v < levels) || v != std::floor(v))
            throw DataError("discrete data entries must be integers in [0, 2^bit_depth)");

    const std::size_t n = x_discrete.rows;
    // Per-coordinate Jacobian of the bin -> [-1,1) map, in nats.
    const double bin_jacobian = (static_cast<double>(deq.bit_depth) - 1.0) * kLn2;
    std::vector<double> per_nats(n);
    std::vector<std::uint64_t> per_nfe(n, 0);
    parallel_for(n, static_cast<unsigned>(threads), [&](std::size_t i) {
        CounterRng rng(solver.seed, tags::kDequant, i);
        const double* xi = x_discrete.row(i);
        Vec y(d);
        double acc = 0.0;
        std::uint64_t nfe = 0;
        for (std::size_t r = 0; r < deq.draws; ++r) {
            double logq = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const BinDraw bd = draw_bin_noise(rng, deq);
                y[j] = 2.0 * (xi[j] + bd.u) / levels - 1.0;
                logq += bd.logq + bin_jacobian;
            }
            const LoglikResult lr =
                ode_loglik(field, y, solver, div_cfg, i * deq.draws + r);
            acc += -lr.logp + logq;
            nfe += lr.nfe;
        }
        per_nats[i] = acc / static_cast<double>(deq.draws);
        per_nfe[i] = nfe;
    });
    return aggregate(std::move(per_nats), std::move(per_nfe), d, "ode-elbo", true);
}

NLLResult ode_nll(const ScoreField& field, const Matrix& x, const SolverConfig& solver,
                  const DivergenceConfig& div_cfg, std::size_t threads) {
    solver.validate();
    div_cfg.validate();
    if (x.cols != field.dim()) throw ShapeError("ode_nll data has wrong dimension");
    const std::size_t n = x.rows;
    std::vector<double> per_nats(n);
    std::vector<std::uint64_t> per_nfe(n, 0);
    parallel_for(n, static_cast<unsigned>(threads), [&](std::size_t i) {
        const LoglikResult lr = ode_loglik(field, x.row_span(i), solver, div_cfg, i);
        per_nats[i] = -lr.logp;
        per_nfe[i] = lr.nfe;
    });
    return aggregate(std::move(per_nats), std::move(per_nfe), field.dim(), "ode-elbo", false);
}

NLLResult vlb_nll(const ScoreField& field, const Matrix& x, std::size_t mc_t, std::uint64_t seed,
                  std::size_t threads) {
    if (x.cols != field.dim()) throw ShapeError("vlb_nll data has wrong dimension");
    const std::size_t n = x.rows;
    std::vector<double> per_nats(n);
    std::vector<std::uint64_t> per_nfe(n, mc_t);
    parallel_for(n, static_cast<unsigned>(threads), [&](std::size_t i) {
        per_nats[i] = vlb(field, x.row_span(i), mc_t, seed, i).total;
    });
    return aggregate(std::move(per_nats), std::move(per_nfe), field.dim(), "vlb", false);
}

double bpd_convert(double nll_nats, std::size_t dim, std::size_t bit_depth) {
    if (dim == 0 || bit_depth == 0) throw ConfigError("bpd_convert needs dim, bit_depth >= 1");
    return nll_nats / (static_cast<double>(dim) * kLn2) + (static_cast<double>(bit_depth) - 1.0);
}

double bpd_invert(double bpd, std::size_t dim, std::size_t bit_depth) {
    if (dim == 0 || bit_depth == 0) throw ConfigError("bpd_invert needs dim, bit_depth >= 1");
    return (bpd - (static_cast<double>(bit_depth) - 1.0)) * static_cast<double>(dim) * kLn2;
}

}  // namespace scoremerge
