#include "scoremerge/merge.hpp"

#include <cmath>
#include <string>

#include "scoremerge/errors.hpp"

namespace scoremerge {

double remap_time(const NoiseSchedule& target, const NoiseSchedule& expert, double t) {
    return expert.gamma_inverse(target.gamma(t));
}

Vec adapt_score_scaled(const Expert& expert, double u, std::span<const double> z, double scale) {
    if (!(scale > 0.0)) throw DomainError("adapt_score_scaled: scale must be positive");
    Vec zs(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) zs[i] = scale * z[i];
    Vec s = expert.score(zs, u);
    for (double& v : s) v *= scale;
    return s;
}

namespace {

double vp_state_scale(const NoiseSchedule& target, const NoiseSchedule& expert, double t,
                      double u) {
    double a_t, s_t, a_u, s_u;
    vp_alpha_sigma(target.gamma(t), a_t, s_t);
    vp_alpha_sigma(expert.gamma(u), a_u, s_u);
    const double c = a_u / a_t;
    if (std::abs(c - 1.0) > 1e-12)
        throw DomainError("adapt_score: VP state scale deviates from 1 (SNR match broken)");
    return c;
}

}  // namespace

Vec adapt_score(const Expert& expert, const NoiseSchedule& target, std::span<const double> z,
                double t) {
    const double u = remap_time(target, expert.native_schedule(), t);
    vp_state_scale(target, expert.native_schedule(), t, u);
    return expert.score(z, u);
}

Vec adapt_score_vjp(const Expert& expert, const NoiseSchedule& target, std::span<const double> z,
                    double t, std::span<const double> probe) {
    const double u = remap_time(target, expert.native_schedule(), t);
    vp_state_scale(target, expert.native_schedule(), t, u);
    return expert.score_vjp(z, u, probe);
}

MergedExpert::MergedExpert(Expert quality, Expert likelihood, NoiseSchedule target, double eta,
                           double blend_width)
    : quality_(std::move(quality)),
      likelihood_(std::move(likelihood)),
      target_(std::move(target)),
      eta_(eta),
      blend_width_(blend_width) {
    if (quality_.dim() != likelihood_.dim())
        throw ConfigError("merged experts must share a data dimension");
    bounds_ = switching_bounds(quality_.native_schedule(), likelihood_.native_schedule());
    const NoiseSchedule expected =
        merged_schedule(quality_.native_schedule(), likelihood_.native_schedule());
    if (std::abs(target_.gamma_min() - expected.gamma_min()) > 1e-12 ||
        std::abs(target_.gamma_max() - expected.gamma_max()) > 1e-12)
        throw ConfigError("target schedule must span likelihood gamma_min to quality gamma_max");
    if (!(blend_width_ >= 0.0)) throw ConfigError("blend width must be nonnegative");
    const double lo = eta_ - 0.5 * blend_width_;
    const double hi = eta_ + 0.5 * blend_width_;
    if (!(lo >= bounds_.eta_min && hi <= bounds_.eta_max))
        throw ConfigError("eta " + std::to_string(eta_) + " (blend half-width " +
                          std::to_string(0.5 * blend_width_) + ") outside feasible range [" +
                          std::to_string(bounds_.eta_min) + ", " + std::to_string(bounds_.eta_max) +
                          "]");
}

double MergedExpert::quality_weight(double t) const {
    if (blend_width_ == 0.0) return t >= eta_ ? 1.0 : 0.0;
    const double lo = eta_ - 0.5 * blend_width_;
    const double w = (t - lo) / blend_width_;
    return w <= 0.0 ? 0.0 : (w >= 1.0 ? 1.0 : w);
}

Vec MergedExpert::score(std::span<const double> z, double t) const {
    const double w = quality_weight(t);
    if (w == 1.0) return adapt_score(quality_, target_, z, t);
    if (w == 0.0) return adapt_score(likelihood_, target_, z, t);
    Vec q = adapt_score(quality_, target_, z, t);
    Vec l = adapt_score(likelihood_, target_, z, t);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = w * q[i] + (1.0 - w) * l[i];
    return q;
}

Vec MergedExpert::score_vjp(std::span<const double> z, double t,
                            std::span<const double> probe) const {
    const double w = quality_weight(t);
    if (w == 1.0) return adapt_score_vjp(quality_, target_, z, t, probe);
    if (w == 0.0) return adapt_score_vjp(likelihood_, target_, z, t, probe);
    Vec q = adapt_score_vjp(quality_, target_, z, t, probe);
    Vec l = adapt_score_vjp(likelihood_, target_, z, t, probe);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = w * q[i] + (1.0 - w) * l[i];
    return q;
}

AdaptedField::AdaptedField(Expert expert, NoiseSchedule target)
    : expert_(std::move(expert)), target_(std::move(target)) {
    // Fail fast if the expert cannot cover any of the target's range; point
    // queries outside the overlap still throw per-call.
    if (target_.gamma_min() > expert_.native_schedule().gamma_max() ||
        target_.gamma_max() < expert_.native_schedule().gamma_min())
        throw ConfigError("expert range does not overlap target schedule");
}

Vec AdaptedField::score(std::span<const double> z, double t) const {
    return adapt_score(expert_, target_, z, t);
}

Vec AdaptedField::score_vjp(std::span<const double> z, double t,
                            std::span<const double> probe) const {
    return adapt_score_vjp(expert_, target_, z, t, probe);
}

std::vector<double> MergedField::time_discontinuities() const {
    std::vector<double> ts;
    const double eta = merged_.eta();
    const double w = merged_.blend_width();
    if (w == 0.0) {
        if (eta > 0.0 && eta < 1.0) ts.push_back(eta);
    } else {
        // The crossfade is continuous but kinked at its edges; splitting
        // there keeps the adaptive solver's error model honest.
        for (double s : {eta - 0.5 * w, eta + 0.5 * w})
            if (s > 0.0 && s < 1.0) ts.push_back(s);
    }
    return ts;
}

}  // namespace scoremerge
