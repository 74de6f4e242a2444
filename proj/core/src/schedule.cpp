#include "scoremerge/schedule.hpp"

#include <cmath>

#include "scoremerge/errors.hpp"
#include "scoremerge/linalg.hpp"

namespace scoremerge {

std::string to_string(ScheduleForm f) {
    switch (f) {
        case ScheduleForm::linear: return "linear";
    }
    throw ConfigError("unknown schedule form tag");
}

ScheduleForm schedule_form_from_string(const std::string& s) {
    if (s == "linear") return ScheduleForm::linear;
    throw ConfigError("unknown schedule form: " + s);
}

NoiseSchedule::NoiseSchedule(double gamma_min, double gamma_max, ScheduleForm form)
    : gamma_min_(gamma_min), gamma_max_(gamma_max), form_(form) {
    if (!(std::isfinite(gamma_min) && std::isfinite(gamma_max)))
        throw ConfigError("schedule gamma endpoints must be finite");
    if (!(gamma_min < gamma_max))
        throw ConfigError("schedule requires gamma_min < gamma_max");
}

double NoiseSchedule::gamma(double t) const {
    if (!(t >= 0.0 && t <= 1.0))
        throw DomainError("gamma: t outside [0,1]");
    // Exact at both endpoints.
    if (t == 0.0) return gamma_min_;
    if (t == 1.0) return gamma_max_;
    return gamma_min_ + t * (gamma_max_ - gamma_min_);
}

double NoiseSchedule::gamma_inverse(double g) const {
    if (!(g >= gamma_min_ && g <= gamma_max_))
        throw RangeError("gamma_inverse: value outside schedule range");
    if (g == gamma_min_) return 0.0;
    if (g == gamma_max_) return 1.0;
    return (g - gamma_min_) / (gamma_max_ - gamma_min_);
}

double NoiseSchedule::gamma_dot(double t) const {
    if (!(t >= 0.0 && t <= 1.0))
        throw DomainError("gamma_dot: t outside [0,1]");
    return gamma_max_ - gamma_min_;
}

void vp_alpha_sigma(double g, double& alpha, double& sigma) {
    alpha = std::sqrt(logistic(-g));
    sigma = std::sqrt(logistic(g));
}

VPCoefficients NoiseSchedule::vp_coefficients(double t) const {
    double g = gamma(t);
    double gdot = gamma_dot(t);
    VPCoefficients c{};
    vp_alpha_sigma(g, c.alpha, c.sigma);
    double sigma2 = logistic(g);
    // f = d log(alpha)/dt = -1/2 sigma^2 dgamma/dt,
    // g^2 = alpha^2 d(sigma^2/alpha^2)/dt = sigma^2 dgamma/dt.
    c.f = -0.5 * sigma2 * gdot;
    c.g2 = sigma2 * gdot;
    return c;
}

SwitchingBounds switching_bounds(const NoiseSchedule& quality,
                                 const NoiseSchedule& likelihood) {
    double ql = quality.gamma_min(), qh = quality.gamma_max();
    double ll = likelihood.gamma_min(), lh = likelihood.gamma_max();
    // Ordering chain: ll <= ql <= lh <= qh, with a non-empty merged span.
    if (ql < ll)
        throw ConfigError("switching_bounds: quality range starts below likelihood range");
    if (lh > qh)
        throw ConfigError("switching_bounds: likelihood range ends above quality range");
    if (ql > lh)
        throw ConfigError("switching_bounds: expert gamma ranges do not overlap");
    double span = qh - ll;
    if (!(span > 0.0))
        throw ConfigError("switching_bounds: empty merged range");
    return {(ql - ll) / span, (lh - ll) / span};
}

NoiseSchedule merged_schedule(const NoiseSchedule& quality,
                              const NoiseSchedule& likelihood) {
    switching_bounds(quality, likelihood);  // validates the ordering chain
    return NoiseSchedule(likelihood.gamma_min(), quality.gamma_max());
}

}  // namespace scoremerge
