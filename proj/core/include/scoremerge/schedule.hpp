#pragma once

#include <cstdint>
#include <string>

namespace scoremerge {

enum class ScheduleForm : std::uint32_t { linear = 0 };

std::string to_string(ScheduleForm f);
ScheduleForm schedule_form_from_string(const std::string& s);

/// Variance-preserving coefficients at one time point.
///
/// alpha/sigma are the signal/noise scales, f the SDE drift coefficient
/// d log(alpha)/dt and g2 the squared diffusion coefficient. All derived
/// in closed form from the schedule; alpha^2 + sigma^2 = 1 by construction.
struct VPCoefficients {
    double alpha;
    double sigma;
    double f;
    double g2;
};

/// Noise schedule as a map t -> gamma (negative log-SNR), strictly
/// increasing on [0, 1]. The gamma coordinate is where experts trained
/// under different schedules are aligned, so everything downstream works
/// through this type.
class NoiseSchedule {
  public:
    NoiseSchedule(double gamma_min, double gamma_max,
                  ScheduleForm form = ScheduleForm::linear);

    double gamma_min() const { return gamma_min_; }
    double gamma_max() const { return gamma_max_; }
    ScheduleForm form() const { return form_; }

    /// gamma at time t in [0, 1]. Throws DomainError outside.
    double gamma(double t) const;

    /// Time with the given gamma. Throws RangeError if g is outside
    /// [gamma_min, gamma_max].
    double gamma_inverse(double g) const;

    /// d gamma / dt, closed form per schedule form.
    double gamma_dot(double t) const;

    bool covers(double g) const { return g >= gamma_min_ && g <= gamma_max_; }

    VPCoefficients vp_coefficients(double t) const;

    bool operator==(const NoiseSchedule& o) const = default;

  private:
    double gamma_min_;
    double gamma_max_;
    ScheduleForm form_;
};

/// VP coefficients at a given gamma (schedule-independent part):
/// sigma^2 = logistic(gamma), alpha^2 = logistic(-gamma).
void vp_alpha_sigma(double gamma, double& alpha, double& sigma);

/// Feasible switching interval for a hard-switch merge of a quality expert
/// (covers high gamma) and a likelihood expert (covers low gamma) under the
/// merged linear schedule spanning likelihood gamma_min .. quality gamma_max.
/// Throws ConfigError when the ranges do not overlap or are mis-ordered.
struct SwitchingBounds {
    double eta_min;
    double eta_max;
};
SwitchingBounds switching_bounds(const NoiseSchedule& quality,
                                 const NoiseSchedule& likelihood);

/// The merged schedule itself: linear in t from likelihood gamma_min to
/// quality gamma_max.
NoiseSchedule merged_schedule(const NoiseSchedule& quality,
                              const NoiseSchedule& likelihood);

}  // namespace scoremerge
