#pragma once

#include <span>
#include <vector>

#include "scoremerge/expert.hpp"
#include "scoremerge/linalg.hpp"
#include "scoremerge/schedule.hpp"

namespace scoremerge {

/// Time u on the expert's schedule with the same log-SNR the target has at
/// t: u = gamma_inverse_expert(gamma_target(t)). Throws RangeError when the
/// target's gamma falls outside the expert's range.
double remap_time(const NoiseSchedule& target, const NoiseSchedule& expert, double t);

/// General cross-process adaptation at a known state scale c:
/// s(z, t) = c * expert_score(c z, u). The VP-to-VP case has c = 1; the
/// scaled form exists for non-VP pairings and is exercised with synthetic
/// scales in tests.
Vec adapt_score_scaled(const Expert& expert, double u, std::span<const double> z, double scale);

/// Adapt an expert to a foreign VP schedule by SNR matching. Matching gamma
/// on two VP processes forces matching alpha, so the state scale reduces to
/// 1; this is checked (|alpha_u/alpha_t - 1| < 1e-12) and the expert is then
/// queried directly at the remapped time.
Vec adapt_score(const Expert& expert, const NoiseSchedule& target, std::span<const double> z,
                double t);

/// probe^T d/dz of adapt_score at fixed t.
Vec adapt_score_vjp(const Expert& expert, const NoiseSchedule& target, std::span<const double> z,
                    double t, std::span<const double> probe);

/// Two experts composed over a shared target schedule with a hard handover
/// at eta: the quality expert owns t >= eta (high noise), the likelihood
/// expert owns t < eta. An optional blend half-width turns the switch into
/// a linear crossfade over [eta - w/2, eta + w/2]; the default w = 0 keeps
/// the hard switch. Immutable after construction.
class MergedExpert {
public:
    MergedExpert(Expert quality, Expert likelihood, NoiseSchedule target, double eta,
                 double blend_width = 0.0);

    const Expert& quality() const { return quality_; }
    const Expert& likelihood() const { return likelihood_; }
    const NoiseSchedule& target_schedule() const { return target_; }
    double eta() const { return eta_; }
    double blend_width() const { return blend_width_; }
    const SwitchingBounds& bounds() const { return bounds_; }
    std::size_t dim() const { return quality_.dim(); }

    Vec score(std::span<const double> z, double t) const;
    Vec score_vjp(std::span<const double> z, double t, std::span<const double> probe) const;

    /// Weight of the quality expert at time t (0, 1, or in between when
    /// blending).
    double quality_weight(double t) const;

private:
    Expert quality_;
    Expert likelihood_;
    NoiseSchedule target_;
    double eta_ = 0.0;
    double blend_width_ = 0.0;
    SwitchingBounds bounds_{};
};

/// A single expert adapted onto a foreign schedule, as a solver-ready field.
class AdaptedField final : public ScoreField {
public:
    AdaptedField(Expert expert, NoiseSchedule target);
    std::size_t dim() const override { return expert_.dim(); }
    const NoiseSchedule& schedule() const override { return target_; }
    Vec score(std::span<const double> z, double t) const override;
    Vec score_vjp(std::span<const double> z, double t,
                  std::span<const double> probe) const override;

private:
    Expert expert_;
    NoiseSchedule target_;
};

/// The merged model as a solver-ready field; advertises the switch time so
/// adaptive integrators can split around the discontinuity.
class MergedField final : public ScoreField {
public:
    explicit MergedField(MergedExpert merged) : merged_(std::move(merged)) {}
    std::size_t dim() const override { return merged_.dim(); }
    const NoiseSchedule& schedule() const override { return merged_.target_schedule(); }
    Vec score(std::span<const double> z, double t) const override { return merged_.score(z, t); }
    Vec score_vjp(std::span<const double> z, double t,
                  std::span<const double> probe) const override {
        return merged_.score_vjp(z, t, probe);
    }
    std::vector<double> time_discontinuities() const override;
    const MergedExpert& merged() const { return merged_; }

private:
    MergedExpert merged_;
};

}  // namespace scoremerge
