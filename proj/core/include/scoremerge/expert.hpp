#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scoremerge/gmm.hpp"
#include "scoremerge/linalg.hpp"
#include "scoremerge/schedule.hpp"
#include "scoremerge/scorenet.hpp"

namespace scoremerge {

enum class ModelKind { analytic_gaussian, analytic_gmm, neural_net };
enum class ParamKind { score, noise, data, velocity };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ParamKind kind);
ParamKind param_kind_from_string(const std::string& s);

/// Convert a model's raw output to a score, given the VP coefficients at the
/// query point. noise: s = -eps/sigma. data: s = (alpha x - z)/sigma^2.
/// velocity: recover eps = sigma z + alpha v first. score: identity.
Vec to_score(std::span<const double> raw, ParamKind kind, double alpha, double sigma,
             std::span<const double> z);

/// Inverse of to_score: express a score in the given parameterization.
Vec from_score(std::span<const double> score, ParamKind kind, double alpha, double sigma,
               std::span<const double> z);

/// A score model bound to the noise schedule it was derived or trained
/// under. Queries use the native time coordinate u in [0,1]; anything whose
/// log-SNR falls outside the native range is rejected, never extrapolated.
/// Immutable after construction, so concurrent evaluation is safe.
class Expert {
public:
    static Expert analytic(GaussianMixtureSpec spec, NoiseSchedule native);
    static Expert neural(ScoreNet net, NoiseSchedule native, ParamKind kind);

    ModelKind model() const { return model_; }
    ParamKind param_kind() const { return param_kind_; }
    std::size_t dim() const { return dim_; }
    const NoiseSchedule& native_schedule() const { return native_; }

    /// Marginal score at native time u.
    Vec score(std::span<const double> z, double u) const;

    /// probe^T d(score)/dz at native time u.
    Vec score_vjp(std::span<const double> z, double u, std::span<const double> probe) const;

    bool is_analytic() const { return model_ != ModelKind::neural_net; }
    const GaussianMixtureSpec& gmm() const;
    const ScoreNet& net() const;
    ScoreNet& net();

    /// Raw (non-EMA) parameters kept alongside the active ones for
    /// persistence; empty for analytic models or when unavailable.
    std::span<const double> raw_params() const { return raw_params_; }
    void set_raw_params(std::vector<double> p);

private:
    Expert() = default;

    ModelKind model_ = ModelKind::analytic_gaussian;
    ParamKind param_kind_ = ParamKind::score;
    std::size_t dim_ = 0;
    NoiseSchedule native_{-1.0, 1.0};  // replaced by the factory functions
    std::optional<GaussianMixtureSpec> gmm_;
    std::optional<ScoreNet> net_;
    std::vector<double> raw_params_;
};

/// Score field over a target schedule: what the solvers and the likelihood
/// machinery consume. Implementations are pure; callers track NFE.
class ScoreField {
public:
    virtual ~ScoreField() = default;
    virtual std::size_t dim() const = 0;
    virtual const NoiseSchedule& schedule() const = 0;
    virtual Vec score(std::span<const double> z, double t) const = 0;
    virtual Vec score_vjp(std::span<const double> z, double t,
                          std::span<const double> probe) const = 0;
    /// Interior times where the field may jump (e.g. a hard expert switch).
    virtual std::vector<double> time_discontinuities() const { return {}; }
};

/// An expert evaluated on its own native schedule.
class ExpertField final : public ScoreField {
public:
    explicit ExpertField(Expert expert) : expert_(std::move(expert)) {}
    std::size_t dim() const override { return expert_.dim(); }
    const NoiseSchedule& schedule() const override { return expert_.native_schedule(); }
    Vec score(std::span<const double> z, double t) const override { return expert_.score(z, t); }
    Vec score_vjp(std::span<const double> z, double t,
                  std::span<const double> probe) const override {
        return expert_.score_vjp(z, t, probe);
    }
    const Expert& expert() const { return expert_; }

private:
    Expert expert_;
};

}  // namespace scoremerge
