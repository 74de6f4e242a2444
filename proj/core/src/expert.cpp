#include "scoremerge/expert.hpp"

#include "scoremerge/errors.hpp"

namespace scoremerge {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::analytic_gaussian: return "analytic-gaussian";
        case ModelKind::analytic_gmm: return "analytic-gmm";
        case ModelKind::neural_net: return "neural-net";
    }
    throw ConfigError("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "analytic-gaussian") return ModelKind::analytic_gaussian;
    if (s == "analytic-gmm") return ModelKind::analytic_gmm;
    if (s == "neural-net") return ModelKind::neural_net;
    throw ConfigError("unknown model kind: " + s);
}

std::string to_string(ParamKind kind) {
    switch (kind) {
        case ParamKind::score: return "score";
        case ParamKind::noise: return "noise";
        case ParamKind::data: return "data";
        case ParamKind::velocity: return "velocity";
    }
    throw ConfigError("unknown param kind");
}

ParamKind param_kind_from_string(const std::string& s) {
    if (s == "score") return ParamKind::score;
    if (s == "noise") return ParamKind::noise;
    if (s == "data") return ParamKind::data;
    if (s == "velocity") return ParamKind::velocity;
    throw ConfigError("unknown param kind: " + s);
}

Vec to_score(std::span<const double> raw, ParamKind kind, double alpha, double sigma,
             std::span<const double> z) {
    if (raw.size() != z.size()) throw ShapeError("to_score: raw/z size mismatch");
    if (kind != ParamKind::score && !(sigma > 0.0))
        throw DomainError("to_score: sigma must be positive for noise/data/velocity forms");
    Vec s(raw.size());
    switch (kind) {
        case ParamKind::score:
            std::copy(raw.begin(), raw.end(), s.begin());
            break;
        case ParamKind::noise:
            for (std::size_t i = 0; i < s.size(); ++i) s[i] = -raw[i] / sigma;
            break;
        case ParamKind::data:
            for (std::size_t i = 0; i < s.size(); ++i)
                s[i] = (alpha * raw[i] - z[i]) / (sigma * sigma);
            break;
        case ParamKind::velocity:
            for (std::size_t i = 0; i < s.size(); ++i)
                s[i] = -(sigma * z[i] + alpha * raw[i]) / sigma;
            break;
    }
    return s;
}

Vec from_score(std::span<const double> score, ParamKind kind, double alpha, double sigma,
               std::span<const double> z) {
    if (score.size() != z.size()) throw ShapeError("from_score: score/z size mismatch");
    if (kind != ParamKind::score && !(sigma > 0.0))
        throw DomainError("from_score: sigma must be positive for noise/data/velocity forms");
    Vec r(score.size());
    switch (kind) {
        case ParamKind::score:
            std::copy(score.begin(), score.end(), r.begin());
            break;
        case ParamKind::noise:
            for (std::size_t i = 0; i < r.size(); ++i) r[i] = -sigma * score[i];
            break;
        case ParamKind::data:
            if (!(alpha != 0.0)) throw DomainError("from_score: alpha must be nonzero for data form");
            for (std::size_t i = 0; i < r.size(); ++i)
                r[i] = (sigma * sigma * score[i] + z[i]) / alpha;
            break;
        case ParamKind::velocity:
            // eps = -sigma * score, then v = (eps - sigma z)/alpha.
            if (!(alpha != 0.0))
                throw DomainError("from_score: alpha must be nonzero for velocity form");
            for (std::size_t i = 0; i < r.size(); ++i)
                r[i] = (-sigma * score[i] - sigma * z[i]) / alpha;
            break;
    }
    return r;
}

Expert Expert::analytic(GaussianMixtureSpec spec, NoiseSchedule native) {
    spec.validate();
    Expert e;
    e.model_ =
        spec.components() == 1 ? ModelKind::analytic_gaussian : ModelKind::analytic_gmm;
    e.param_kind_ = ParamKind::score;
    e.dim_ = spec.dim;
    e.native_ = native;
    e.gmm_ = std::move(spec);
    return e;
}

Expert Expert::neural(ScoreNet net, NoiseSchedule native, ParamKind kind) {
    Expert e;
    e.model_ = ModelKind::neural_net;
    e.param_kind_ = kind;
    e.dim_ = net.config().dim;
    e.native_ = native;
    e.net_ = std::move(net);
    return e;
}

const GaussianMixtureSpec& Expert::gmm() const {
    if (!gmm_) throw ConfigError("expert has no analytic mixture");
    return *gmm_;
}

const ScoreNet& Expert::net() const {
    if (!net_) throw ConfigError("expert has no network");
    return *net_;
}

ScoreNet& Expert::net() {
    if (!net_) throw ConfigError("expert has no network");
    return *net_;
}

void Expert::set_raw_params(std::vector<double> p) {
    if (!net_) throw ConfigError("raw parameters only apply to neural experts");
    if (p.size() != net_->param_count())
        throw ShapeError("raw parameter buffer has wrong size");
    raw_params_ = std::move(p);
}

Vec Expert::score(std::span<const double> z, double u) const {
    if (z.size() != dim_) throw ShapeError("expert input has wrong dimension");
    if (is_analytic()) return gmm_marginal_score(*gmm_, native_, z, u);
    const double gamma = native_.gamma(u);
    const double gn = (gamma - native_.gamma_min()) / (native_.gamma_max() - native_.gamma_min());
    Vec raw = net_->forward(z, gn);
    double alpha, sigma;
    vp_alpha_sigma(gamma, alpha, sigma);
    return to_score(raw, param_kind_, alpha, sigma, z);
}

Vec Expert::score_vjp(std::span<const double> z, double u, std::span<const double> probe) const {
    if (z.size() != dim_ || probe.size() != dim_)
        throw ShapeError("expert vjp input has wrong dimension");
    if (is_analytic()) return gmm_marginal_score_vjp(*gmm_, native_, z, u, probe);
    const double gamma = native_.gamma(u);
    const double gn = (gamma - native_.gamma_min()) / (native_.gamma_max() - native_.gamma_min());
    double alpha, sigma;
    vp_alpha_sigma(gamma, alpha, sigma);
    // The score is an affine function of the raw output with z-dependent
    // shift; chain rule splits into the network VJP plus a direct term.
    Vec net_vjp = net_->input_vjp(z, gn, probe);
    Vec out(dim_);
    switch (param_kind_) {
        case ParamKind::score:
            out = std::move(net_vjp);
            break;
        case ParamKind::noise:
            for (std::size_t i = 0; i < dim_; ++i) out[i] = -net_vjp[i] / sigma;
            break;
        case ParamKind::data:
            for (std::size_t i = 0; i < dim_; ++i)
                out[i] = (alpha * net_vjp[i] - probe[i]) / (sigma * sigma);
            break;
        case ParamKind::velocity:
            for (std::size_t i = 0; i < dim_; ++i)
                out[i] = -probe[i] - (alpha / sigma) * net_vjp[i];
            break;
    }
    return out;
}

}  // namespace scoremerge
