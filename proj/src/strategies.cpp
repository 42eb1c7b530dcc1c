#include "tempcal/strategies.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include <Eigen/QR>

#include "tempcal/parallel.hpp"

namespace tempcal {

std::function<double(double)> TemperedModel::risk_function(const Dataset& fit, const Dataset& eval,
                                                           const RiskFnOptions& opts) const {
    const DrawRisk risk = draw_risk(eval);
    return [this, fit, risk, opts](double alpha) {
        return mc_expectation(posterior(fit, alpha, opts.seed), risk, opts.mc,
                              derive_seed(opts.seed, 1))
            .value;
    };
}

std::optional<double> TemperedModel::risk_gradient(const Dataset&, const Dataset&, double) const {
    return std::nullopt;
}

double TemperedModel::peprl(const Dataset&, double) const {
    throw ConfigError("model " + name() + " has no closed-form SafeBayes objective");
}

double TemperedModel::bootstrap_gradient(const Dataset& data, double alpha, Index boot, Index mc,
                                         std::uint64_t seed, const BootstrapOptions& opts) const {
    return bootstrap_gradient_mc(data, alpha, boot, mc, seed, opts);
}

double TemperedModel::bootstrap_gradient_mc(const Dataset& data, double alpha, Index boot, Index mc,
                                            std::uint64_t seed, const BootstrapOptions& opts) const {
    if (boot < 1) throw ConfigError("bootstrap needs boot >= 1");
    const DrawRisk base_risk = draw_risk(data);
    std::vector<double> grads(static_cast<std::size_t>(boot));
    ParallelErrors errors;
#pragma omp parallel for schedule(dynamic)
    for (Index b = 0; b < boot; ++b) {
        errors.run([&] {
            Rng rng = make_rng(seed, static_cast<std::uint64_t>(b));
            const std::vector<Index> rows =
                opts.resampler ? opts.resampler(data.size(), rng) : uniform_resample(data.size(), rng);
            const Dataset resample = data.select(rows);
            const std::uint64_t rep_seed = derive_seed(derive_seed(seed, stream::strategy), b);
            const DrawRisk train = draw_risk(resample);
            const DrawRisk test =
                opts.evaluation == PsiEvaluation::original ? base_risk : train;
            grads[static_cast<std::size_t>(b)] = covariance_gradient_mc(
                posterior(resample, alpha, rep_seed), train, test, mc, derive_seed(rep_seed, 1));
        });
    }
    errors.rethrow();
    double sum = 0.0;
    for (double g : grads) sum += g;
    return sum / static_cast<double>(boot);
}

// ---- linear regression, known variance ----

PosteriorDraw KnownVarTempered::posterior(const Dataset& fit_data, double alpha, std::uint64_t) const {
    return gaussian_sampler(fit(model_, fit_data, alpha));
}

DrawRisk KnownVarTempered::draw_risk(const Dataset& data) const {
    return squared_error_draw_risk(model_.sigma2(), RegressionStats::of(data));
}

std::function<double(double)> KnownVarTempered::risk_function(const Dataset& fit_data,
                                                              const Dataset& eval,
                                                              const RiskFnOptions&) const {
    fit_data.validate();
    eval.validate();
    return [this, fs = RegressionStats::of(fit_data), es = RegressionStats::of(eval)](double alpha) {
        return gen_error_estimate(model_, fit(model_, fs, alpha), es);
    };
}

std::optional<double> KnownVarTempered::risk_gradient(const Dataset& fit_data, const Dataset& eval,
                                                      double alpha) const {
    return gen_error_gradient(model_, fit_data, eval, alpha);
}

double KnownVarTempered::peprl(const Dataset& data, double alpha) const {
    return safebayes_peprl(model_, data, alpha);
}

double KnownVarTempered::bootstrap_gradient(const Dataset& data, double alpha, Index boot, Index,
                                            std::uint64_t seed, const BootstrapOptions& opts) const {
    return bootstrap_gradient_psi(model_, data, alpha, boot, seed, opts);
}

namespace {

VectorXd least_squares(const Dataset& data) {
    return data.Z.colPivHouseholderQr().solve(data.Y);
}

}  // namespace

double KnownVarTempered::min_risk(const Dataset& data) const {
    const VectorXd theta = least_squares(data);
    return (data.Y - data.Z * theta).squaredNorm() /
           (2.0 * model_.sigma2() * static_cast<double>(data.size()));
}

// ---- linear regression, unknown variance ----

PosteriorDraw NigTempered::posterior(const Dataset& fit_data, double alpha, std::uint64_t) const {
    return nig_sampler(fit_nig(model_, fit_data, alpha));
}

DrawRisk NigTempered::draw_risk(const Dataset& data) const {
    return nig_draw_risk(RegressionStats::of(data));
}

std::function<double(double)> NigTempered::risk_function(const Dataset& fit_data, const Dataset& eval,
                                                         const RiskFnOptions&) const {
    fit_data.validate();
    eval.validate();
    return [this, fs = RegressionStats::of(fit_data), es = RegressionStats::of(eval)](double alpha) {
        return gen_error_estimate_nig(fit_nig(model_, fs, alpha), es, NigRiskMode::closed_form);
    };
}

double NigTempered::peprl(const Dataset& data, double alpha) const {
    return safebayes_peprl_nig(model_, data, alpha);
}

double NigTempered::min_risk(const Dataset& data) const {
    const VectorXd theta = least_squares(data);
    const double s2 = (data.Y - data.Z * theta).squaredNorm() / static_cast<double>(data.size());
    if (!(s2 > 0.0)) throw NumericalError("zero residual variance: the plug-in risk is unbounded below");
    return 0.5 + 0.5 * std::log(2.0 * std::numbers::pi * s2);
}

// ---- logistic regression ----

VectorXd logistic_mle(const Dataset& data, int max_iters) {
    const Index d = data.dim();
    const double n = static_cast<double>(data.size());
    const DrawRisk risk = logistic_draw_risk(data);
    ParamDraw cur{VectorXd::Zero(d), 1.0};
    double f = risk(cur);
    for (int it = 0; it < max_iters; ++it) {
        const VectorXd g = logistic_risk_gradient(cur.theta, data);
        if (g.lpNorm<Eigen::Infinity>() < 1e-12) break;
        const VectorXd u = data.Z * cur.theta;
        VectorXd w(u.size());
        for (Index i = 0; i < u.size(); ++i) {
            const double s = sigmoid(u(i));
            w(i) = s * (1.0 - s) / n;
        }
        MatrixXd H = data.Z.transpose() * w.asDiagonal() * data.Z;
        H.diagonal().array() += 1e-12;
        const VectorXd step = SpdFactor(H).solve(g);
        double t = 1.0;
        ParamDraw next{cur.theta - step, 1.0};
        double fn = risk(next);
        while (!(fn <= f) && t > 1e-10) {
            t *= 0.5;
            next.theta = cur.theta - t * step;
            fn = risk(next);
        }
        if (!(fn <= f)) break;
        const bool converged = f - fn < 1e-15 * std::max(1.0, f);
        cur = next;
        f = fn;
        if (converged) break;
    }
    return cur.theta;
}

namespace {

double logistic_min_risk(const Dataset& data) {
    return logistic_draw_risk(data)({logistic_mle(data), 1.0});
}

}  // namespace

JaakkolaTempered::JaakkolaTempered(GaussianPrior prior, JaakkolaOptions opts)
    : prior_(std::move(prior)), opts_(opts) {
    prior_.validate();
    if (opts_.em_iters < 1) throw ConfigError("Jaakkola EM needs em_iters >= 1");
}

PosteriorDraw JaakkolaTempered::posterior(const Dataset& fit_data, double alpha, std::uint64_t) const {
    const JaakkolaState s = jaakkola_fit(prior_, fit_data, alpha, opts_);
    return gaussian_sampler({s.mean, s.cov});
}

DrawRisk JaakkolaTempered::draw_risk(const Dataset& data) const { return logistic_draw_risk(data); }

double JaakkolaTempered::min_risk(const Dataset& data) const { return logistic_min_risk(data); }

PosteriorDraw BbBTempered::posterior(const Dataset& fit_data, double alpha, std::uint64_t seed) const {
    return bbb_sampler(bbb_fit(fit_data, alpha, opts_, seed));
}

DrawRisk BbBTempered::draw_risk(const Dataset& data) const { return logistic_draw_risk(data); }

double BbBTempered::min_risk(const Dataset& data) const { return logistic_min_risk(data); }

// ---- strategies ----

namespace {

struct KindName {
    StrategyKind kind;
    const char* name;
};
constexpr KindName kKinds[] = {{StrategyKind::bayes, "bayes"},
                               {StrategyKind::naive, "naive"},
                               {StrategyKind::sample_split, "sample_split"},
                               {StrategyKind::bootstrap, "bootstrap"},
                               {StrategyKind::safebayes, "safebayes"}};

}  // namespace

std::string to_string(StrategyKind k) {
    for (const auto& e : kKinds)
        if (e.kind == k) return e.name;
    return "?";
}

StrategyKind parse_strategy(const std::string& name) {
    for (const auto& e : kKinds)
        if (name == e.name) return e.kind;
    throw ConfigError("unknown strategy '" + name +
                      "'; expected bayes, naive, sample_split, bootstrap or safebayes");
}

std::string to_string(BackboneMode m) {
    switch (m) {
        case BackboneMode::automatic: return "auto";
        case BackboneMode::closed_form: return "closed_form";
        case BackboneMode::mc_sgd: return "mc_sgd";
    }
    return "?";
}

BackboneMode parse_backbone(const std::string& name) {
    if (name == "auto") return BackboneMode::automatic;
    if (name == "closed_form") return BackboneMode::closed_form;
    if (name == "mc_sgd") return BackboneMode::mc_sgd;
    throw ConfigError("unknown mode '" + name + "'; expected auto, closed_form or mc_sgd");
}

void StrategyConfig::validate() const {
    bounds.validate();
    if (mc < 2) throw ConfigError("strategy mc must be >= 2");
    if (boot < 1) throw ConfigError("strategy boot must be >= 1");
    if (boot_mc < 2) throw ConfigError("strategy boot_mc must be >= 2");
    if (sgd.max_iters < 1) throw ConfigError("SGD max_iters must be >= 1");
    if (!(sgd.tol > 0.0)) throw ConfigError("SGD tol must be > 0");
    if (!(sgd.eta0_scale > 0.0)) throw ConfigError("SGD eta0_scale must be > 0");
    if (minimizer.grid_points < 2) throw ConfigError("minimizer grid_points must be >= 2");
}

BackboneMode resolve_backbone(StrategyKind kind, const TemperedModel& model, BackboneMode requested) {
    if (kind == StrategyKind::bayes) return BackboneMode::closed_form;
    const bool exact = kind == StrategyKind::bootstrap ? model.has_exact_gradient() : model.has_exact_risk();
    if (requested == BackboneMode::automatic)
        return exact ? BackboneMode::closed_form : BackboneMode::mc_sgd;
    if (requested == BackboneMode::closed_form && !exact)
        throw ConfigError("model " + model.name() + " has no closed form for strategy " +
                          to_string(kind) + "; use mode mc_sgd");
    return requested;
}

Index first_batch_size(Index n) { return (n + 1) / 2; }

namespace {

void check_data(const Dataset& data, const TemperedModel& model) {
    data.validate();
    if (data.kind != model.data_kind())
        throw ConfigError("dataset kind does not match model " + model.name());
    if (data.dim() != model.dim()) {
        std::ostringstream os;
        os << "dataset has d = " << data.dim() << " but model " << model.name() << " has d = " << model.dim();
        throw ConfigError(os.str());
    }
}

double initial_alpha(const Dataset& data, const StrategyConfig& cfg) {
    return cfg.bounds.clip(static_cast<double>(data.size()), data.size());
}

double minimize(const std::function<double(double)>& f, const Dataset& data, const StrategyConfig& cfg) {
    const Index n = data.size();
    return minimize_bounded(f, cfg.bounds.lower(n), cfg.bounds.upper(n), n, cfg.minimizer);
}

// SGD where every step draws mc fresh posterior samples.
double covariance_sgd(const Dataset& data, const TemperedModel& model, const StrategyConfig& cfg,
                      std::uint64_t seed, const Dataset& fit, const Dataset& eval) {
    const DrawRisk train = model.draw_risk(fit);
    const DrawRisk test = model.draw_risk(eval);
    const AlphaGradient grad = [&](double alpha, int t) {
        const std::uint64_t step_seed = derive_seed(seed, static_cast<std::uint64_t>(t));
        return covariance_gradient_mc(model.posterior(fit, alpha, step_seed), train, test, cfg.mc,
                                      derive_seed(step_seed, 1));
    };
    return sgd_over_alpha(grad, initial_alpha(data, cfg), cfg.bounds, data.size(), cfg.sgd);
}

}  // namespace

double bayes_strategy(const Dataset& data, const StrategyConfig& cfg) {
    cfg.bounds.validate();
    return cfg.bounds.clip(static_cast<double>(data.size()), data.size());
}

double naive_strategy(const Dataset& data, const TemperedModel& model, const StrategyConfig& cfg,
                      std::uint64_t seed) {
    cfg.validate();
    check_data(data, model);
    if (resolve_backbone(StrategyKind::naive, model, cfg.mode) == BackboneMode::closed_form)
        return minimize(model.risk_function(data, data, {cfg.mc, seed}), data, cfg);
    return covariance_sgd(data, model, cfg, seed, data, data);
}

double sample_split_strategy(const Dataset& data, const TemperedModel& model,
                             const StrategyConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    check_data(data, model);
    if (data.size() < 2) throw ConfigError("sample splitting needs n >= 2");
    const Index n1 = first_batch_size(data.size());
    const Dataset first = data.head(n1), second = data.tail(data.size() - n1);
    if (resolve_backbone(StrategyKind::sample_split, model, cfg.mode) == BackboneMode::closed_form)
        return minimize(model.risk_function(first, second, {cfg.mc, seed}), data, cfg);
    return covariance_sgd(data, model, cfg, seed, first, second);
}

double bootstrap_strategy(const Dataset& data, const TemperedModel& model, const StrategyConfig& cfg,
                          std::uint64_t seed) {
    cfg.validate();
    check_data(data, model);
    const bool exact =
        resolve_backbone(StrategyKind::bootstrap, model, cfg.mode) == BackboneMode::closed_form;
    const BootstrapOptions opts{cfg.psi_evaluation, cfg.resampler};
    const AlphaGradient grad = [&](double alpha, int t) {
        const std::uint64_t step_seed = derive_seed(seed, static_cast<std::uint64_t>(t));
        return exact ? model.bootstrap_gradient(data, alpha, cfg.boot, cfg.boot_mc, step_seed, opts)
                     : model.bootstrap_gradient_mc(data, alpha, cfg.boot, cfg.boot_mc, step_seed, opts);
    };
    return sgd_over_alpha(grad, initial_alpha(data, cfg), cfg.bounds, data.size(), cfg.sgd);
}

double safebayes_strategy(const Dataset& data, const TemperedModel& model, const StrategyConfig& cfg,
                          std::uint64_t seed) {
    cfg.validate();
    check_data(data, model);
    if (data.size() < 2) throw ConfigError("SafeBayes needs n >= 2");
    if (resolve_backbone(StrategyKind::safebayes, model, cfg.mode) == BackboneMode::closed_form)
        return minimize([&](double alpha) { return model.peprl(data, alpha); }, data, cfg);

    const Index n = data.size();
    std::vector<Dataset> prefixes, next_rows;
    std::vector<DrawRisk> prefix_risk, next_risk;
    for (Index t = 1; t < n; ++t) {
        prefixes.push_back(data.head(t));
        const Index row[] = {t};
        next_rows.push_back(data.select(row));
        prefix_risk.push_back(model.draw_risk(prefixes.back()));
        next_risk.push_back(model.draw_risk(next_rows.back()));
    }
    const AlphaGradient grad = [&](double alpha, int it) {
        const std::uint64_t step_seed = derive_seed(seed, static_cast<std::uint64_t>(it));
        double sum = 0.0;
        for (Index t = 1; t < n; ++t) {
            const auto k = static_cast<std::size_t>(t - 1);
            const std::uint64_t s = derive_seed(step_seed, static_cast<std::uint64_t>(t));
            sum += covariance_gradient_mc(model.posterior(prefixes[k], alpha, s), prefix_risk[k],
                                          next_risk[k], cfg.mc, derive_seed(s, 1));
        }
        return sum;
    };
    return sgd_over_alpha(grad, initial_alpha(data, cfg), cfg.bounds, n, cfg.sgd);
}

double run_strategy(StrategyKind kind, const Dataset& data, const TemperedModel& model,
                    const StrategyConfig& cfg, std::uint64_t seed) {
    switch (kind) {
        case StrategyKind::bayes: check_data(data, model); return bayes_strategy(data, cfg);
        case StrategyKind::naive: return naive_strategy(data, model, cfg, seed);
        case StrategyKind::sample_split: return sample_split_strategy(data, model, cfg, seed);
        case StrategyKind::bootstrap: return bootstrap_strategy(data, model, cfg, seed);
        case StrategyKind::safebayes: return safebayes_strategy(data, model, cfg, seed);
    }
    throw ConfigError("unknown strategy");
}

std::function<double(double)> strategy_objective(StrategyKind kind, const Dataset& data,
                                                 const TemperedModel& model,
                                                 const StrategyConfig& cfg, std::uint64_t seed) {
    check_data(data, model);
    const RiskFnOptions opts{cfg.mc, seed};
    switch (kind) {
        case StrategyKind::naive: return model.risk_function(data, data, opts);
        case StrategyKind::sample_split: {
            const Index n1 = first_batch_size(data.size());
            return model.risk_function(data.head(n1), data.tail(data.size() - n1), opts);
        }
        case StrategyKind::safebayes: {
            if (!model.has_exact_risk())
                throw ConfigError("SafeBayes objective curve needs a model with an exact risk");
            const double denom = static_cast<double>(data.size() - 1);
            return [&model, data, denom](double alpha) { return model.peprl(data, alpha) / denom; };
        }
        case StrategyKind::bayes:
        case StrategyKind::bootstrap:
            return [](double) { return std::numeric_limits<double>::quiet_NaN(); };
    }
    throw ConfigError("unknown strategy");
}

}  // namespace tempcal
