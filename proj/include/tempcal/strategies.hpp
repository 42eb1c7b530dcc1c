#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "tempcal/core.hpp"
#include "tempcal/linreg_known.hpp"
#include "tempcal/linreg_unknown.hpp"
#include "tempcal/logistic.hpp"

namespace tempcal {

/// Options for risk functions that fall back to Monte Carlo.
struct RiskFnOptions {
    Index mc = 2000;
    std::uint64_t seed = 0;
};

/// A family of alpha-posteriors together with its loss. Implementations are immutable and
/// safe to share across threads.
class TemperedModel {
public:
    virtual ~TemperedModel() = default;

    virtual std::string name() const = 0;
    virtual DataKind data_kind() const = 0;
    virtual Index dim() const = 0;

    /// True when E_{pi_alpha}[r_n] is available in closed form.
    virtual bool has_exact_risk() const = 0;

    /// Sampler of the posterior fit on `fit` at alpha. seed drives stochastic fits.
    virtual PosteriorDraw posterior(const Dataset& fit, double alpha, std::uint64_t seed) const = 0;

    /// Empirical risk of a parameter draw over `data`.
    virtual DrawRisk draw_risk(const Dataset& data) const = 0;

    /// alpha -> E_{pi_alpha(fit)}[r(eval)]. Exact when has_exact_risk(), otherwise a
    /// Monte-Carlo average with common random numbers across alpha.
    virtual std::function<double(double)> risk_function(const Dataset& fit, const Dataset& eval,
                                                        const RiskFnOptions& opts) const;

    /// True when risk_gradient returns a value.
    virtual bool has_exact_gradient() const { return false; }

    /// d/dalpha of the exact risk, when the model provides it.
    virtual std::optional<double> risk_gradient(const Dataset& fit, const Dataset& eval,
                                                double alpha) const;

    /// SafeBayes objective in closed form. Throws ConfigError when unavailable.
    virtual double peprl(const Dataset& data, double alpha) const;

    /// Bootstrap gradient. The default averages Monte-Carlo covariance gradients over case
    /// resamples (mc draws each); models with an exact gradient override it.
    virtual double bootstrap_gradient(const Dataset& data, double alpha, Index boot, Index mc,
                                      std::uint64_t seed, const BootstrapOptions& opts) const;
    /// The Monte-Carlo bootstrap gradient regardless of model. OpenMP over replicates.
    double bootstrap_gradient_mc(const Dataset& data, double alpha, Index boot, Index mc,
                                 std::uint64_t seed, const BootstrapOptions& opts) const;

    /// min over parameters of the empirical risk on data (the plug-in lower bound).
    virtual double min_risk(const Dataset& data) const = 0;
};

class KnownVarTempered final : public TemperedModel {
public:
    explicit KnownVarTempered(KnownVarModel model) : model_(std::move(model)) {}
    const KnownVarModel& model() const { return model_; }

    std::string name() const override { return "linreg_known"; }
    DataKind data_kind() const override { return DataKind::regression; }
    Index dim() const override { return model_.dim(); }
    bool has_exact_risk() const override { return true; }
    PosteriorDraw posterior(const Dataset& fit, double alpha, std::uint64_t seed) const override;
    DrawRisk draw_risk(const Dataset& data) const override;
    std::function<double(double)> risk_function(const Dataset& fit, const Dataset& eval,
                                                const RiskFnOptions& opts) const override;
    bool has_exact_gradient() const override { return true; }
    std::optional<double> risk_gradient(const Dataset& fit, const Dataset& eval,
                                        double alpha) const override;
    double peprl(const Dataset& data, double alpha) const override;
    double bootstrap_gradient(const Dataset& data, double alpha, Index boot, Index mc,
                              std::uint64_t seed, const BootstrapOptions& opts) const override;
    double min_risk(const Dataset& data) const override;

private:
    KnownVarModel model_;
};

class NigTempered final : public TemperedModel {
public:
    explicit NigTempered(NigModel model) : model_(std::move(model)) {}
    const NigModel& model() const { return model_; }

    std::string name() const override { return "linreg_unknown"; }
    DataKind data_kind() const override { return DataKind::regression; }
    Index dim() const override { return model_.dim(); }
    bool has_exact_risk() const override { return true; }
    PosteriorDraw posterior(const Dataset& fit, double alpha, std::uint64_t seed) const override;
    DrawRisk draw_risk(const Dataset& data) const override;
    std::function<double(double)> risk_function(const Dataset& fit, const Dataset& eval,
                                                const RiskFnOptions& opts) const override;
    double peprl(const Dataset& data, double alpha) const override;
    double min_risk(const Dataset& data) const override;

private:
    NigModel model_;
};

class JaakkolaTempered final : public TemperedModel {
public:
    JaakkolaTempered(GaussianPrior prior, JaakkolaOptions opts = {});

    std::string name() const override { return "logistic_jaakkola"; }
    DataKind data_kind() const override { return DataKind::binary; }
    Index dim() const override { return prior_.mean.size(); }
    bool has_exact_risk() const override { return false; }
    PosteriorDraw posterior(const Dataset& fit, double alpha, std::uint64_t seed) const override;
    DrawRisk draw_risk(const Dataset& data) const override;
    double min_risk(const Dataset& data) const override;

private:
    GaussianPrior prior_;
    JaakkolaOptions opts_;
};

class BbBTempered final : public TemperedModel {
public:
    BbBTempered(Index d, BbBOptions opts = {}) : d_(d), opts_(opts) {}

    std::string name() const override { return "logistic_bbb"; }
    DataKind data_kind() const override { return DataKind::binary; }
    Index dim() const override { return d_; }
    bool has_exact_risk() const override { return false; }
    PosteriorDraw posterior(const Dataset& fit, double alpha, std::uint64_t seed) const override;
    DrawRisk draw_risk(const Dataset& data) const override;
    double min_risk(const Dataset& data) const override;

private:
    Index d_;
    BbBOptions opts_;
};

/// Minimizer of the mean logistic loss by damped Newton steps.
VectorXd logistic_mle(const Dataset& data, int max_iters = 100);

enum class StrategyKind { bayes, naive, sample_split, bootstrap, safebayes };
std::string to_string(StrategyKind k);
StrategyKind parse_strategy(const std::string& name);

enum class BackboneMode { automatic, closed_form, mc_sgd };
std::string to_string(BackboneMode m);
BackboneMode parse_backbone(const std::string& name);

struct StrategyConfig {
    AlphaBounds bounds;
    Index mc = 2000;
    Index boot = 1000;
    /// Draws per replicate for Monte-Carlo bootstrap gradients.
    Index boot_mc = 200;
    SgdOptions sgd;
    MinimizerOptions minimizer;
    BackboneMode mode = BackboneMode::automatic;
    PsiEvaluation psi_evaluation = PsiEvaluation::original;
    /// Forces the bootstrap resample (testing hook).
    Resampler resampler;

    void validate() const;
};

/// Backbone used for a strategy on a model. automatic picks closed form for naive, sample
/// splitting and SafeBayes when the model has an exact risk, and for bootstrap when it has an
/// exact risk gradient (SGD on the exact per-replicate gradient); otherwise Monte-Carlo SGD.
BackboneMode resolve_backbone(StrategyKind kind, const TemperedModel& model, BackboneMode requested);

/// Rows of the first batch of a sample split: ceil(n/2).
Index first_batch_size(Index n);

double bayes_strategy(const Dataset& data, const StrategyConfig& cfg);
double naive_strategy(const Dataset& data, const TemperedModel& model, const StrategyConfig& cfg,
                      std::uint64_t seed);
double sample_split_strategy(const Dataset& data, const TemperedModel& model,
                             const StrategyConfig& cfg, std::uint64_t seed);
double bootstrap_strategy(const Dataset& data, const TemperedModel& model, const StrategyConfig& cfg,
                          std::uint64_t seed);
double safebayes_strategy(const Dataset& data, const TemperedModel& model, const StrategyConfig& cfg,
                          std::uint64_t seed);

double run_strategy(StrategyKind kind, const Dataset& data, const TemperedModel& model,
                    const StrategyConfig& cfg, std::uint64_t seed);

/// The quantity a strategy minimizes, as a function of alpha, for plotting: the naive and
/// sample-split risk estimates, the SafeBayes objective divided by n - 1, and NaN for Bayes
/// and bootstrap (which have no scalar objective).
std::function<double(double)> strategy_objective(StrategyKind kind, const Dataset& data,
                                                 const TemperedModel& model,
                                                 const StrategyConfig& cfg, std::uint64_t seed);

}  // namespace tempcal
