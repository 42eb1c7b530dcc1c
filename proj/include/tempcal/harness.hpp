#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tempcal/datasets.hpp"
#include "tempcal/strategies.hpp"

namespace tempcal {

enum class ModelKind { linreg_known, linreg_unknown, logistic_jaakkola, logistic_bbb };
std::string to_string(ModelKind m);
ModelKind parse_model(const std::string& name);

enum class PriorChoice { automatic, identity, polynomial };

struct ModelParams {
    /// Assumed noise variance of linreg_known; empty means the true noise variance.
    std::optional<double> sigma2;
    /// automatic: the polynomial prior for the polynomial setting, N(0, I) otherwise.
    PriorChoice prior = PriorChoice::automatic;
    double a0 = 2.0;
    double b0 = 2.0;
    int em_iters = 5;
    BbBOptions bbb;
};

struct DatasetSpec {
    Setting setting = Setting::linreg;
    Index n = 40;
    Index d = 40;
    double sigma2 = 1.0;
    double delta2 = 0.1;
    double p = 0.5;
    double half_width = 4.5;
    PolyFunction function = PolyFunction::parabola;
    /// Keep the design (and theta*) fixed across repetitions; only the noise is redrawn.
    bool freeze_design = false;

    void validate() const;
};

struct ExperimentConfig {
    ModelKind model = ModelKind::linreg_known;
    ModelParams model_params;
    DatasetSpec dataset;
    std::vector<StrategyKind> strategies{StrategyKind::bayes, StrategyKind::naive,
                                         StrategyKind::sample_split, StrategyKind::bootstrap,
                                         StrategyKind::safebayes};
    AlphaBounds bounds;
    int repetitions = 30;
    int grid_points = 50;
    int test_multiplier = 100;
    std::uint64_t seed = 0;
    /// Draws for Monte-Carlo oracle risks (logistic models).
    Index oracle_mc = 2000;
    /// Write measured wall times; off by default so result files are reproducible.
    bool record_timing = false;
    /// Its bounds are overwritten by the top-level bounds.
    StrategyConfig strategy_cfg;

    void validate() const;
};

/// Parses the JSON experiment config. Unknown keys anywhere are a ConfigError.
ExperimentConfig parse_experiment_config(const std::string& json_text);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

/// The subset of a config used by single-dataset commands: model_params, bounds, strategy_cfg.
struct CalibrationConfig {
    ModelParams model_params;
    StrategyConfig strategy_cfg;
};
CalibrationConfig parse_calibration_config(const std::string& json_text);

/// Builds the model for a dataset of dimension d drawn from truth.
std::unique_ptr<TemperedModel> make_model(ModelKind kind, const ModelParams& params,
                                          const GroundTruth& truth);

/// Ground truth of repetition rep_seed under a dataset spec. theta* is drawn from
/// theta_seed.
GroundTruth make_truth(const DatasetSpec& spec, std::uint64_t theta_seed);

/// Oracle generalization error of the alpha-posterior fit on train, evaluated on a large
/// fresh test set: exact for the linear models, Monte Carlo for logistic.
double oracle_risk(const TemperedModel& model, const Dataset& train, const Dataset& test,
                   double alpha, const RiskFnOptions& opts);

struct CurvePoint {
    double alpha_over_n = 0.0;
    double estimate = 0.0;
    double oracle = 0.0;
};

/// grid_points values of alpha/n spanning the bounds, endpoints exact.
std::vector<double> alpha_grid(const AlphaBounds& bounds, int grid_points);

/// Strategy objective and oracle risk over the alpha grid. test may be empty, in which
/// case the oracle column is NaN.
std::vector<CurvePoint> risk_curve(const TemperedModel& model, StrategyKind strategy,
                                   const Dataset& train, const Dataset* test,
                                   const StrategyConfig& cfg, int grid_points, Index oracle_mc,
                                   std::uint64_t seed);
/// risk_curve on the data of one repetition of an experiment.
std::vector<CurvePoint> risk_curve(const ExperimentConfig& cfg, StrategyKind strategy, int repetition);

struct CellResult {
    int repetition = 0;
    StrategyKind strategy = StrategyKind::bayes;
    bool ok = false;
    StrategyOutcome outcome;
    std::string error_kind;
    std::string error;
};

struct RepetitionResult {
    int repetition = 0;
    bool ok = false;
    std::string error_kind;
    std::string error;
    double alpha_star = 0.0;
    double risk_star = 0.0;
    double min_risk = 0.0;
    std::vector<CellResult> cells;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<RepetitionResult> repetitions;
    bool partial() const;
};

RepetitionResult run_repetition(const ExperimentConfig& cfg, int repetition);
/// Repetitions in parallel; results ordered by repetition index.
ExperimentResult run_experiment(const ExperimentConfig& cfg);
namespace reference {
ExperimentResult run_experiment(const ExperimentConfig& cfg);
}

struct BoxRow {
    std::string label;
    std::size_t count = 0;
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

/// Linear-interpolation quantile of unsorted values, q in [0, 1].
double quantile(std::vector<double> values, double q);
BoxRow five_numbers(const std::string& label, const std::vector<double>& values);

/// Oracle-risk five-number summary per strategy, then rows alpha_star (risk at alpha*) and
/// min_risk. Failed cells are skipped.
std::vector<BoxRow> summarize_boxplot(const ExperimentResult& result);
/// Same layout for alpha/n.
std::vector<BoxRow> summarize_alpha(const ExperimentResult& result);

/// Shortest round-trip decimal form.
std::string format_double(double v);

std::string results_csv(const ExperimentResult& result, const std::string& timestamp);
std::string summary_csv(const ExperimentResult& result);
std::string failures_json(const ExperimentResult& result);
std::string results_json(const ExperimentResult& result);
std::string curve_csv(const std::vector<CurvePoint>& curve);

/// Writes results.csv, results.json, summary.csv and failures.json into dir.
void write_experiment_outputs(const ExperimentResult& result, const std::string& dir);

}  // namespace tempcal
