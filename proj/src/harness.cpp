#include "tempcal/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tempcal/parallel.hpp"

namespace tempcal {

using nlohmann::json;

std::string to_string(ModelKind m) {
    switch (m) {
        case ModelKind::linreg_known: return "linreg_known";
        case ModelKind::linreg_unknown: return "linreg_unknown";
        case ModelKind::logistic_jaakkola: return "logistic_jaakkola";
        case ModelKind::logistic_bbb: return "logistic_bbb";
    }
    return "?";
}

ModelKind parse_model(const std::string& name) {
    for (ModelKind m : {ModelKind::linreg_known, ModelKind::linreg_unknown, ModelKind::logistic_jaakkola,
                        ModelKind::logistic_bbb})
        if (to_string(m) == name) return m;
    throw ConfigError("unknown model '" + name +
                      "'; expected linreg_known, linreg_unknown, logistic_jaakkola or logistic_bbb");
}

namespace {

bool is_logistic(ModelKind m) {
    return m == ModelKind::logistic_jaakkola || m == ModelKind::logistic_bbb;
}

std::string prior_name(PriorChoice p) {
    switch (p) {
        case PriorChoice::automatic: return "auto";
        case PriorChoice::identity: return "identity";
        case PriorChoice::polynomial: return "polynomial";
    }
    return "?";
}

PriorChoice parse_prior(const std::string& s) {
    if (s == "auto") return PriorChoice::automatic;
    if (s == "identity") return PriorChoice::identity;
    if (s == "polynomial") return PriorChoice::polynomial;
    throw ConfigError("unknown prior '" + s + "'; expected auto, identity or polynomial");
}

std::string psi_name(PsiEvaluation p) { return p == PsiEvaluation::original ? "original" : "resample"; }

PsiEvaluation parse_psi(const std::string& s) {
    if (s == "original") return PsiEvaluation::original;
    if (s == "resample") return PsiEvaluation::resample;
    throw ConfigError("unknown psi_evaluation '" + s + "'; expected original or resample");
}

// ---- strict JSON reading ----

void check_object(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) known = known || it.key() == k;
        if (!known) {
            std::string msg = "unknown key '" + it.key() + "' in " + where + "; allowed:";
            for (const char* k : allowed) msg += std::string(" ") + k;
            throw ConfigError(msg);
        }
    }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("key '" + std::string(key) + "' in " + where + " has the wrong type");
    }
}

std::string read_string(const json& j, const char* key, const std::string& fallback, const std::string& where) {
    std::string s = fallback;
    read(j, key, s, where);
    return s;
}

void read_bounds(const json& j, AlphaBounds& b) {
    check_object(j, "bounds", {"lo", "hi"});
    read(j, "lo", b.lo, "bounds");
    read(j, "hi", b.hi, "bounds");
}

void read_model_params(const json& j, ModelParams& p) {
    const std::string w = "model_params";
    check_object(j, w, {"sigma2", "prior", "a0", "b0", "em_iters", "bbb"});
    if (j.contains("sigma2") && !j.at("sigma2").is_null()) {
        double s = 0.0;
        read(j, "sigma2", s, w);
        p.sigma2 = s;
    }
    p.prior = parse_prior(read_string(j, "prior", prior_name(p.prior), w));
    read(j, "a0", p.a0, w);
    read(j, "b0", p.b0, w);
    read(j, "em_iters", p.em_iters, w);
    if (j.contains("bbb")) {
        const json& b = j.at("bbb");
        check_object(b, "model_params.bbb", {"iters", "eta0"});
        read(b, "iters", p.bbb.iters, "model_params.bbb");
        read(b, "eta0", p.bbb.eta0, "model_params.bbb");
    }
}

void read_strategy_cfg(const json& j, StrategyConfig& c) {
    const std::string w = "strategy_cfg";
    check_object(j, w, {"mc", "boot", "boot_mc", "sgd", "minimizer", "mode", "psi_evaluation"});
    read(j, "mc", c.mc, w);
    read(j, "boot", c.boot, w);
    read(j, "boot_mc", c.boot_mc, w);
    if (j.contains("sgd")) {
        const json& s = j.at("sgd");
        check_object(s, "strategy_cfg.sgd", {"eta0_scale", "max_iters", "tol"});
        read(s, "eta0_scale", c.sgd.eta0_scale, "strategy_cfg.sgd");
        read(s, "max_iters", c.sgd.max_iters, "strategy_cfg.sgd");
        read(s, "tol", c.sgd.tol, "strategy_cfg.sgd");
    }
    if (j.contains("minimizer")) {
        const json& m = j.at("minimizer");
        check_object(m, "strategy_cfg.minimizer", {"grid_points", "xtol", "rel_tie"});
        read(m, "grid_points", c.minimizer.grid_points, "strategy_cfg.minimizer");
        read(m, "xtol", c.minimizer.xtol, "strategy_cfg.minimizer");
        read(m, "rel_tie", c.minimizer.rel_tie, "strategy_cfg.minimizer");
    }
    c.mode = parse_backbone(read_string(j, "mode", to_string(c.mode), w));
    c.psi_evaluation = parse_psi(read_string(j, "psi_evaluation", psi_name(c.psi_evaluation), w));
}

void read_dataset(const json& j, DatasetSpec& d) {
    const std::string w = "dataset";
    check_object(j, w, {"setting", "n", "d", "sigma2", "delta2", "p", "half_width", "function", "freeze_design"});
    if (!j.contains("setting")) throw ConfigError("dataset.setting is required");
    d.setting = parse_setting(read_string(j, "setting", "", w));
    read(j, "n", d.n, w);
    read(j, "d", d.d, w);
    read(j, "sigma2", d.sigma2, w);
    read(j, "delta2", d.delta2, w);
    read(j, "p", d.p, w);
    read(j, "half_width", d.half_width, w);
    d.function = parse_poly_function(read_string(j, "function", to_string(d.function), w));
    read(j, "freeze_design", d.freeze_design, w);
    if (d.setting == Setting::gaussian_mean) d.d = 1;
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

json model_params_json(const ModelParams& p) {
    json j;
    j["sigma2"] = p.sigma2 ? json(*p.sigma2) : json(nullptr);
    j["prior"] = prior_name(p.prior);
    j["a0"] = p.a0;
    j["b0"] = p.b0;
    j["em_iters"] = p.em_iters;
    j["bbb"] = {{"iters", p.bbb.iters}, {"eta0", p.bbb.eta0}};
    return j;
}

json strategy_cfg_json(const StrategyConfig& c) {
    json j;
    j["mc"] = c.mc;
    j["boot"] = c.boot;
    j["boot_mc"] = c.boot_mc;
    j["sgd"] = {{"eta0_scale", c.sgd.eta0_scale}, {"max_iters", c.sgd.max_iters}, {"tol", c.sgd.tol}};
    j["minimizer"] = {{"grid_points", c.minimizer.grid_points},
                      {"xtol", c.minimizer.xtol},
                      {"rel_tie", c.minimizer.rel_tie}};
    j["mode"] = to_string(c.mode);
    j["psi_evaluation"] = psi_name(c.psi_evaluation);
    return j;
}

json config_json(const ExperimentConfig& c) {
    json j;
    j["model"] = to_string(c.model);
    j["model_params"] = model_params_json(c.model_params);
    const DatasetSpec& d = c.dataset;
    j["dataset"] = {{"setting", to_string(d.setting)}, {"n", d.n}, {"d", d.d}, {"sigma2", d.sigma2},
                    {"delta2", d.delta2}, {"p", d.p}, {"half_width", d.half_width},
                    {"function", to_string(d.function)}, {"freeze_design", d.freeze_design}};
    json strategies = json::array();
    for (StrategyKind k : c.strategies) strategies.push_back(to_string(k));
    j["strategies"] = strategies;
    j["bounds"] = {{"lo", c.bounds.lo}, {"hi", c.bounds.hi}};
    j["repetitions"] = c.repetitions;
    j["grid_points"] = c.grid_points;
    j["test_multiplier"] = c.test_multiplier;
    j["seed"] = c.seed;
    j["oracle_mc"] = c.oracle_mc;
    j["record_timing"] = c.record_timing;
    j["strategy_cfg"] = strategy_cfg_json(c.strategy_cfg);
    return j;
}

}  // namespace

void DatasetSpec::validate() const {
    if (n < 1) throw ConfigError("dataset.n must be >= 1");
    if (d < 1) throw ConfigError("dataset.d must be >= 1");
    if (setting == Setting::polynomial && function == PolyFunction::none)
        throw ConfigError("polynomial setting needs dataset.function parabola or exp");
    make_truth(*this, 0).validate();
}

void ExperimentConfig::validate() const {
    dataset.validate();
    bounds.validate();
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (grid_points < 2) throw ConfigError("grid_points must be >= 2");
    if (test_multiplier < 1) throw ConfigError("test_multiplier must be >= 1");
    if (oracle_mc < 1) throw ConfigError("oracle_mc must be >= 1");
    if (strategies.empty()) throw ConfigError("strategies must not be empty");
    std::set<StrategyKind> seen;
    for (StrategyKind k : strategies)
        if (!seen.insert(k).second) throw ConfigError("strategy '" + to_string(k) + "' listed twice");
    if (is_logistic(model) != (dataset.setting == Setting::logistic))
        throw ConfigError("model " + to_string(model) + " is incompatible with dataset setting " +
                          to_string(dataset.setting));
    if (model_params.sigma2 && !(*model_params.sigma2 > 0.0))
        throw ConfigError("model_params.sigma2 must be > 0");
    if (model_params.em_iters < 1) throw ConfigError("model_params.em_iters must be >= 1");
    if (model_params.bbb.iters < 1 || !(model_params.bbb.eta0 > 0.0))
        throw ConfigError("model_params.bbb needs iters >= 1 and eta0 > 0");
    StrategyConfig sc = strategy_cfg;
    sc.bounds = bounds;
    sc.validate();
}

ExperimentConfig parse_experiment_config(const std::string& text) {
    const json j = parse_json(text);
    check_object(j, "config",
                 {"model", "model_params", "dataset", "strategies", "bounds", "repetitions", "grid_points",
                  "test_multiplier", "seed", "oracle_mc", "record_timing", "strategy_cfg"});
    ExperimentConfig c;
    if (!j.contains("model")) throw ConfigError("config key 'model' is required");
    if (!j.contains("dataset")) throw ConfigError("config key 'dataset' is required");
    c.model = parse_model(read_string(j, "model", "", "config"));
    if (j.contains("model_params")) read_model_params(j.at("model_params"), c.model_params);
    read_dataset(j.at("dataset"), c.dataset);
    if (j.contains("strategies")) {
        std::vector<std::string> names;
        read(j, "strategies", names, "config");
        c.strategies.clear();
        for (const auto& s : names) c.strategies.push_back(parse_strategy(s));
    }
    if (j.contains("bounds")) read_bounds(j.at("bounds"), c.bounds);
    read(j, "repetitions", c.repetitions, "config");
    read(j, "grid_points", c.grid_points, "config");
    read(j, "test_multiplier", c.test_multiplier, "config");
    read(j, "seed", c.seed, "config");
    read(j, "oracle_mc", c.oracle_mc, "config");
    read(j, "record_timing", c.record_timing, "config");
    if (j.contains("strategy_cfg")) read_strategy_cfg(j.at("strategy_cfg"), c.strategy_cfg);
    c.strategy_cfg.bounds = c.bounds;
    c.validate();
    return c;
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) { return config_json(cfg).dump(2); }

CalibrationConfig parse_calibration_config(const std::string& text) {
    const json j = parse_json(text);
    check_object(j, "config", {"model_params", "bounds", "strategy_cfg"});
    CalibrationConfig c;
    if (j.contains("model_params")) read_model_params(j.at("model_params"), c.model_params);
    if (j.contains("strategy_cfg")) read_strategy_cfg(j.at("strategy_cfg"), c.strategy_cfg);
    if (j.contains("bounds")) read_bounds(j.at("bounds"), c.strategy_cfg.bounds);
    c.strategy_cfg.validate();
    return c;
}

GroundTruth make_truth(const DatasetSpec& spec, std::uint64_t theta_seed) {
    GroundTruth t;
    t.setting = spec.setting;
    t.d = spec.setting == Setting::gaussian_mean ? 1 : spec.d;
    if (spec.setting != Setting::polynomial) t.theta_star = draw_theta_star(t.d, theta_seed);
    switch (spec.setting) {
        case Setting::linreg: t.noise = {NoiseKind::gaussian, spec.sigma2}; break;
        case Setting::gaussian_mean: t.noise = {NoiseKind::gaussian, 1.0}; break;
        case Setting::polynomial:
            t.noise = {NoiseKind::gaussian, spec.sigma2};
            t.f = spec.function;
            break;
        case Setting::gmm: t.noise = {NoiseKind::gmm, spec.sigma2, spec.delta2, spec.p}; break;
        case Setting::uniform:
            t.noise = {NoiseKind::uniform};
            t.noise.half_width = spec.half_width;
            break;
        case Setting::logistic:
            t.noise = {NoiseKind::none};
            t.kind = DataKind::binary;
            break;
    }
    return t;
}

std::unique_ptr<TemperedModel> make_model(ModelKind kind, const ModelParams& params,
                                          const GroundTruth& truth) {
    const Index d = truth.d;
    const bool poly = params.prior == PriorChoice::polynomial ||
                      (params.prior == PriorChoice::automatic && truth.setting == Setting::polynomial);
    GaussianPrior prior = poly ? polynomial_prior(d) : GaussianPrior::isotropic(d);
    switch (kind) {
        case ModelKind::linreg_known: {
            const double s2 = params.sigma2.value_or(truth.noise.variance());
            if (!(s2 > 0.0))
                throw ConfigError("linreg_known needs sigma2 > 0; set model_params.sigma2");
            return std::make_unique<KnownVarTempered>(KnownVarModel(s2, std::move(prior)));
        }
        case ModelKind::linreg_unknown:
            return std::make_unique<NigTempered>(
                NigModel(NigPrior{prior.mean, prior.cov, params.a0, params.b0}));
        case ModelKind::logistic_jaakkola: {
            JaakkolaOptions o;
            o.em_iters = params.em_iters;
            return std::make_unique<JaakkolaTempered>(std::move(prior), o);
        }
        case ModelKind::logistic_bbb: return std::make_unique<BbBTempered>(d, params.bbb);
    }
    throw ConfigError("unknown model");
}

double oracle_risk(const TemperedModel& model, const Dataset& train, const Dataset& test, double alpha,
                   const RiskFnOptions& opts) {
    return model.risk_function(train, test, opts)(alpha);
}

std::vector<double> alpha_grid(const AlphaBounds& bounds, int grid_points) {
    bounds.validate();
    if (grid_points < 2) throw ConfigError("grid needs at least 2 points");
    std::vector<double> g(static_cast<std::size_t>(grid_points));
    for (int k = 0; k < grid_points; ++k)
        g[static_cast<std::size_t>(k)] =
            k == grid_points - 1 ? bounds.hi
                                 : bounds.lo + (bounds.hi - bounds.lo) * k / static_cast<double>(grid_points - 1);
    return g;
}

std::vector<CurvePoint> risk_curve(const TemperedModel& model, StrategyKind strategy, const Dataset& train,
                                   const Dataset* test, const StrategyConfig& cfg, int grid_points,
                                   Index oracle_mc, std::uint64_t seed) {
    const auto objective = strategy_objective(strategy, train, model, cfg, derive_seed(seed, stream::strategy));
    std::function<double(double)> oracle;
    if (test) oracle = model.risk_function(train, *test, {oracle_mc, derive_seed(seed, stream::oracle)});
    const double n = static_cast<double>(train.size());
    std::vector<CurvePoint> out;
    for (double a : alpha_grid(cfg.bounds, grid_points)) {
        CurvePoint p;
        p.alpha_over_n = a;
        p.estimate = objective(a * n);
        p.oracle = oracle ? oracle(a * n) : std::numeric_limits<double>::quiet_NaN();
        out.push_back(p);
    }
    return out;
}

namespace {

struct RepData {
    GroundTruth truth;
    Dataset train;
    Dataset test;
    std::uint64_t seed = 0;
};

RepData repetition_data(const ExperimentConfig& cfg, int repetition) {
    RepData r;
    r.seed = cfg.seed + static_cast<std::uint64_t>(repetition);
    const bool frozen = cfg.dataset.freeze_design;
    r.truth = make_truth(cfg.dataset, frozen ? cfg.seed : r.seed);
    r.train = sample(r.truth, cfg.dataset.n, r.seed,
                     frozen ? std::optional<std::uint64_t>(cfg.seed) : std::nullopt);
    r.test = sample(r.truth, cfg.dataset.n * cfg.test_multiplier, derive_seed(r.seed, stream::test_set));
    return r;
}

StrategyConfig effective_strategy_cfg(const ExperimentConfig& cfg) {
    StrategyConfig sc = cfg.strategy_cfg;
    sc.bounds = cfg.bounds;
    return sc;
}

template <class F>
void classify(F&& f, std::string& kind, std::string& message) {
    try {
        f();
    } catch (const ConfigError& e) {
        kind = "config";
        message = e.what();
    } catch (const NumericalError& e) {
        kind = "numerical";
        message = e.what();
    } catch (const std::exception& e) {
        kind = "other";
        message = e.what();
    }
}

}  // namespace

std::vector<CurvePoint> risk_curve(const ExperimentConfig& cfg, StrategyKind strategy, int repetition) {
    cfg.validate();
    const RepData r = repetition_data(cfg, repetition);
    const auto model = make_model(cfg.model, cfg.model_params, r.truth);
    return risk_curve(*model, strategy, r.train, &r.test, effective_strategy_cfg(cfg), cfg.grid_points,
                      cfg.oracle_mc, r.seed);
}

RepetitionResult run_repetition(const ExperimentConfig& cfg, int repetition) {
    RepetitionResult out;
    out.repetition = repetition;
    RepData r;
    std::unique_ptr<TemperedModel> model;
    std::function<double(double)> oracle;
    classify(
        [&] {
            r = repetition_data(cfg, repetition);
            model = make_model(cfg.model, cfg.model_params, r.truth);
            oracle = model->risk_function(r.train, r.test, {cfg.oracle_mc, derive_seed(r.seed, stream::oracle)});
            const Index n = r.train.size();
            MinimizerOptions mo = cfg.strategy_cfg.minimizer;
            mo.grid_points = cfg.grid_points;
            out.alpha_star = minimize_bounded(oracle, cfg.bounds.lower(n), cfg.bounds.upper(n), n, mo);
            out.risk_star = oracle(out.alpha_star);
            out.min_risk = model->min_risk(r.test);
            out.ok = true;
        },
        out.error_kind, out.error);
    if (!out.ok) return out;

    const StrategyConfig sc = effective_strategy_cfg(cfg);
    const double n = static_cast<double>(r.train.size());
    for (StrategyKind kind : cfg.strategies) {
        CellResult cell;
        cell.repetition = repetition;
        cell.strategy = kind;
        classify(
            [&] {
                const auto start = std::chrono::steady_clock::now();
                const std::uint64_t s = derive_seed(derive_seed(r.seed, stream::strategy),
                                                    static_cast<std::uint64_t>(kind));
                const double alpha = run_strategy(kind, r.train, *model, sc, s);
                const auto stop = std::chrono::steady_clock::now();
                cell.outcome.alpha = alpha;
                cell.outcome.alpha_over_n = alpha / n;
                cell.outcome.oracle_risk = oracle(alpha);
                if (cfg.record_timing)
                    cell.outcome.wall_time_ms =
                        std::chrono::duration_cast<std::chrono::milliseconds>(stop - start).count();
                cell.ok = true;
            },
            cell.error_kind, cell.error);
        out.cells.push_back(std::move(cell));
    }
    return out;
}

bool ExperimentResult::partial() const {
    for (const auto& r : repetitions) {
        if (!r.ok) return true;
        for (const auto& c : r.cells)
            if (!c.ok) return true;
    }
    return false;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult result;
    result.config = cfg;
    result.repetitions.resize(static_cast<std::size_t>(cfg.repetitions));
    ParallelErrors errors;
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < cfg.repetitions; ++r) {
        errors.run([&] { result.repetitions[static_cast<std::size_t>(r)] = run_repetition(cfg, r); });
    }
    errors.rethrow();
    return result;
}

namespace reference {

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult result;
    result.config = cfg;
    for (int r = 0; r < cfg.repetitions; ++r) result.repetitions.push_back(run_repetition(cfg, r));
    return result;
}

}  // namespace reference

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ConfigError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BoxRow five_numbers(const std::string& label, const std::vector<double>& values) {
    BoxRow row;
    row.label = label;
    row.count = values.size();
    if (values.empty()) {
        row.min = row.q1 = row.median = row.q3 = row.max = std::numeric_limits<double>::quiet_NaN();
        return row;
    }
    row.min = *std::min_element(values.begin(), values.end());
    row.max = *std::max_element(values.begin(), values.end());
    row.q1 = quantile(values, 0.25);
    row.median = quantile(values, 0.5);
    row.q3 = quantile(values, 0.75);
    return row;
}

namespace {

std::vector<BoxRow> summarize(const ExperimentResult& result, bool risk) {
    std::vector<BoxRow> rows;
    for (StrategyKind k : result.config.strategies) {
        std::vector<double> v;
        for (const auto& r : result.repetitions)
            for (const auto& c : r.cells)
                if (c.ok && c.strategy == k) v.push_back(risk ? c.outcome.oracle_risk : c.outcome.alpha_over_n);
        rows.push_back(five_numbers(to_string(k), v));
    }
    std::vector<double> star, lower;
    for (const auto& r : result.repetitions) {
        if (!r.ok) continue;
        const double n = static_cast<double>(result.config.dataset.n);
        star.push_back(risk ? r.risk_star : r.alpha_star / n);
        lower.push_back(r.min_risk);
    }
    rows.push_back(five_numbers("alpha_star", star));
    if (risk) rows.push_back(five_numbers("min_risk", lower));
    return rows;
}

}  // namespace

std::vector<BoxRow> summarize_boxplot(const ExperimentResult& result) { return summarize(result, true); }
std::vector<BoxRow> summarize_alpha(const ExperimentResult& result) { return summarize(result, false); }

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string results_csv(const ExperimentResult& result, const std::string& timestamp) {
    std::string out = "# generated " + timestamp + "\n";
    out += "repetition,strategy,alpha,alpha_over_n,oracle_risk,wall_time_ms\n";
    for (const auto& r : result.repetitions) {
        for (const auto& c : r.cells) {
            if (!c.ok) continue;
            out += std::to_string(c.repetition) + "," + to_string(c.strategy) + "," +
                   format_double(c.outcome.alpha) + "," + format_double(c.outcome.alpha_over_n) + "," +
                   format_double(c.outcome.oracle_risk) + "," + std::to_string(c.outcome.wall_time_ms) + "\n";
        }
    }
    return out;
}

std::string summary_csv(const ExperimentResult& result) {
    std::string out = "quantity,label,count,min,q1,median,q3,max\n";
    auto emit = [&](const char* quantity, const std::vector<BoxRow>& rows) {
        for (const auto& b : rows)
            out += std::string(quantity) + "," + b.label + "," + std::to_string(b.count) + "," +
                   format_double(b.min) + "," + format_double(b.q1) + "," + format_double(b.median) + "," +
                   format_double(b.q3) + "," + format_double(b.max) + "\n";
    };
    emit("oracle_risk", summarize_boxplot(result));
    emit("alpha_over_n", summarize_alpha(result));
    return out;
}

std::string failures_json(const ExperimentResult& result) {
    json failures = json::array();
    for (const auto& r : result.repetitions) {
        if (!r.ok)
            failures.push_back({{"repetition", r.repetition}, {"strategy", nullptr},
                                {"kind", r.error_kind}, {"message", r.error}});
        for (const auto& c : r.cells)
            if (!c.ok)
                failures.push_back({{"repetition", c.repetition}, {"strategy", to_string(c.strategy)},
                                    {"kind", c.error_kind}, {"message", c.error}});
    }
    json j;
    j["partial"] = result.partial();
    j["failures"] = failures;
    return j.dump(2) + "\n";
}

std::string results_json(const ExperimentResult& result) {
    json reps = json::array();
    const double n = static_cast<double>(result.config.dataset.n);
    for (const auto& r : result.repetitions) {
        json jr;
        jr["repetition"] = r.repetition;
        jr["ok"] = r.ok;
        if (r.ok) {
            jr["alpha_star"] = r.alpha_star;
            jr["alpha_star_over_n"] = r.alpha_star / n;
            jr["risk_star"] = r.risk_star;
            jr["min_risk"] = r.min_risk;
        }
        json cells = json::array();
        for (const auto& c : r.cells) {
            json jc{{"strategy", to_string(c.strategy)}, {"ok", c.ok}};
            if (c.ok) {
                jc["alpha"] = c.outcome.alpha;
                jc["alpha_over_n"] = c.outcome.alpha_over_n;
                jc["oracle_risk"] = c.outcome.oracle_risk;
                jc["wall_time_ms"] = c.outcome.wall_time_ms;
            } else {
                jc["error"] = c.error;
            }
            cells.push_back(jc);
        }
        jr["cells"] = cells;
        reps.push_back(jr);
    }
    json j;
    j["config"] = config_json(result.config);
    j["partial"] = result.partial();
    j["repetitions"] = reps;
    return j.dump(2) + "\n";
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
    std::string out = "alpha_over_n,estimate,oracle\n";
    for (const auto& p : curve)
        out += format_double(p.alpha_over_n) + "," + format_double(p.estimate) + "," + format_double(p.oracle) + "\n";
    return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open '" + path.string() + "' for writing");
    os << content;
    if (!os) throw ConfigError("failed writing '" + path.string() + "'");
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

void write_experiment_outputs(const ExperimentResult& result, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
    const std::filesystem::path base(dir);
    write_file(base / "results.csv", results_csv(result, utc_timestamp()));
    write_file(base / "summary.csv", summary_csv(result));
    write_file(base / "failures.json", failures_json(result));
    write_file(base / "results.json", results_json(result));
}

}  // namespace tempcal
