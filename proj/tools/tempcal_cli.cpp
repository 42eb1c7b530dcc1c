#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tempcal/harness.hpp"

using namespace tempcal;

namespace {

constexpr const char* kVersion = "tempcal 0.1.0";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

DataKind kind_of(ModelKind m) {
    return m == ModelKind::logistic_jaakkola || m == ModelKind::logistic_bbb ? DataKind::binary
                                                                            : DataKind::regression;
}

// The truth sidecar when present; otherwise an N(0, 1)-noise linear truth of the data's
// dimension, which sets the default model variance to 1.
std::optional<GroundTruth> load_truth(const std::string& data_path) {
    const std::string side = truth_sidecar_path(data_path);
    if (!std::filesystem::exists(side)) return std::nullopt;
    return truth_from_json(read_file(side));
}

GroundTruth truth_or_default(const std::optional<GroundTruth>& truth, const Dataset& data) {
    if (truth) {
        if (truth->d != data.dim())
            throw ConfigError("truth sidecar dimension does not match the data");
        return *truth;
    }
    GroundTruth t;
    t.d = data.dim();
    t.kind = data.kind;
    if (data.kind == DataKind::binary) {
        t.setting = Setting::logistic;
        t.noise = {NoiseKind::none};
    }
    return t;
}

CalibrationConfig load_calibration(const std::string& config_path) {
    if (config_path.empty()) return {};
    return parse_calibration_config(read_file(config_path));
}

struct GenArgs {
    std::string setting;
    Index n = 0;
    Index d = 0;
    double sigma2 = 1.0;
    double delta2 = 0.1;
    double p = 0.5;
    double half_width = 4.5;
    std::string function = "parabola";
    std::uint64_t seed = 0;
    std::string out;
};

int gen_data(const GenArgs& a) {
    DatasetSpec spec;
    spec.setting = parse_setting(a.setting);
    spec.n = a.n;
    spec.d = a.d;
    spec.sigma2 = a.sigma2;
    spec.delta2 = a.delta2;
    spec.p = a.p;
    spec.half_width = a.half_width;
    spec.function = parse_poly_function(a.function);
    spec.validate();
    const GroundTruth truth = make_truth(spec, a.seed);
    const Dataset data = sample(truth, spec.n, a.seed);
    write_dataset_csv(a.out, data);
    std::ofstream side(truth_sidecar_path(a.out));
    if (!side) throw ConfigError("cannot write '" + truth_sidecar_path(a.out) + "'");
    side << truth_to_json(truth) << '\n';
    return 0;
}

struct FitArgs {
    std::string model;
    std::string strategy;
    std::string data;
    std::string config;
    std::uint64_t seed = 0;
    int grid = 50;
    int test_multiplier = 100;
    Index oracle_mc = 2000;
    std::string out;
};

int calibrate(const FitArgs& a) {
    const ModelKind mk = parse_model(a.model);
    const StrategyKind sk = parse_strategy(a.strategy);
    const CalibrationConfig cc = load_calibration(a.config);
    const Dataset data = read_dataset_csv(a.data, kind_of(mk));
    const GroundTruth truth = truth_or_default(load_truth(a.data), data);
    const auto model = make_model(mk, cc.model_params, truth);
    const double alpha = run_strategy(sk, data, *model, cc.strategy_cfg, a.seed);
    nlohmann::ordered_json j;
    j["alpha"] = alpha;
    j["alpha_over_n"] = alpha / static_cast<double>(data.size());
    std::cout << j.dump() << '\n';
    return 0;
}

int curve(const FitArgs& a) {
    if (a.grid < 2) throw ConfigError("--grid must be >= 2");
    if (a.test_multiplier < 1) throw ConfigError("--test-multiplier must be >= 1");
    const ModelKind mk = parse_model(a.model);
    const StrategyKind sk = parse_strategy(a.strategy);
    const CalibrationConfig cc = load_calibration(a.config);
    const Dataset data = read_dataset_csv(a.data, kind_of(mk));
    const std::optional<GroundTruth> truth = load_truth(a.data);
    const auto model = make_model(mk, cc.model_params, truth_or_default(truth, data));
    std::optional<Dataset> test;
    if (truth)
        test = sample(*truth, data.size() * a.test_multiplier, derive_seed(a.seed, stream::test_set));
    const auto table = risk_curve(*model, sk, data, test ? &*test : nullptr, cc.strategy_cfg, a.grid,
                                  a.oracle_mc, a.seed);
    std::ofstream out(a.out);
    if (!out) throw ConfigError("cannot write '" + a.out + "'");
    out << curve_csv(table);
    return 0;
}

int experiment(const std::string& config_path, const std::string& out_dir) {
    const ExperimentConfig cfg = parse_experiment_config(read_file(config_path));
    const ExperimentResult result = run_experiment(cfg);
    std::filesystem::create_directories(out_dir);
    write_experiment_outputs(result, out_dir);
    if (result.partial()) std::cerr << "warning: some cells failed, see failures.json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temperature calibration for alpha-posteriors"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen-data", "Draw a synthetic dataset and its truth sidecar");
    g->add_option("--setting", gen.setting, "linreg, gaussian_mean, polynomial, gmm, uniform, logistic")
        ->required();
    g->add_option("--n", gen.n, "Rows")->required();
    g->add_option("--d", gen.d, "Dimension")->required();
    g->add_option("--sigma2", gen.sigma2, "Noise variance");
    g->add_option("--delta2", gen.delta2, "Narrow component variance (gmm)");
    g->add_option("--p", gen.p, "Narrow component weight (gmm)");
    g->add_option("--half-width", gen.half_width, "Noise half width (uniform)");
    g->add_option("--function", gen.function, "True function: parabola or exp (polynomial)");
    g->add_option("--seed", gen.seed, "Seed");
    g->add_option("--out", gen.out, "Output CSV")->required();

    FitArgs cal;
    auto* c = app.add_subcommand("calibrate", "Select alpha on a dataset");
    c->add_option("--model", cal.model, "linreg_known, linreg_unknown, logistic_jaakkola, logistic_bbb")
        ->required();
    c->add_option("--strategy", cal.strategy, "bayes, naive, sample_split, bootstrap, safebayes")
        ->required();
    c->add_option("--data", cal.data, "Dataset CSV")->required();
    c->add_option("--config", cal.config, "JSON with model_params, bounds, strategy_cfg");
    c->add_option("--seed", cal.seed, "Seed");

    FitArgs cur;
    auto* k = app.add_subcommand("curve", "Strategy objective and oracle risk over an alpha grid");
    k->add_option("--model", cur.model, "Model")->required();
    k->add_option("--strategy", cur.strategy, "Strategy")->required();
    k->add_option("--data", cur.data, "Dataset CSV")->required();
    k->add_option("--grid", cur.grid, "Grid points")->required();
    k->add_option("--out", cur.out, "Output CSV")->required();
    k->add_option("--config", cur.config, "JSON with model_params, bounds, strategy_cfg");
    k->add_option("--seed", cur.seed, "Seed");
    k->add_option("--test-multiplier", cur.test_multiplier, "Oracle test set size over n");
    k->add_option("--oracle-mc", cur.oracle_mc, "Draws for Monte-Carlo oracle risks");

    std::string config_path, out_dir;
    auto* e = app.add_subcommand("experiment", "Run the repetition protocol");
    e->add_option("--config", config_path, "Experiment JSON")->required();
    e->add_option("--out-dir", out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*g) return gen_data(gen);
        if (*c) return calibrate(cal);
        if (*k) return curve(cur);
        if (*e) return experiment(config_path, out_dir);
    } catch (const ConfigError& err) {
        std::cerr << "config error: " << err.what() << '\n';
        return 1;
    } catch (const NumericalError& err) {
        std::cerr << "numerical error: " << err.what() << '\n';
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    }
    return 0;
}
