#pragma once

#include <optional>
#include <string>

#include "tempcal/types.hpp"
#include "tempcal/rng.hpp"

namespace tempcal {

enum class NoiseKind { gaussian, gmm, uniform, none };

/// Additive noise law. gaussian: N(0, sigma2). gmm: N(0, delta2) with probability p, else
/// N(0, sigma2). uniform: U(-half_width, half_width). none: no noise (binary labels).
struct NoiseLaw {
    NoiseKind kind = NoiseKind::gaussian;
    double sigma2 = 1.0;
    double delta2 = 0.0;
    double p = 0.0;
    double half_width = 0.0;

    double variance() const;
    void validate() const;
};

/// Built-in true functions of the polynomial setting.
enum class PolyFunction { none, parabola, exp };
double eval_poly_function(PolyFunction f, double zeta);

enum class Setting { linreg, gaussian_mean, polynomial, gmm, uniform, logistic };

/// Everything needed to draw fresh observations from the generating law.
struct GroundTruth {
    Setting setting = Setting::linreg;
    Index d = 1;
    /// Empty for the polynomial setting, whose truth is the function f.
    VectorXd theta_star;
    NoiseLaw noise;
    PolyFunction f = PolyFunction::none;
    DataKind kind = DataKind::regression;

    void validate() const;
};

struct Generated {
    Dataset data;
    GroundTruth truth;
};

/// theta* ~ N(0, I_d) from stream derive_seed(seed, stream::theta_star).
VectorXd draw_theta_star(Index d, std::uint64_t seed);

/// One observation. The design row comes from design_rng, the response noise from noise_rng.
void sample_row(const GroundTruth& truth, Rng& design_rng, Rng& noise_rng, Eigen::Ref<VectorXd> z,
                double& y);

/// n rows; row i uses design stream i of derive_seed(design_seed, stream::design) and noise
/// stream i of derive_seed(seed, stream::noise). design_seed defaults to seed; fixing it
/// freezes the design across repetitions.
Dataset sample(const GroundTruth& truth, Index n, std::uint64_t seed,
               std::optional<std::uint64_t> design_seed = std::nullopt);

Generated gen_linreg(Index n, Index d, const VectorXd& theta_star, double sigma2, std::uint64_t seed);
Generated gen_gaussian_mean(Index n, double theta, std::uint64_t seed);
Generated gen_polynomial(Index n, Index d, PolyFunction f, double sigma2_true, std::uint64_t seed);
Generated gen_gmm_noise(Index n, Index d, const VectorXd& theta_star, double sigma2, double delta2,
                        double p, std::uint64_t seed);
Generated gen_uniform_noise(Index n, Index d, const VectorXd& theta_star, double half_width,
                            std::uint64_t seed);
Generated gen_logistic(Index n, Index d, const VectorXd& theta_star, std::uint64_t seed);

std::string to_string(Setting s);
Setting parse_setting(const std::string& name);
std::string to_string(NoiseKind k);
NoiseKind parse_noise_kind(const std::string& name);
std::string to_string(PolyFunction f);
PolyFunction parse_poly_function(const std::string& name);

/// CSV with header z_0,...,z_{d-1},y; values printed in shortest round-trip form.
void write_dataset_csv(const std::string& path, const Dataset& data);
Dataset read_dataset_csv(const std::string& path, DataKind kind);

std::string truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const std::string& text);
/// data.csv -> data.truth.json
std::string truth_sidecar_path(const std::string& csv_path);

}  // namespace tempcal
