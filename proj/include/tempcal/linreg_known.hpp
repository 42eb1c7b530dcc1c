#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "tempcal/core.hpp"
#include "tempcal/linalg.hpp"

namespace tempcal {

/// Linear regression Y = Z theta + eps with eps ~ N(0, sigma2) and sigma2 known.
/// The prior precision is factorized once at construction.
class KnownVarModel {
public:
    KnownVarModel(double sigma2, GaussianPrior prior);

    double sigma2() const { return sigma2_; }
    const GaussianPrior& prior() const { return prior_; }
    Index dim() const { return prior_.mean.size(); }
    const MatrixXd& prior_precision() const { return prior_precision_; }
    /// S_0^{-1} mu_0.
    const VectorXd& prior_shift() const { return prior_shift_; }

private:
    double sigma2_;
    GaussianPrior prior_;
    MatrixXd prior_precision_;
    VectorXd prior_shift_;
};

struct GaussianPosterior {
    VectorXd mean;
    MatrixXd cov;
};

/// Tempered Gaussian posterior:
///   S_P = (alpha/(sigma2 n) Z^T Z + S_0^{-1})^{-1},  mu_P = S_P (alpha/(sigma2 n) Z^T Y + S_0^{-1} mu_0).
/// alpha = 0 returns the prior unchanged.
GaussianPosterior fit(const KnownVarModel& model, const Dataset& data, double alpha);
GaussianPosterior fit(const KnownVarModel& model, const RegressionStats& stats, double alpha);

/// Expected empirical squared-error risk of eval_data under the posterior:
///   (1/(2 sigma2 m)) (Y^T Y - 2 Y^T Z mu + Tr(Z^T Z S) + mu^T Z^T Z mu).
double gen_error_estimate(const KnownVarModel& model, const GaussianPosterior& post,
                          const Dataset& eval_data);
double gen_error_estimate(const KnownVarModel& model, const GaussianPosterior& post,
                          const RegressionStats& eval_stats);

/// Exact d/dalpha of gen_error_estimate(fit(data_fit, alpha), data_eval).
double gen_error_gradient(const KnownVarModel& model, const Dataset& data_fit,
                          const Dataset& data_eval, double alpha);
double gen_error_gradient(const KnownVarModel& model, const RegressionStats& fit_stats,
                          const RegressionStats& eval_stats, double alpha);

/// Where the bootstrap gradient evaluates risk: on the original data (default) or on
/// each resample.
enum class PsiEvaluation { original, resample };

/// Row indices of one case resample of n observations.
using Resampler = std::function<std::vector<Index>(Index n, Rng& rng)>;
std::vector<Index> uniform_resample(Index n, Rng& rng);

struct BootstrapOptions {
    PsiEvaluation evaluation = PsiEvaluation::original;
    /// Defaults to uniform_resample. Replicate b draws from stream derive_seed(seed, b).
    Resampler resampler;
};

/// Average over boot case resamples of the closed-form risk gradient with the posterior
/// fit on the resample. OpenMP over replicates.
double bootstrap_gradient_psi(const KnownVarModel& model, const Dataset& base_data, double alpha,
                              Index boot, std::uint64_t seed, const BootstrapOptions& opts = {});

/// SafeBayes sum over t = 1..n-1 of the posterior-expected squared-error loss of row t+1
/// under the posterior fit on the first t rows. OpenMP over t.
double safebayes_peprl(const KnownVarModel& model, const Dataset& data, double alpha);

namespace reference {
double bootstrap_gradient_psi(const KnownVarModel& model, const Dataset& base_data, double alpha,
                              Index boot, std::uint64_t seed, const BootstrapOptions& opts = {});
double safebayes_peprl(const KnownVarModel& model, const Dataset& data, double alpha);
}  // namespace reference

struct Predictive {
    double mean = 0.0;
    double variance = 0.0;
};

/// N(z^T mu_P, sigma2 + z^T S_P z).
Predictive posterior_predictive(const KnownVarModel& model, const GaussianPosterior& post,
                                const VectorXd& z_new);

/// Gaussian-mean setting as regression on an all-ones design.
Dataset gaussian_mean_specialize(const VectorXd& x);

/// Row i is (1, zeta_i, ..., zeta_i^{d-1}).
MatrixXd vandermonde_expand(const VectorXd& zeta, Index d);

/// N(0, diag(1, 1/2, ..., 1/2^{d-1})): low powers get the larger prior variance.
GaussianPrior polynomial_prior(Index d);

/// Sampler theta = mu + L eps with L the Cholesky factor of the covariance.
PosteriorDraw gaussian_sampler(const GaussianPosterior& post);

/// Empirical squared-error risk of a draw on a dataset summarized by its statistics.
DrawRisk squared_error_draw_risk(double sigma2, RegressionStats stats);

}  // namespace tempcal
