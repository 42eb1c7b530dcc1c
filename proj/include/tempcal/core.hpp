#pragma once

#include <cstdint>
#include <functional>

#include "tempcal/rng.hpp"
#include "tempcal/types.hpp"

namespace tempcal {

/// Per-point loss l(theta, X_i).
using PointLoss = std::function<double(const VectorXd& theta, const Dataset& data, Index i)>;

/// Mean of loss(theta, X_i) over the dataset. Throws NumericalError naming the first
/// index whose loss is not finite.
double empirical_risk(const PointLoss& loss, const VectorXd& theta, const Dataset& data);

/// (Y_i - Z_i^T theta)^2 / (2 sigma2).
PointLoss squared_error_loss(double sigma2);

/// Sufficient statistics of a regression dataset: Z^T Z, Z^T Y, Y^T Y and the row count.
/// Linear-model posteriors and risks depend on the data only through these.
struct RegressionStats {
    MatrixXd ZtZ;
    VectorXd ZtY;
    double YtY = 0.0;
    Index n = 0;

    static RegressionStats of(const Dataset& data);
    Index dim() const { return ZtY.size(); }
    /// Sum of squared residuals ||Y - Z theta||^2 expanded through the statistics.
    double squared_residual(const VectorXd& theta) const;
};

/// Draws one parameter vector from a posterior. Must be callable concurrently.
using PosteriorDraw = std::function<ParamDraw(Rng&)>;
/// A risk function of a parameter draw, e.g. an empirical risk over some data batch.
using DrawRisk = std::function<double(const ParamDraw&)>;

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Monte-Carlo draws are generated in fixed blocks; block b uses stream
/// derive_seed(seed, b). Both kernels below consume identical random numbers.
inline constexpr Index kMcBlock = 256;

/// Negated sample covariance of r_train and r_test under mc posterior draws:
///   -( (1/mc) sum r_test r_train - (1/mc^2) sum r_test * sum r_train ).
/// For exact tempered posteriors this estimates d/dalpha E[r_test]. OpenMP over blocks.
McEstimate covariance_gradient_mc_se(const PosteriorDraw& sampler, const DrawRisk& r_train,
                                     const DrawRisk& r_test, Index mc, std::uint64_t seed);

inline double covariance_gradient_mc(const PosteriorDraw& sampler, const DrawRisk& r_train,
                                     const DrawRisk& r_test, Index mc, std::uint64_t seed) {
    return covariance_gradient_mc_se(sampler, r_train, r_test, mc, seed).value;
}

/// Posterior mean of a risk estimated from mc draws (common random numbers under seed).
McEstimate mc_expectation(const PosteriorDraw& sampler, const DrawRisk& risk, Index mc,
                          std::uint64_t seed);

namespace reference {
/// Single-threaded versions of the kernels above. Results are bit-identical.
McEstimate covariance_gradient_mc_se(const PosteriorDraw& sampler, const DrawRisk& r_train,
                                     const DrawRisk& r_test, Index mc, std::uint64_t seed);
McEstimate mc_expectation(const PosteriorDraw& sampler, const DrawRisk& risk, Index mc,
                          std::uint64_t seed);
}  // namespace reference

struct SgdOptions {
    /// eta_0 = eta0_scale * n^2, see sgd_over_alpha.
    double eta0_scale = 0.5;
    int max_iters = 200;
    double tol = 1e-4;
};

/// Gradient oracle for the temperature SGD; iter is 1-based so callers can draw a fresh
/// Monte-Carlo batch per step.
using AlphaGradient = std::function<double(double alpha, int iter)>;

/// Projected SGD over alpha with step eta_t = eta_0 / sqrt(t):
///   alpha <- clip(alpha - eta_t * grad(alpha), lo*n, hi*n)
/// stopping after max_iters or once |delta alpha| / n < tol.
double sgd_over_alpha(const AlphaGradient& grad, double alpha_init, const AlphaBounds& bounds,
                      Index n, const SgdOptions& opts = {});

struct MinimizerOptions {
    int grid_points = 200;
    /// Golden-section refinement stops when the bracket is below xtol * n.
    double xtol = 1e-5;
    /// Values within rel_tie * max(1, |f|) of the minimum count as ties; ties resolve
    /// toward smaller alpha.
    double rel_tie = 1e-10;
};

/// Bounded scalar minimization on [lo, hi]: uniform grid scan followed by golden-section
/// refinement around the best grid point. A refined point replaces the grid minimum only
/// if it improves on it by more than the tie tolerance, so boundary minima are returned
/// exactly.
double minimize_bounded(const std::function<double(double)>& f, double lo, double hi, Index n,
                        const MinimizerOptions& opts = {});

}  // namespace tempcal
