#pragma once

#include "tempcal/core.hpp"
#include "tempcal/linalg.hpp"

namespace tempcal {

double sigmoid(double u);
/// log(1 + e^u) without overflow.
double softplus(double u);
/// Inverse of softplus for sigma > 0.
double inverse_softplus(double sigma);

/// softplus(u) - y u with u = theta^T z; equals -y log s(u) - (1-y) log s(-u).
double logistic_loss_u(double u, double y);
double logistic_loss(const VectorXd& theta, const VectorXd& z, double y);
PointLoss logistic_point_loss();
/// Mean logistic loss of a draw over a binary dataset.
DrawRisk logistic_draw_risk(Dataset data);
/// Gradient of the mean logistic loss with respect to theta.
VectorXd logistic_risk_gradient(const VectorXd& theta, const Dataset& data);

/// tanh(v/2) / (4v), which equals (s(v) - 1/2) / (2v); 1/8 at v = 0.
double lambda_of_v(double v);

struct JaakkolaState {
    VectorXd mean;
    MatrixXd cov;
    /// Variational points that produced (mean, cov).
    VectorXd v;
};

struct JaakkolaOptions {
    int em_iters = 5;
    /// Start from v ~ U(0.5, 1.5) drawn from init_seed instead of all ones.
    bool random_init = false;
    std::uint64_t init_seed = 0;
};

/// Jaakkola-Jordan variational posterior. Each iteration sets
///   S_P = (S_0^{-1} + 2 a' sum lambda(v_i) z_i z_i^T)^{-1},  mu_P = S_P (S_0^{-1} mu_0 + a' sum (y_i - 1/2) z_i)
/// with a' = alpha/n, then v_i = sqrt(z_i^T (S_P + mu_P mu_P^T) z_i).
JaakkolaState jaakkola_fit(const GaussianPrior& prior, const Dataset& data, double alpha,
                           const JaakkolaOptions& opts = {});
/// The v-update for a given (mean, cov).
VectorXd jaakkola_points(const VectorXd& mean, const MatrixXd& cov, const Dataset& data);

/// Mean-field Gaussian with standard deviations softplus(rho).
struct BbBState {
    VectorXd mean;
    VectorXd rho;

    /// mean 0, sigma 1.
    static BbBState standard(Index d);
    VectorXd sigma() const;
};

/// f(theta) = log q(theta) - log N(theta; 0, I) + alpha r_n(theta), dropping the shared
/// normalizing constant. Its expectation under q is the negative tempered ELBO.
double bbb_negative_elbo(const VectorXd& theta, const BbBState& state, const Dataset& data,
                         double alpha);

/// Explicit partial derivatives of f, each holding the other arguments fixed.
struct BbBPartials {
    VectorXd d_theta;
    VectorXd d_mean;
    VectorXd d_rho;
};
BbBPartials bbb_partials(const VectorXd& theta, const BbBState& state, const Dataset& data,
                         double alpha);

struct BbBOptions {
    int iters = 200;
    double eta0 = 0.1;
};

/// Reparametrized SGD: theta = mu + softplus(rho) eps with one eps ~ N(0, I) per step, then
///   mu  <- mu  - eta_t (df/dtheta + df/dmu)
///   rho <- rho - eta_t (df/dtheta * eps * s(rho) + df/drho)
/// with eta_t = eta0 / sqrt(t). Starts at the standard-normal prior.
BbBState bbb_fit(const Dataset& data, double alpha, const BbBOptions& opts, std::uint64_t seed);

PosteriorDraw bbb_sampler(const BbBState& state);

/// Average empirical logistic risk over mc posterior draws.
double mc_risk(const PosteriorDraw& sampler, const Dataset& data, Index mc, std::uint64_t seed);

}  // namespace tempcal
