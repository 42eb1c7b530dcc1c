#include "tempcal/linreg_known.hpp"

#include <cmath>
#include <sstream>

#include "tempcal/parallel.hpp"

namespace tempcal {

KnownVarModel::KnownVarModel(double sigma2, GaussianPrior prior)
    : sigma2_(sigma2), prior_(std::move(prior)) {
    if (!(sigma2_ > 0.0) || !std::isfinite(sigma2_))
        throw ConfigError("known-variance model needs a finite sigma2 > 0");
    prior_.validate();
    prior_precision_ = spd_inverse(prior_.cov);
    prior_shift_ = prior_precision_ * prior_.mean;
}

namespace {

void require_regression(const Dataset& data) {
    data.validate();
    if (data.kind != DataKind::regression)
        throw ConfigError("linear regression needs a regression dataset");
}

void require_dim(Index model_dim, Index data_dim) {
    if (model_dim != data_dim) {
        std::ostringstream os;
        os << "dimension mismatch: model has d = " << model_dim << ", data has d = " << data_dim;
        throw ConfigError(os.str());
    }
}

void require_alpha(double alpha) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be finite and >= 0");
}

// alpha / (sigma2 * n): the weight of the data term in the posterior precision.
double data_weight(const KnownVarModel& model, Index n, double alpha) {
    return alpha / (model.sigma2() * static_cast<double>(n));
}

}  // namespace

GaussianPosterior fit(const KnownVarModel& model, const RegressionStats& stats, double alpha) {
    require_alpha(alpha);
    require_dim(model.dim(), stats.dim());
    if (alpha == 0.0) return {model.prior().mean, model.prior().cov};
    const double c = data_weight(model, stats.n, alpha);
    const SpdFactor precision(c * stats.ZtZ + model.prior_precision());
    GaussianPosterior post;
    post.mean = precision.solve(VectorXd(c * stats.ZtY + model.prior_shift()));
    post.cov = symmetrize(precision.inverse());
    return post;
}

GaussianPosterior fit(const KnownVarModel& model, const Dataset& data, double alpha) {
    require_regression(data);
    return fit(model, RegressionStats::of(data), alpha);
}

double gen_error_estimate(const KnownVarModel& model, const GaussianPosterior& post,
                          const RegressionStats& eval) {
    require_dim(post.mean.size(), eval.dim());
    const double quad = eval.YtY - 2.0 * eval.ZtY.dot(post.mean) +
                        eval.ZtZ.cwiseProduct(post.cov).sum() + post.mean.dot(eval.ZtZ * post.mean);
    return quad / (2.0 * model.sigma2() * static_cast<double>(eval.n));
}

double gen_error_estimate(const KnownVarModel& model, const GaussianPosterior& post,
                          const Dataset& eval_data) {
    require_regression(eval_data);
    return gen_error_estimate(model, post, RegressionStats::of(eval_data));
}

double gen_error_gradient(const KnownVarModel& model, const RegressionStats& fs,
                          const RegressionStats& es, double alpha) {
    require_dim(fs.dim(), es.dim());
    const GaussianPosterior post = fit(model, fs, alpha);
    const double c = 1.0 / (model.sigma2() * static_cast<double>(fs.n));
    const MatrixXd& S = post.cov;
    const VectorXd dmu = c * (S * (fs.ZtY - fs.ZtZ * post.mean));
    const MatrixXd SG = S * fs.ZtZ;
    const MatrixXd dS = -c * (SG * S);
    const double dquad = -2.0 * es.ZtY.dot(dmu) + es.ZtZ.cwiseProduct(dS).sum() +
                         2.0 * post.mean.dot(es.ZtZ * dmu);
    return dquad / (2.0 * model.sigma2() * static_cast<double>(es.n));
}

double gen_error_gradient(const KnownVarModel& model, const Dataset& data_fit,
                          const Dataset& data_eval, double alpha) {
    require_regression(data_fit);
    require_regression(data_eval);
    return gen_error_gradient(model, RegressionStats::of(data_fit), RegressionStats::of(data_eval),
                              alpha);
}

std::vector<Index> uniform_resample(Index n, Rng& rng) {
    std::uniform_int_distribution<Index> pick(0, n - 1);
    std::vector<Index> rows(static_cast<std::size_t>(n));
    for (auto& r : rows) r = pick(rng);
    return rows;
}

namespace {

double bootstrap_replicate(const KnownVarModel& model, const Dataset& base,
                           const RegressionStats& base_stats, double alpha, std::uint64_t seed,
                           Index b, const BootstrapOptions& opts) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(b));
    const std::vector<Index> rows =
        opts.resampler ? opts.resampler(base.size(), rng) : uniform_resample(base.size(), rng);
    const RegressionStats boot_stats = RegressionStats::of(base.select(rows));
    const RegressionStats& eval =
        opts.evaluation == PsiEvaluation::original ? base_stats : boot_stats;
    return gen_error_gradient(model, boot_stats, eval, alpha);
}

void check_boot(const KnownVarModel& model, const Dataset& base, double alpha, Index boot) {
    if (boot < 1) throw ConfigError("bootstrap needs boot >= 1");
    require_regression(base);
    require_dim(model.dim(), base.dim());
    require_alpha(alpha);
}

}  // namespace

double bootstrap_gradient_psi(const KnownVarModel& model, const Dataset& base_data, double alpha,
                              Index boot, std::uint64_t seed, const BootstrapOptions& opts) {
    check_boot(model, base_data, alpha, boot);
    const RegressionStats base_stats = RegressionStats::of(base_data);
    std::vector<double> grads(static_cast<std::size_t>(boot));
    ParallelErrors errors;
#pragma omp parallel for schedule(dynamic)
    for (Index b = 0; b < boot; ++b) {
        errors.run([&] {
            grads[static_cast<std::size_t>(b)] =
                bootstrap_replicate(model, base_data, base_stats, alpha, seed, b, opts);
        });
    }
    errors.rethrow();
    double sum = 0.0;
    for (double g : grads) sum += g;
    return sum / static_cast<double>(boot);
}

namespace {

struct Prefixes {
    std::vector<MatrixXd> ZtZ;  // entry t-1 holds rows [0, t)
    std::vector<VectorXd> ZtY;
};

Prefixes prefix_stats(const Dataset& data) {
    const Index n = data.size(), d = data.dim();
    Prefixes p;
    MatrixXd G = MatrixXd::Zero(d, d);
    VectorXd b = VectorXd::Zero(d);
    for (Index t = 1; t < n; ++t) {
        const VectorXd z = data.Z.row(t - 1).transpose();
        G.noalias() += z * z.transpose();
        b += data.Y(t - 1) * z;
        p.ZtZ.push_back(G);
        p.ZtY.push_back(b);
    }
    return p;
}

// Posterior-expected loss of row t (0-based) under the posterior on rows [0, t), times 2 sigma2.
double peprl_term(const KnownVarModel& model, const Dataset& data, const Prefixes& p, double alpha,
                  Index t) {
    const double c = data_weight(model, t, alpha);
    const auto k = static_cast<std::size_t>(t - 1);
    const SpdFactor precision(c * p.ZtZ[k] + model.prior_precision());
    const VectorXd mu = precision.solve(VectorXd(c * p.ZtY[k] + model.prior_shift()));
    const VectorXd z = data.Z.row(t).transpose();
    const double resid = data.Y(t) - z.dot(mu);
    return resid * resid + precision.whiten(z).squaredNorm();
}

void check_peprl(const KnownVarModel& model, const Dataset& data, double alpha) {
    require_regression(data);
    require_dim(model.dim(), data.dim());
    require_alpha(alpha);
    if (data.size() < 2) throw ConfigError("SafeBayes needs n >= 2");
}

}  // namespace

double safebayes_peprl(const KnownVarModel& model, const Dataset& data, double alpha) {
    check_peprl(model, data, alpha);
    const Prefixes p = prefix_stats(data);
    const Index n = data.size();
    std::vector<double> terms(static_cast<std::size_t>(n), 0.0);
    ParallelErrors errors;
#pragma omp parallel for schedule(dynamic)
    for (Index t = 1; t < n; ++t) {
        errors.run([&] { terms[static_cast<std::size_t>(t)] = peprl_term(model, data, p, alpha, t); });
    }
    errors.rethrow();
    double sum = 0.0;
    for (double v : terms) sum += v;
    return sum / (2.0 * model.sigma2());
}

namespace reference {

double bootstrap_gradient_psi(const KnownVarModel& model, const Dataset& base_data, double alpha,
                              Index boot, std::uint64_t seed, const BootstrapOptions& opts) {
    check_boot(model, base_data, alpha, boot);
    const RegressionStats base_stats = RegressionStats::of(base_data);
    double sum = 0.0;
    for (Index b = 0; b < boot; ++b)
        sum += bootstrap_replicate(model, base_data, base_stats, alpha, seed, b, opts);
    return sum / static_cast<double>(boot);
}

double safebayes_peprl(const KnownVarModel& model, const Dataset& data, double alpha) {
    check_peprl(model, data, alpha);
    const Prefixes p = prefix_stats(data);
    double sum = 0.0;
    for (Index t = 1; t < data.size(); ++t) sum += peprl_term(model, data, p, alpha, t);
    return sum / (2.0 * model.sigma2());
}

}  // namespace reference

Predictive posterior_predictive(const KnownVarModel& model, const GaussianPosterior& post,
                                const VectorXd& z_new) {
    require_dim(post.mean.size(), z_new.size());
    return {z_new.dot(post.mean), model.sigma2() + z_new.dot(post.cov * z_new)};
}

Dataset gaussian_mean_specialize(const VectorXd& x) {
    return {MatrixXd::Ones(x.size(), 1), x, DataKind::regression};
}

MatrixXd vandermonde_expand(const VectorXd& zeta, Index d) {
    if (d < 1) throw ConfigError("Vandermonde expansion needs d >= 1");
    MatrixXd Z(zeta.size(), d);
    for (Index i = 0; i < zeta.size(); ++i) {
        double p = 1.0;
        for (Index k = 0; k < d; ++k) {
            Z(i, k) = p;
            p *= zeta(i);
        }
    }
    return Z;
}

GaussianPrior polynomial_prior(Index d) {
    if (d < 1) throw ConfigError("polynomial prior needs d >= 1");
    GaussianPrior prior{VectorXd::Zero(d), MatrixXd::Zero(d, d)};
    for (Index k = 0; k < d; ++k) prior.cov(k, k) = std::ldexp(1.0, -static_cast<int>(k));
    return prior;
}

PosteriorDraw gaussian_sampler(const GaussianPosterior& post) {
    const MatrixXd L = post.cov.isZero(0.0) ? MatrixXd::Zero(post.cov.rows(), post.cov.cols())
                                            : SpdFactor(post.cov).lower();
    return [mean = post.mean, L](Rng& rng) {
        ParamDraw p;
        p.theta = mean + L * standard_normal_vector(mean.size(), rng);
        return p;
    };
}

DrawRisk squared_error_draw_risk(double sigma2, RegressionStats stats) {
    return [sigma2, stats = std::move(stats)](const ParamDraw& p) {
        return stats.squared_residual(p.theta) / (2.0 * sigma2 * static_cast<double>(stats.n));
    };
}

}  // namespace tempcal
