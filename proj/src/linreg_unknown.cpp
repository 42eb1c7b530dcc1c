#include "tempcal/linreg_unknown.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "tempcal/parallel.hpp"

namespace tempcal {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void require_dim(Index a, Index b) {
    if (a != b) {
        std::ostringstream os;
        os << "dimension mismatch: " << a << " vs " << b;
        throw ConfigError(os.str());
    }
}

void require_posterior(const NigPosterior& post) {
    if (!(post.a > 0.0)) throw ConfigError("NIG posterior needs a > 0");
    if (!(post.b > 0.0)) throw ConfigError("NIG posterior needs b > 0");
}

}  // namespace

NigPrior NigPrior::standard(Index d) {
    return {VectorXd::Zero(d), MatrixXd::Identity(d, d), 2.0, 2.0};
}

void NigPrior::validate() const {
    GaussianPrior{mean, cov}.validate();
    if (!(a0 > 0.0) || !std::isfinite(a0)) throw ConfigError("NIG prior needs a0 > 0");
    if (!(b0 > 0.0) || !std::isfinite(b0)) throw ConfigError("NIG prior needs b0 > 0");
}

NigModel::NigModel(NigPrior prior) : prior_(std::move(prior)) {
    prior_.validate();
    prior_precision_ = spd_inverse(prior_.cov);
    prior_shift_ = prior_precision_ * prior_.mean;
}

namespace {

struct NigParts {
    VectorXd mean;
    SpdFactor precision;
    double a = 0.0;
    double b = 0.0;
};

NigParts fit_parts(const NigModel& model, const MatrixXd& ZtZ, const VectorXd& ZtY, double YtY,
                   Index n, double alpha) {
    const double c = alpha / static_cast<double>(n);
    NigParts p;
    p.precision = SpdFactor(c * ZtZ + model.prior_precision());
    p.mean = p.precision.solve(VectorXd(c * ZtY + model.prior_shift()));
    const double resid = std::max(0.0, YtY - 2.0 * ZtY.dot(p.mean) + p.mean.dot(ZtZ * p.mean));
    const VectorXd dev = p.mean - model.prior().mean;
    p.a = model.prior().a0 + alpha / 2.0;
    p.b = model.prior().b0 + 0.5 * (c * resid + dev.dot(model.prior_precision() * dev));
    if (!(p.b > 0.0) || !std::isfinite(p.b)) {
        std::ostringstream os;
        os << "ill-posed NIG posterior: b_P = " << p.b << " at alpha = " << alpha;
        throw NumericalError(os.str());
    }
    return p;
}

}  // namespace

NigPosterior fit_nig(const NigModel& model, const RegressionStats& stats, double alpha) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be finite and >= 0");
    require_dim(model.dim(), stats.dim());
    const NigPrior& pr = model.prior();
    if (alpha == 0.0) return {pr.mean, pr.cov, pr.a0, pr.b0};
    NigParts p = fit_parts(model, stats.ZtZ, stats.ZtY, stats.YtY, stats.n, alpha);
    return {std::move(p.mean), symmetrize(p.precision.inverse()), p.a, p.b};
}

NigPosterior fit_nig(const NigModel& model, const Dataset& data, double alpha) {
    data.validate();
    if (data.kind != DataKind::regression) throw ConfigError("NIG regression needs a regression dataset");
    return fit_nig(model, RegressionStats::of(data), alpha);
}

double digamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError("digamma is only defined here for finite x > 0");
    double shift = 0.0;
    while (x < 10.0) {
        shift -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    const double series =
        inv2 * (1.0 / 12 -
                inv2 * (1.0 / 120 -
                        inv2 * (1.0 / 252 -
                                inv2 * (1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12))))));
    return shift + std::log(x) - 0.5 * inv - series;
}

NigMoments nig_moments(const NigPosterior& post) {
    require_posterior(post);
    return {post.a / post.b, std::log(post.b) - digamma(post.a)};
}

namespace {

MatrixXd cov_factor(const MatrixXd& cov) {
    if (cov.isZero(0.0)) return MatrixXd::Zero(cov.rows(), cov.cols());
    return SpdFactor(cov).lower();
}

ParamDraw draw_with_factor(const NigPosterior& post, const MatrixXd& L, Rng& rng) {
    std::gamma_distribution<double> gamma(post.a, 1.0 / post.b);
    ParamDraw p;
    p.sigma2 = 1.0 / gamma(rng);
    p.theta = post.mean + std::sqrt(p.sigma2) * (L * standard_normal_vector(post.mean.size(), rng));
    return p;
}

}  // namespace

ParamDraw sample_nig(const NigPosterior& post, Rng& rng) {
    require_posterior(post);
    return draw_with_factor(post, cov_factor(post.cov), rng);
}

PosteriorDraw nig_sampler(const NigPosterior& post) {
    require_posterior(post);
    return [post, L = cov_factor(post.cov)](Rng& rng) { return draw_with_factor(post, L, rng); };
}

DrawRisk nig_draw_risk(RegressionStats stats) {
    return [stats = std::move(stats)](const ParamDraw& p) {
        return stats.squared_residual(p.theta) / (2.0 * p.sigma2 * static_cast<double>(stats.n)) +
               0.5 * (kLog2Pi + std::log(p.sigma2));
    };
}

double gen_error_estimate_nig(const NigPosterior& post, const RegressionStats& eval,
                              NigRiskMode mode, Index mc, std::uint64_t seed) {
    require_posterior(post);
    require_dim(post.mean.size(), eval.dim());
    const double m = static_cast<double>(eval.n);
    const NigMoments mom = nig_moments(post);
    const double trace = eval.ZtZ.cwiseProduct(post.cov).sum();
    switch (mode) {
        case NigRiskMode::mc:
            return mc_expectation(nig_sampler(post), nig_draw_risk(eval), mc, seed).value;
        case NigRiskMode::closed_form:
            return (mom.inv_sigma2 * eval.squared_residual(post.mean) + trace) / (2.0 * m) +
                   0.5 * (mom.log_sigma2 + kLog2Pi);
        case NigRiskMode::appendix: {
            const double d = static_cast<double>(post.mean.size());
            if (!(post.a + (d - 3.0) / 2.0 > 0.0))
                throw ConfigError("appendix NIG risk needs a + (d-3)/2 > 0; use mc mode");
            const double la = std::lgamma(post.a), lb = std::log(post.b);
            const double lin = std::exp(std::lgamma(post.a + (d - 1.0) / 2.0) - la - (d - 1.0) / 2.0 * lb);
            const double tr_coef = std::exp(std::lgamma(post.a + d / 2.0 - 0.5) - la - (d / 2.0 - 0.5) * lb);
            const double mu_coef = std::exp(std::lgamma(post.a + d / 2.0 - 1.5) - la - (d / 2.0 - 1.5) * lb);
            const double quad = tr_coef * trace + mu_coef * post.mean.dot(eval.ZtZ * post.mean);
            return (mom.inv_sigma2 * eval.YtY - 2.0 * lin * eval.ZtY.dot(post.mean) + quad) / (2.0 * m) +
                   0.5 * (mom.log_sigma2 + kLog2Pi);
        }
    }
    throw ConfigError("unknown NIG risk mode");
}

double gen_error_estimate_nig(const NigPosterior& post, const Dataset& eval_data, NigRiskMode mode,
                              Index mc, std::uint64_t seed) {
    eval_data.validate();
    return gen_error_estimate_nig(post, RegressionStats::of(eval_data), mode, mc, seed);
}

namespace {

struct NigPrefixes {
    std::vector<MatrixXd> ZtZ;  // entry t-1 holds rows [0, t)
    std::vector<VectorXd> ZtY;
    std::vector<double> YtY;
};

NigPrefixes nig_prefixes(const Dataset& data) {
    NigPrefixes p;
    MatrixXd G = MatrixXd::Zero(data.dim(), data.dim());
    VectorXd b = VectorXd::Zero(data.dim());
    double yy = 0.0;
    for (Index t = 1; t < data.size(); ++t) {
        const VectorXd z = data.Z.row(t - 1).transpose();
        const double y = data.Y(t - 1);
        G.noalias() += z * z.transpose();
        b += y * z;
        yy += y * y;
        p.ZtZ.push_back(G);
        p.ZtY.push_back(b);
        p.YtY.push_back(yy);
    }
    return p;
}

double nig_peprl_term(const NigModel& model, const Dataset& data, const NigPrefixes& p,
                      double alpha, Index t, NigPeprlForm form) {
    const auto k = static_cast<std::size_t>(t - 1);
    const NigPrior& pr = model.prior();
    const VectorXd z = data.Z.row(t).transpose();
    double a, b, quad_s, resid;
    if (alpha == 0.0) {
        a = pr.a0;
        b = pr.b0;
        resid = data.Y(t) - z.dot(pr.mean);
        quad_s = z.dot(pr.cov * z);
    } else {
        const NigParts parts = fit_parts(model, p.ZtZ[k], p.ZtY[k], p.YtY[k], t, alpha);
        a = parts.a;
        b = parts.b;
        resid = data.Y(t) - z.dot(parts.mean);
        quad_s = parts.precision.whiten(z).squaredNorm();
    }
    const double log_term = std::log(b) - digamma(a);
    if (form == NigPeprlForm::appendix)
        return a / (2.0 * b) * (resid * resid + quad_s) + 0.5 * log_term;
    return a / (2.0 * b) * resid * resid + 0.5 * quad_s + 0.5 * (log_term + kLog2Pi);
}

void check_nig_peprl(const NigModel& model, const Dataset& data, double alpha) {
    data.validate();
    require_dim(model.dim(), data.dim());
    if (data.size() < 2) throw ConfigError("SafeBayes needs n >= 2");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be finite and >= 0");
}

}  // namespace

double safebayes_peprl_nig(const NigModel& model, const Dataset& data, double alpha,
                           NigPeprlForm form) {
    check_nig_peprl(model, data, alpha);
    const NigPrefixes p = nig_prefixes(data);
    const Index n = data.size();
    std::vector<double> terms(static_cast<std::size_t>(n), 0.0);
    ParallelErrors errors;
#pragma omp parallel for schedule(dynamic)
    for (Index t = 1; t < n; ++t) {
        errors.run([&] {
            terms[static_cast<std::size_t>(t)] = nig_peprl_term(model, data, p, alpha, t, form);
        });
    }
    errors.rethrow();
    double sum = 0.0;
    for (double v : terms) sum += v;
    return sum;
}

namespace reference {

double safebayes_peprl_nig(const NigModel& model, const Dataset& data, double alpha,
                           NigPeprlForm form) {
    check_nig_peprl(model, data, alpha);
    const NigPrefixes p = nig_prefixes(data);
    double sum = 0.0;
    for (Index t = 1; t < data.size(); ++t) sum += nig_peprl_term(model, data, p, alpha, t, form);
    return sum;
}

}  // namespace reference

}  // namespace tempcal
