#include "tempcal/logistic.hpp"

#include <cmath>
#include <sstream>

namespace tempcal {

double sigmoid(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

double softplus(double u) {
    return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

double inverse_softplus(double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("inverse softplus needs sigma > 0");
    return sigma > 20.0 ? sigma + std::log1p(-std::exp(-sigma)) : std::log(std::expm1(sigma));
}

double logistic_loss_u(double u, double y) { return softplus(u) - y * u; }

double logistic_loss(const VectorXd& theta, const VectorXd& z, double y) {
    return logistic_loss_u(theta.dot(z), y);
}

PointLoss logistic_point_loss() {
    return [](const VectorXd& theta, const Dataset& data, Index i) {
        return logistic_loss_u(data.Z.row(i).dot(theta), data.Y(i));
    };
}

namespace {

double mean_logistic_loss(const VectorXd& theta, const Dataset& data) {
    const VectorXd u = data.Z * theta;
    double sum = 0.0;
    for (Index i = 0; i < u.size(); ++i) sum += logistic_loss_u(u(i), data.Y(i));
    return sum / static_cast<double>(data.size());
}

void require_binary(const Dataset& data) {
    data.validate();
    if (data.kind != DataKind::binary) throw ConfigError("logistic regression needs a binary dataset");
}

}  // namespace

DrawRisk logistic_draw_risk(Dataset data) {
    require_binary(data);
    return [data = std::move(data)](const ParamDraw& p) { return mean_logistic_loss(p.theta, data); };
}

VectorXd logistic_risk_gradient(const VectorXd& theta, const Dataset& data) {
    const VectorXd u = data.Z * theta;
    VectorXd w(u.size());
    for (Index i = 0; i < u.size(); ++i) w(i) = sigmoid(u(i)) - data.Y(i);
    return data.Z.transpose() * w / static_cast<double>(data.size());
}

double lambda_of_v(double v) {
    if (!(v >= 0.0)) throw ConfigError("lambda(v) needs v >= 0");
    if (v < 1e-4) return 0.125 - v * v / 96.0;
    return std::tanh(0.5 * v) / (4.0 * v);
}

VectorXd jaakkola_points(const VectorXd& mean, const MatrixXd& cov, const Dataset& data) {
    const MatrixXd second = cov + mean * mean.transpose();
    const MatrixXd ZM = data.Z * second;
    VectorXd v(data.size());
    for (Index i = 0; i < data.size(); ++i)
        v(i) = std::sqrt(std::max(0.0, ZM.row(i).dot(data.Z.row(i))));
    return v;
}

JaakkolaState jaakkola_fit(const GaussianPrior& prior, const Dataset& data, double alpha,
                           const JaakkolaOptions& opts) {
    require_binary(data);
    prior.validate();
    if (prior.mean.size() != data.dim()) throw ConfigError("prior dimension does not match data");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be finite and >= 0");
    if (opts.em_iters < 1) throw ConfigError("Jaakkola EM needs em_iters >= 1");

    const Index n = data.size();
    JaakkolaState s;
    s.v = VectorXd::Ones(n);
    if (opts.random_init) {
        Rng rng = make_rng(opts.init_seed, 0);
        std::uniform_real_distribution<double> u(0.5, 1.5);
        for (Index i = 0; i < n; ++i) s.v(i) = u(rng);
    }
    if (alpha == 0.0) {
        s.mean = prior.mean;
        s.cov = prior.cov;
        return s;
    }

    const MatrixXd prior_precision = spd_inverse(prior.cov);
    const double ap = alpha / static_cast<double>(n);
    const VectorXd shift =
        prior_precision * prior.mean + ap * (data.Z.transpose() * (data.Y.array() - 0.5).matrix());
    for (int it = 0; it < opts.em_iters; ++it) {
        if (it > 0) s.v = jaakkola_points(s.mean, s.cov, data);
        VectorXd w(n);
        for (Index i = 0; i < n; ++i) w(i) = 2.0 * ap * lambda_of_v(s.v(i));
        const MatrixXd precision = prior_precision + data.Z.transpose() * w.asDiagonal() * data.Z;
        const SpdFactor f(symmetrize(precision));
        s.cov = symmetrize(f.inverse());
        s.mean = f.solve(shift);
    }
    return s;
}

BbBState BbBState::standard(Index d) {
    return {VectorXd::Zero(d), VectorXd::Constant(d, inverse_softplus(1.0))};
}

VectorXd BbBState::sigma() const { return rho.unaryExpr([](double r) { return softplus(r); }); }

double bbb_negative_elbo(const VectorXd& theta, const BbBState& state, const Dataset& data,
                         double alpha) {
    const VectorXd sigma = state.sigma();
    const VectorXd scaled = (theta - state.mean).cwiseQuotient(sigma);
    const double log_q = -sigma.array().log().sum() - 0.5 * scaled.squaredNorm();
    const double log_prior = -0.5 * theta.squaredNorm();
    return log_q - log_prior + alpha * mean_logistic_loss(theta, data);
}

BbBPartials bbb_partials(const VectorXd& theta, const BbBState& state, const Dataset& data,
                         double alpha) {
    const VectorXd sigma = state.sigma();
    const ArrayXd diff = (theta - state.mean).array();
    const ArrayXd s2 = sigma.array().square();
    const ArrayXd dsigma = state.rho.unaryExpr([](double r) { return sigmoid(r); }).array();
    BbBPartials g;
    g.d_mean = (diff / s2).matrix();
    g.d_theta = -g.d_mean + theta + alpha * logistic_risk_gradient(theta, data);
    g.d_rho = ((-1.0 / sigma.array() + diff.square() / (s2 * sigma.array())) * dsigma).matrix();
    return g;
}

BbBState bbb_fit(const Dataset& data, double alpha, const BbBOptions& opts, std::uint64_t seed) {
    require_binary(data);
    if (opts.iters < 1) throw ConfigError("Bayes-by-Backprop needs iters >= 1");
    if (!(opts.eta0 > 0.0)) throw ConfigError("Bayes-by-Backprop needs eta0 > 0");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be finite and >= 0");
    BbBState s = BbBState::standard(data.dim());
    Rng rng = make_rng(seed, 0);
    for (int t = 1; t <= opts.iters; ++t) {
        const VectorXd eps = standard_normal_vector(data.dim(), rng);
        const VectorXd theta = s.mean + s.sigma().cwiseProduct(eps);
        const BbBPartials g = bbb_partials(theta, s, data, alpha);
        const VectorXd dsigma = s.rho.unaryExpr([](double r) { return sigmoid(r); });
        const VectorXd g_mean = g.d_theta + g.d_mean;
        const VectorXd g_rho = g.d_theta.cwiseProduct(eps).cwiseProduct(dsigma) + g.d_rho;
        const double eta = opts.eta0 / std::sqrt(static_cast<double>(t));
        s.mean -= eta * g_mean;
        s.rho -= eta * g_rho;
        if (!s.mean.allFinite() || !s.rho.allFinite()) {
            std::ostringstream os;
            os << "Bayes-by-Backprop produced a non-finite parameter at iteration " << t;
            throw NumericalError(os.str());
        }
    }
    return s;
}

PosteriorDraw bbb_sampler(const BbBState& state) {
    return [mean = state.mean, sigma = state.sigma()](Rng& rng) {
        ParamDraw p;
        p.theta = mean + sigma.cwiseProduct(standard_normal_vector(mean.size(), rng));
        return p;
    };
}

double mc_risk(const PosteriorDraw& sampler, const Dataset& data, Index mc, std::uint64_t seed) {
    if (mc < 1) throw ConfigError("mc_risk needs mc >= 1");
    return mc_expectation(sampler, logistic_draw_risk(data), mc, seed).value;
}

}  // namespace tempcal
