#include "tempcal/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "tempcal/parallel.hpp"

namespace tempcal {

double empirical_risk(const PointLoss& loss, const VectorXd& theta, const Dataset& data) {
    const Index n = data.size();
    if (n < 1) throw ConfigError("empirical risk of an empty dataset");
    double sum = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double l = loss(theta, data, i);
        if (!std::isfinite(l)) {
            std::ostringstream os;
            os << "non-finite loss at observation index " << i;
            throw NumericalError(os.str());
        }
        sum += l;
    }
    return sum / static_cast<double>(n);
}

PointLoss squared_error_loss(double sigma2) {
    if (!(sigma2 > 0.0)) throw ConfigError("squared-error loss needs sigma2 > 0");
    return [sigma2](const VectorXd& theta, const Dataset& data, Index i) {
        const double r = data.Y(i) - data.Z.row(i).dot(theta);
        return r * r / (2.0 * sigma2);
    };
}

RegressionStats RegressionStats::of(const Dataset& data) {
    RegressionStats s;
    s.ZtZ = MatrixXd::Zero(data.dim(), data.dim());
    s.ZtZ.selfadjointView<Eigen::Lower>().rankUpdate(data.Z.transpose());
    s.ZtZ = s.ZtZ.selfadjointView<Eigen::Lower>();
    s.ZtY = data.Z.transpose() * data.Y;
    s.YtY = data.Y.squaredNorm();
    s.n = data.size();
    return s;
}

double RegressionStats::squared_residual(const VectorXd& theta) const {
    return std::max(0.0, YtY - 2.0 * ZtY.dot(theta) + theta.dot(ZtZ * theta));
}

namespace {

Index block_count(Index mc) { return (mc + kMcBlock - 1) / kMcBlock; }

void check_finite(double v, Index draw, const char* what) {
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "non-finite " << what << " at Monte-Carlo draw " << draw;
        throw NumericalError(os.str());
    }
}

// Fills draws [b*kMcBlock, min(mc, (b+1)*kMcBlock)) of block b.
void fill_pair_block(const PosteriorDraw& sampler, const DrawRisk& r_train, const DrawRisk& r_test,
                     Index mc, std::uint64_t seed, Index b, std::vector<double>& a,
                     std::vector<double>& c) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(b));
    const Index end = std::min(mc, (b + 1) * kMcBlock);
    for (Index i = b * kMcBlock; i < end; ++i) {
        const ParamDraw p = sampler(rng);
        a[static_cast<std::size_t>(i)] = r_train(p);
        c[static_cast<std::size_t>(i)] = r_test(p);
        check_finite(a[static_cast<std::size_t>(i)], i, "training risk");
        check_finite(c[static_cast<std::size_t>(i)], i, "test risk");
    }
}

void fill_single_block(const PosteriorDraw& sampler, const DrawRisk& risk, Index mc,
                       std::uint64_t seed, Index b, std::vector<double>& a) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(b));
    const Index end = std::min(mc, (b + 1) * kMcBlock);
    for (Index i = b * kMcBlock; i < end; ++i) {
        a[static_cast<std::size_t>(i)] = risk(sampler(rng));
        check_finite(a[static_cast<std::size_t>(i)], i, "risk");
    }
}

// Centred products of values shifted by the first draw, so a constant risk gives exactly 0.
McEstimate reduce_covariance(const std::vector<double>& train, const std::vector<double>& test) {
    const double m = static_cast<double>(train.size());
    const double a0 = train.front(), c0 = test.front();
    double sum_train = 0.0, sum_test = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) {
        sum_train += train[i] - a0;
        sum_test += test[i] - c0;
    }
    const double mean_train = sum_train / m, mean_test = sum_test / m;
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const double u = ((train[i] - a0) - mean_train) * ((test[i] - c0) - mean_test);
        s1 += u;
        s2 += u * u;
    }
    const double mean_u = s1 / m;
    McEstimate out;
    out.value = -mean_u;
    const double var_u = std::max(0.0, (s2 - m * mean_u * mean_u) / (m - 1.0));
    out.std_error = std::sqrt(var_u / m);
    return out;
}

McEstimate reduce_mean(const std::vector<double>& a) {
    const double m = static_cast<double>(a.size());
    double sum = 0.0;
    for (double v : a) sum += v;
    const double mean = sum / m;
    double ss = 0.0;
    for (double v : a) ss += (v - mean) * (v - mean);
    McEstimate out;
    out.value = mean;
    out.std_error = a.size() > 1 ? std::sqrt(ss / (m - 1.0) / m) : 0.0;
    return out;
}

}  // namespace

McEstimate covariance_gradient_mc_se(const PosteriorDraw& sampler, const DrawRisk& r_train,
                                     const DrawRisk& r_test, Index mc, std::uint64_t seed) {
    if (mc < 2) throw ConfigError("covariance gradient needs mc >= 2");
    std::vector<double> train(static_cast<std::size_t>(mc)), test(static_cast<std::size_t>(mc));
    const Index blocks = block_count(mc);
    ParallelErrors errors;
#pragma omp parallel for schedule(dynamic)
    for (Index b = 0; b < blocks; ++b) {
        errors.run([&] { fill_pair_block(sampler, r_train, r_test, mc, seed, b, train, test); });
    }
    errors.rethrow();
    return reduce_covariance(train, test);
}

McEstimate mc_expectation(const PosteriorDraw& sampler, const DrawRisk& risk, Index mc,
                          std::uint64_t seed) {
    if (mc < 1) throw ConfigError("Monte-Carlo expectation needs mc >= 1");
    std::vector<double> values(static_cast<std::size_t>(mc));
    const Index blocks = block_count(mc);
    ParallelErrors errors;
#pragma omp parallel for schedule(dynamic)
    for (Index b = 0; b < blocks; ++b) {
        errors.run([&] { fill_single_block(sampler, risk, mc, seed, b, values); });
    }
    errors.rethrow();
    return reduce_mean(values);
}

namespace reference {

McEstimate covariance_gradient_mc_se(const PosteriorDraw& sampler, const DrawRisk& r_train,
                                     const DrawRisk& r_test, Index mc, std::uint64_t seed) {
    if (mc < 2) throw ConfigError("covariance gradient needs mc >= 2");
    std::vector<double> train(static_cast<std::size_t>(mc)), test(static_cast<std::size_t>(mc));
    for (Index b = 0; b < block_count(mc); ++b)
        fill_pair_block(sampler, r_train, r_test, mc, seed, b, train, test);
    return reduce_covariance(train, test);
}

McEstimate mc_expectation(const PosteriorDraw& sampler, const DrawRisk& risk, Index mc,
                          std::uint64_t seed) {
    if (mc < 1) throw ConfigError("Monte-Carlo expectation needs mc >= 1");
    std::vector<double> values(static_cast<std::size_t>(mc));
    for (Index b = 0; b < block_count(mc); ++b) fill_single_block(sampler, risk, mc, seed, b, values);
    return reduce_mean(values);
}

}  // namespace reference

double sgd_over_alpha(const AlphaGradient& grad, double alpha_init, const AlphaBounds& bounds,
                      Index n, const SgdOptions& opts) {
    bounds.validate();
    if (n < 1) throw ConfigError("sgd_over_alpha needs n >= 1");
    const double lo = bounds.lower(n), hi = bounds.upper(n);
    if (!(alpha_init >= lo && alpha_init <= hi)) {
        std::ostringstream os;
        os << "initial alpha " << alpha_init << " lies outside [" << lo << ", " << hi << "]";
        throw ConfigError(os.str());
    }
    const double nd = static_cast<double>(n);
    const double eta0 = opts.eta0_scale * nd * nd;
    double alpha = alpha_init;
    for (int t = 1; t <= opts.max_iters; ++t) {
        const double g = grad(alpha, t);
        if (!std::isfinite(g)) {
            std::ostringstream os;
            os << "non-finite alpha gradient at SGD iteration " << t << " (alpha = " << alpha << ")";
            throw NumericalError(os.str());
        }
        const double next = std::clamp(alpha - eta0 / std::sqrt(static_cast<double>(t)) * g, lo, hi);
        const double step = std::abs(next - alpha);
        alpha = next;
        if (step / nd < opts.tol) break;
    }
    return std::clamp(alpha, lo, hi);
}

double minimize_bounded(const std::function<double(double)>& f, double lo, double hi, Index n,
                        const MinimizerOptions& opts) {
    if (!(hi >= lo)) throw ConfigError("minimize_bounded needs hi >= lo");
    if (opts.grid_points < 2) throw ConfigError("minimizer grid needs at least 2 points");
    auto eval = [&](double x) {
        const double v = f(x);
        if (std::isnan(v)) {
            std::ostringstream os;
            os << "objective is NaN at alpha = " << x;
            throw NumericalError(os.str());
        }
        return v;
    };
    if (hi == lo) return lo;

    const int g = opts.grid_points;
    std::vector<double> xs(static_cast<std::size_t>(g)), fs(static_cast<std::size_t>(g));
    for (int k = 0; k < g; ++k) {
        xs[static_cast<std::size_t>(k)] =
            (k == g - 1) ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(g - 1);
        fs[static_cast<std::size_t>(k)] = eval(xs[static_cast<std::size_t>(k)]);
    }
    const double fmin = *std::min_element(fs.begin(), fs.end());
    const auto tie = [&](double v) { return opts.rel_tie * std::max(1.0, std::abs(v)); };
    int best = 0;
    while (fs[static_cast<std::size_t>(best)] > fmin + tie(fmin)) ++best;

    double a = xs[static_cast<std::size_t>(std::max(best - 1, 0))];
    double b = xs[static_cast<std::size_t>(std::min(best + 1, g - 1))];
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = eval(c), fd = eval(d);
    const double width = opts.xtol * static_cast<double>(std::max<Index>(n, 1));
    while (b - a > width) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = eval(d);
        }
    }
    const double cand = fc <= fd ? c : d;
    const double fcand = std::min(fc, fd);
    const double fbest = fs[static_cast<std::size_t>(best)];
    if (fcand < fbest - tie(fbest)) return cand;
    return xs[static_cast<std::size_t>(best)];
}

}  // namespace tempcal
