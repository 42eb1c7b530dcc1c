#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/QR>

#include "tempcal/linreg_known.hpp"
#include "toys.hpp"

using namespace tempcal;

namespace {

VectorXd least_squares(const Dataset& d) { return d.Z.colPivHouseholderQr().solve(d.Y); }

Dataset unit_point(double y) { return Dataset(MatrixXd::Ones(1, 1), VectorXd::Constant(1, y)); }

}  // namespace

TEST_CASE("fit hand example and alpha limits") {
    const KnownVarModel m(1.0, GaussianPrior::isotropic(1));
    const auto p = fit(m, unit_point(2.0), 1.0);
    CHECK(p.cov(0, 0) == doctest::Approx(0.5));
    CHECK(p.mean(0) == doctest::Approx(1.0));

    const Dataset data = toys::regression(30, 4, 1);
    GaussianPrior prior{VectorXd::LinSpaced(4, -1, 1), MatrixXd::Identity(4, 4) * 2.0};
    const KnownVarModel m4(1.5, prior);
    const auto p0 = fit(m4, data, 0.0);
    CHECK(p0.mean == prior.mean);
    CHECK(p0.cov == prior.cov);

    const auto big = fit(m4, data, 1e8);
    CHECK((big.mean - least_squares(data)).cwiseAbs().maxCoeff() < 1e-4);
    CHECK_THROWS_AS(fit(m4, data, -1.0), ConfigError);
}

TEST_CASE("gen_error_estimate hand value and zero-variance reduction") {
    const KnownVarModel m(1.0, GaussianPrior::isotropic(1));
    GaussianPosterior post{VectorXd::Zero(1), MatrixXd::Ones(1, 1)};
    CHECK(gen_error_estimate(m, post, unit_point(0.0)) == doctest::Approx(0.5));

    const Dataset data = toys::regression(20, 3, 2);
    const KnownVarModel m3(2.0, GaussianPrior::isotropic(3));
    GaussianPosterior delta{VectorXd::LinSpaced(3, 0.2, 0.8), MatrixXd::Zero(3, 3)};
    CHECK(gen_error_estimate(m3, delta, data) ==
          doctest::Approx(empirical_risk(squared_error_loss(2.0), delta.mean, data)).epsilon(1e-12));
}

TEST_CASE("gen_error_estimate agrees with a Monte-Carlo oracle") {
    const Dataset data = toys::regression(25, 3, 3);
    const KnownVarModel m(1.0, GaussianPrior::isotropic(3));
    const auto post = fit(m, data, 10.0);
    const auto e = mc_expectation(gaussian_sampler(post), squared_error_draw_risk(1.0, RegressionStats::of(data)),
                                  100000, 4);
    CHECK(std::abs(e.value - gen_error_estimate(m, post, data)) <= 3.0 * e.std_error);
}

TEST_CASE("gen_error_gradient matches central finite differences on 10 toys") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Index n = 5 + static_cast<Index>(s), d = 1 + static_cast<Index>(s % 3);
        const Dataset fit_data = toys::regression(n, d, 100 + s);
        const Dataset eval_data = toys::regression(n + 3, d, 200 + s);
        const KnownVarModel m(0.5 + 0.1 * static_cast<double>(s), GaussianPrior::isotropic(d));
        const double alpha = 0.7 * static_cast<double>(n), h = 1e-4 * static_cast<double>(n);
        auto R = [&](double a) { return gen_error_estimate(m, fit(m, fit_data, a), eval_data); };
        const double fd = (R(alpha + h) - R(alpha - h)) / (2.0 * h);
        CHECK(toys::rel_diff(gen_error_gradient(m, fit_data, eval_data, alpha), fd) < 1e-6);
    }
}

TEST_CASE("naive gradient is never positive") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Dataset data = toys::regression(15, 3, 300 + s);
        const KnownVarModel m(1.0, GaussianPrior::isotropic(3));
        for (double a : {0.0, 1.0, 15.0, 45.0}) CHECK(gen_error_gradient(m, data, data, a) <= 0.0);
    }
}

TEST_CASE("gradient at alpha = 0 is minus the prior variance of the risk") {
    const Dataset data = toys::regression(10, 2, 9);
    const KnownVarModel m(1.0, GaussianPrior{least_squares(data), MatrixXd::Identity(2, 2)});
    const auto prior_post = fit(m, data, 0.0);
    const auto risk = squared_error_draw_risk(1.0, RegressionStats::of(data));
    const auto g = covariance_gradient_mc_se(gaussian_sampler(prior_post), risk, risk, 200000, 10);
    CHECK(std::abs(gen_error_gradient(m, data, data, 0.0) - g.value) <= 3.0 * g.std_error);
}

TEST_CASE("bootstrap with a forced identity resample equals the naive gradient") {
    const Dataset data = toys::regression(12, 2, 11);
    const KnownVarModel m(1.0, GaussianPrior::isotropic(2));
    BootstrapOptions o;
    o.resampler = [](Index n, Rng&) {
        std::vector<Index> rows(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
        return rows;
    };
    const double naive = gen_error_gradient(m, data, data, 12.0);
    CHECK(bootstrap_gradient_psi(m, data, 12.0, 1, 0, o) == doctest::Approx(naive).epsilon(1e-12));
    o.evaluation = PsiEvaluation::resample;
    CHECK(bootstrap_gradient_psi(m, data, 12.0, 1, 0, o) == doctest::Approx(naive).epsilon(1e-12));
}

TEST_CASE("bootstrap is reproducible and matches the serial reference bit for bit") {
    const Dataset data = toys::regression(30, 4, 12);
    const KnownVarModel m(1.0, GaussianPrior::isotropic(4));
    const double a = bootstrap_gradient_psi(m, data, 30.0, 1000, 77);
    CHECK(a == bootstrap_gradient_psi(m, data, 30.0, 1000, 77));
    CHECK(a == reference::bootstrap_gradient_psi(m, data, 30.0, 1000, 77));
    CHECK(a != bootstrap_gradient_psi(m, data, 30.0, 1000, 78));
}

TEST_CASE("bootstrap gradient sign agrees with the naive sign on well-specified data") {
    int agree = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Dataset data = toys::regression(100, 5, 400 + s);
        const KnownVarModel m(1.0, GaussianPrior::isotropic(5));
        const double naive = gen_error_gradient(m, data, data, 100.0);
        const double boot = bootstrap_gradient_psi(m, data, 100.0, 200, s);
        agree += (naive < 0) == (boot < 0);
    }
    CHECK(agree >= 9);
}

TEST_CASE("safebayes hand example, prior reduction and serial agreement") {
    const KnownVarModel m(1.0, GaussianPrior::isotropic(1));
    const Dataset two(MatrixXd::Ones(2, 1), VectorXd::Ones(2));
    // Prefix posterior on one unit row at alpha = 1: S = 1/2, mu = 1/2.
    CHECK(safebayes_peprl(m, two, 1.0) == doctest::Approx((0.25 + 0.5) / 2.0));

    const Dataset data = toys::regression(20, 3, 13);
    const KnownVarModel m3(2.0, GaussianPrior::isotropic(3));
    double prior_sum = 0.0;
    for (Index t = 1; t < data.size(); ++t) {
        const VectorXd z = data.Z.row(t).transpose();
        prior_sum += (data.Y(t) * data.Y(t) + z.squaredNorm()) / (2.0 * 2.0);
    }
    CHECK(safebayes_peprl(m3, data, 0.0) == doctest::Approx(prior_sum).epsilon(1e-12));
    CHECK(safebayes_peprl(m3, data, 17.0) == reference::safebayes_peprl(m3, data, 17.0));
    CHECK_THROWS_AS(safebayes_peprl(m3, data.head(1), 1.0), ConfigError);
}

TEST_CASE("safebayes agrees with a Monte-Carlo oracle over prefix posteriors") {
    const Dataset data = toys::regression(8, 2, 14);
    const KnownVarModel m(1.0, GaussianPrior::isotropic(2));
    const double alpha = 6.0;
    double total = 0.0, var = 0.0;
    for (Index t = 1; t < data.size(); ++t) {
        const auto post = fit(m, data.head(t), alpha);
        const auto e = mc_expectation(gaussian_sampler(post),
                                      squared_error_draw_risk(1.0, RegressionStats::of(data.select(std::vector<Index>{t}))),
                                      100000, static_cast<std::uint64_t>(t));
        total += e.value;
        var += e.std_error * e.std_error;
    }
    CHECK(std::abs(safebayes_peprl(m, data, alpha) - total) <= 3.0 * std::sqrt(var));
}

TEST_CASE("posterior predictive") {
    const KnownVarModel m(1.0, GaussianPrior::isotropic(1));
    GaussianPosterior post{VectorXd::Ones(1), MatrixXd::Constant(1, 1, 0.5)};
    const auto p = posterior_predictive(m, post, VectorXd::Constant(1, 2.0));
    CHECK(p.mean == doctest::Approx(2.0));
    CHECK(p.variance == doctest::Approx(3.0));
    const auto z0 = posterior_predictive(m, post, VectorXd::Zero(1));
    CHECK(z0.mean == 0.0);
    CHECK(z0.variance == 1.0);
    GaussianPosterior delta{VectorXd::Ones(1), MatrixXd::Zero(1, 1)};
    CHECK(posterior_predictive(m, delta, VectorXd::Constant(1, 3.0)).variance == 1.0);
}

TEST_CASE("gaussian mean specialization") {
    const KnownVarModel m(1.0, GaussianPrior::isotropic(1));
    const Dataset one = gaussian_mean_specialize(VectorXd::Constant(1, 5.0));
    CHECK(fit(m, one, 1.0).cov(0, 0) == doctest::Approx(0.5));
    const Dataset x = gaussian_mean_specialize((VectorXd(2) << 1.0, 3.0).finished());
    const auto p = fit(m, x, 2.0);
    CHECK(p.cov(0, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(p.mean(0) == doctest::Approx(4.0 / 3.0));
    CHECK(fit(m, x, 0.0).mean(0) == 0.0);
}

TEST_CASE("vandermonde expansion and polynomial prior") {
    const MatrixXd row = vandermonde_expand(VectorXd::Constant(1, 2.0), 3);
    CHECK(row(0, 0) == 1.0);
    CHECK(row(0, 1) == 2.0);
    CHECK(row(0, 2) == 4.0);
    const MatrixXd zero = vandermonde_expand(VectorXd::Zero(1), 4);
    CHECK(zero(0, 0) == 1.0);
    CHECK(zero.rightCols(3).isZero());
    CHECK(vandermonde_expand(VectorXd::LinSpaced(5, -1, 1), 1).isOnes());
    const auto prior = polynomial_prior(4);
    CHECK(prior.cov(3, 3) == 0.125);
    CHECK(prior.cov(0, 0) == 1.0);
}

TEST_CASE("gaussian sampler with zero covariance returns the mean") {
    GaussianPosterior delta{VectorXd::LinSpaced(3, 1, 3), MatrixXd::Zero(3, 3)};
    Rng rng(1);
    CHECK(gaussian_sampler(delta)(rng).theta == delta.mean);
}
