#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "tempcal/linalg.hpp"
#include "tempcal/logistic.hpp"
#include "toys.hpp"

using namespace tempcal;

TEST_CASE("logistic loss values and stability") {
    const VectorXd z = VectorXd::Ones(2);
    CHECK(logistic_loss(VectorXd::Zero(2), z, 1.0) == doctest::Approx(std::numbers::ln2));
    CHECK(logistic_loss(VectorXd::Zero(2), z, 0.0) == doctest::Approx(std::numbers::ln2));
    CHECK(logistic_loss_u(-100.0, 1.0) == doctest::Approx(100.0));
    CHECK(logistic_loss_u(800.0, 1.0) < 1e-300);
    CHECK(std::isfinite(logistic_loss_u(-800.0, 1.0)));
    for (double u : {-5.0, -0.3, 0.0, 2.0, 7.5})
        for (double y : {0.0, 1.0}) {
            const double naive = -y * std::log(1.0 / (1.0 + std::exp(-u))) -
                                 (1.0 - y) * std::log(1.0 / (1.0 + std::exp(u)));
            CHECK(logistic_loss_u(u, y) == doctest::Approx(naive).epsilon(1e-12));
        }
}

TEST_CASE("softplus and its inverse") {
    for (double s : {1e-8, 0.01, 0.5, 1.0, 5.0, 19.9, 20.1, 50.0})
        CHECK(softplus(inverse_softplus(s)) == doctest::Approx(s).epsilon(1e-12));
    CHECK(softplus(1000.0) == 1000.0);
    CHECK(sigmoid(0.0) == 0.5);
}

TEST_CASE("lambda of v") {
    CHECK(lambda_of_v(0.0) == 0.125);
    CHECK(lambda_of_v(1e-6) == doctest::Approx(0.125).epsilon(1e-10));
    CHECK(lambda_of_v(1.0) == doctest::Approx((sigmoid(1.0) - 0.5) / 2.0).epsilon(1e-14));
    CHECK(lambda_of_v(1.0) == doctest::Approx(0.11560).epsilon(1e-4));
    // The small-v branch joins the exact formula continuously.
    CHECK(lambda_of_v(9.9e-5) == doctest::Approx(std::tanh(9.9e-5 / 2) / (4 * 9.9e-5)).epsilon(1e-12));
}

TEST_CASE("jaakkola prior recovery and fixed point") {
    const Dataset data = toys::binary(20, 2, 1);
    const GaussianPrior prior = GaussianPrior::isotropic(2, 2.0);
    const auto s0 = jaakkola_fit(prior, data, 0.0, {1});
    CHECK(s0.mean == prior.mean);
    CHECK(s0.cov == prior.cov);

    JaakkolaOptions o;
    o.em_iters = 20;
    const auto s = jaakkola_fit(prior, data, 20.0, o);
    CHECK((jaakkola_points(s.mean, s.cov, data) - s.v).cwiseAbs().maxCoeff() < 1e-6);
    CHECK_NOTHROW(SpdFactor(s.cov));
    CHECK(s.cov.isApprox(s.cov.transpose(), 0.0));

    // Five iterations on a larger problem stop well short of the fixed point.
    const Dataset wide = toys::binary(50, 30, 2);
    const auto w5 = jaakkola_fit(GaussianPrior::isotropic(30), wide, 50.0);
    CHECK((jaakkola_points(w5.mean, w5.cov, wide) - w5.v).cwiseAbs().maxCoeff() > 1e-3);
    o.em_iters = 200;
    const auto w = jaakkola_fit(GaussianPrior::isotropic(30), wide, 50.0, o);
    CHECK((jaakkola_points(w.mean, w.cov, wide) - w.v).cwiseAbs().maxCoeff() < 1e-6);
    o.em_iters = 20;

    o.random_init = true;
    o.init_seed = 3;
    const auto r = jaakkola_fit(prior, data, 20.0, o);
    CHECK((r.mean - s.mean).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("jaakkola on separable d=1 data sharpens as alpha grows") {
    MatrixXd Z(6, 1);
    Z << -3, -2, -1, 1, 2, 3;
    VectorXd Y(6);
    Y << 0, 0, 0, 1, 1, 1;
    const Dataset data(Z, Y, DataKind::binary);
    JaakkolaOptions o;
    o.em_iters = 50;
    double last_mean = 0.0, last_var = 1e9;
    for (double a : {1.0, 10.0, 100.0, 1000.0}) {
        const auto s = jaakkola_fit(GaussianPrior::isotropic(1), data, a, o);
        CHECK(std::abs(s.mean(0)) > last_mean);
        CHECK(s.cov(0, 0) < last_var);
        last_mean = std::abs(s.mean(0));
        last_var = s.cov(0, 0);
    }
}

TEST_CASE("bbb objective at the prior is zero") {
    const Dataset data = toys::binary(10, 3, 2);
    CHECK(bbb_negative_elbo(VectorXd::Zero(3), BbBState::standard(3), data, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("bbb partials match central finite differences") {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const Index d = 3 + static_cast<Index>(s);
        const Dataset data = toys::binary(20, d, 10 + s);
        Rng rng(s);
        const VectorXd theta = standard_normal_vector(d, rng);
        BbBState st{standard_normal_vector(d, rng) * 0.5, standard_normal_vector(d, rng) * 0.3};
        const double alpha = 20.0;
        const auto g = bbb_partials(theta, st, data, alpha);
        const double h = 1e-6;
        for (Index j = 0; j < d; ++j) {
            VectorXd tp = theta, tm = theta;
            tp(j) += h;
            tm(j) -= h;
            const double ft = (bbb_negative_elbo(tp, st, data, alpha) - bbb_negative_elbo(tm, st, data, alpha)) / (2 * h);
            CHECK(toys::rel_diff(g.d_theta(j), ft) < 1e-5);

            BbBState sp = st, sm = st;
            sp.mean(j) += h;
            sm.mean(j) -= h;
            const double fm = (bbb_negative_elbo(theta, sp, data, alpha) - bbb_negative_elbo(theta, sm, data, alpha)) / (2 * h);
            CHECK(toys::rel_diff(g.d_mean(j), fm) < 1e-5);

            sp = st;
            sm = st;
            sp.rho(j) += h;
            sm.rho(j) -= h;
            const double fr = (bbb_negative_elbo(theta, sp, data, alpha) - bbb_negative_elbo(theta, sm, data, alpha)) / (2 * h);
            CHECK(toys::rel_diff(g.d_rho(j), fr) < 1e-5);
        }
    }
}

TEST_CASE("bbb collapses to the prior at alpha = 0 and is reproducible") {
    const Dataset data = toys::binary(50, 5, 3);
    const auto s = bbb_fit(data, 0.0, {}, 11);
    CHECK(s.mean.cwiseAbs().maxCoeff() < 0.1);
    const auto t = bbb_fit(data, 50.0, {}, 11);
    CHECK(t.mean == bbb_fit(data, 50.0, {}, 11).mean);
    CHECK(t.rho == bbb_fit(data, 50.0, {}, 11).rho);
    CHECK((t.sigma().array() > 0.0).all());
}

TEST_CASE("bbb fit at alpha = n beats the prior on held-out risk") {
    const VectorXd theta = draw_theta_star(5, 4) * 2.0;
    const Dataset train = gen_logistic(50, 5, theta, 4).data;
    const Dataset test = gen_logistic(5000, 5, theta, 5).data;
    const auto fitted = bbb_fit(train, 50.0, {}, 6);
    CHECK(mc_risk(bbb_sampler(fitted), test, 2000, 7) < mc_risk(bbb_sampler(BbBState::standard(5)), test, 2000, 7));
}

TEST_CASE("mc_risk reductions") {
    const Dataset data = toys::binary(30, 3, 5);
    const VectorXd theta0 = VectorXd::LinSpaced(3, -0.5, 0.5);
    PosteriorDraw delta = [&](Rng&) { return ParamDraw{theta0, 1.0}; };
    CHECK(mc_risk(delta, data, 50, 1) == doctest::Approx(empirical_risk(logistic_point_loss(), theta0, data)).epsilon(1e-14));

    const Dataset origin(MatrixXd::Zero(1, 3), VectorXd::Ones(1), DataKind::binary);
    CHECK(mc_risk(bbb_sampler(BbBState::standard(3)), origin, 100, 2) == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
}

TEST_CASE("logistic gradient matches finite differences") {
    const Dataset data = toys::binary(25, 4, 6);
    const VectorXd theta = VectorXd::LinSpaced(4, -0.3, 0.6);
    const VectorXd g = logistic_risk_gradient(theta, data);
    auto r = logistic_draw_risk(data);
    for (Index j = 0; j < 4; ++j) {
        VectorXd tp = theta, tm = theta;
        tp(j) += 1e-6;
        tm(j) -= 1e-6;
        CHECK(toys::rel_diff(g(j), (r({tp, 1.0}) - r({tm, 1.0})) / 2e-6) < 1e-6);
    }
}
