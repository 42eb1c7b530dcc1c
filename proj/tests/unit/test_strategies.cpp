#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "tempcal/strategies.hpp"
#include "toys.hpp"

using namespace tempcal;

namespace {

KnownVarTempered known(Index d, double sigma2 = 1.0) {
    return KnownVarTempered(KnownVarModel(sigma2, GaussianPrior::isotropic(d)));
}

std::vector<Index> identity_rows(Index n, Rng&) {
    std::vector<Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Index{0});
    return rows;
}

}  // namespace

TEST_CASE("bayes returns n, clipped to the bounds") {
    const Dataset data = toys::regression(40, 3, 1);
    StrategyConfig cfg;
    CHECK(bayes_strategy(data, cfg) == 40.0);
    cfg.bounds.hi = 0.5;
    CHECK(bayes_strategy(data, cfg) == 20.0);
    CHECK(bayes_strategy(data, cfg) == bayes_strategy(data, cfg));
}

TEST_CASE("naive returns the upper bound on linreg_known") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Dataset data = toys::regression(25, 4, 10 + s, 2.0);
        const auto m = known(4, 2.0);
        StrategyConfig cfg;
        CHECK(naive_strategy(data, m, cfg, s) == 75.0);
        cfg.bounds.hi = 1.7;
        CHECK(naive_strategy(data, m, cfg, s) == cfg.bounds.upper(25));
    }
}

TEST_CASE("naive on a flat objective returns the smallest alpha") {
    const Dataset data = toys::regression(15, 2, 3);
    GaussianPrior prior{VectorXd::Zero(2), MatrixXd::Identity(2, 2) * 1e-300};
    const KnownVarTempered m(KnownVarModel(1.0, prior));
    StrategyConfig cfg;
    cfg.bounds = {0.2, 3.0};
    CHECK(naive_strategy(data, m, cfg, 0) == cfg.bounds.lower(15));
}

TEST_CASE("naive Monte-Carlo SGD only moves alpha upward") {
    const Dataset data = toys::regression(20, 2, 4);
    const auto m = known(2);
    StrategyConfig cfg;
    cfg.mode = BackboneMode::mc_sgd;
    cfg.mc = 500;
    // Every step follows minus a sample variance, so alpha never falls below its start.
    const double a = naive_strategy(data, m, cfg, 5);
    CHECK(a > 20.0);
    CHECK(a <= 60.0);
}

TEST_CASE("sample split ignores the order of the second batch") {
    const Dataset data = toys::regression(21, 3, 5, 1.5);
    const auto m = known(3, 1.5);
    const StrategyConfig cfg;
    CHECK(first_batch_size(21) == 11);
    CHECK(first_batch_size(20) == 10);
    std::vector<Index> rows(21);
    std::iota(rows.begin(), rows.end(), Index{0});
    std::reverse(rows.begin() + 11, rows.end());
    const Dataset permuted = data.select(rows);
    CHECK(sample_split_strategy(data, m, cfg, 0) ==
          doctest::Approx(sample_split_strategy(permuted, m, cfg, 0)).epsilon(1e-9));
}

TEST_CASE("bootstrap with an identity resample follows the naive gradient path") {
    const Dataset data = toys::regression(18, 2, 6);
    const auto m = known(2);
    StrategyConfig cfg;
    cfg.boot = 1;
    cfg.resampler = identity_rows;
    const AlphaGradient naive = [&](double a, int) { return gen_error_gradient(m.model(), data, data, a); };
    CHECK(bootstrap_strategy(data, m, cfg, 3) ==
          doctest::Approx(sgd_over_alpha(naive, 18.0, cfg.bounds, 18, cfg.sgd)).epsilon(1e-12));
}

TEST_CASE("bootstrap is deterministic under a seed") {
    const Dataset data = toys::regression(30, 3, 7, 2.0);
    const auto m = known(3, 2.0);
    StrategyConfig cfg;
    cfg.boot = 100;
    cfg.sgd.max_iters = 30;
    CHECK(bootstrap_strategy(data, m, cfg, 9) == bootstrap_strategy(data, m, cfg, 9));

    const NigTempered nig(NigModel(NigPrior::standard(3)));
    cfg.boot = 10;
    cfg.boot_mc = 50;
    cfg.sgd.max_iters = 5;
    CHECK(resolve_backbone(StrategyKind::bootstrap, nig, BackboneMode::automatic) == BackboneMode::mc_sgd);
    CHECK(bootstrap_strategy(data, nig, cfg, 9) == bootstrap_strategy(data, nig, cfg, 9));
}

TEST_CASE("safebayes on n = 2 matches a brute-force grid") {
    const Dataset two(MatrixXd::Ones(2, 1), (VectorXd(2) << 0.4, 1.9).finished());
    const auto m = known(1);
    const StrategyConfig cfg;
    const double alpha = safebayes_strategy(two, m, cfg, 0);
    double best = 0.0, best_val = 1e300;
    for (int i = 0; i <= 60000; ++i) {
        const double a = 6.0 * i / 60000.0;
        const double v = m.peprl(two, a);
        if (v < best_val) {
            best_val = v;
            best = a;
        }
    }
    CHECK(alpha == doctest::Approx(best).epsilon(1e-3));
    CHECK(m.peprl(two, alpha) <= best_val + 1e-12);
}

TEST_CASE("backbone resolution") {
    const auto lin = known(2);
    const NigTempered nig(NigModel(NigPrior::standard(2)));
    const JaakkolaTempered jk(GaussianPrior::isotropic(2));
    CHECK(resolve_backbone(StrategyKind::naive, lin, BackboneMode::automatic) == BackboneMode::closed_form);
    CHECK(resolve_backbone(StrategyKind::safebayes, nig, BackboneMode::automatic) == BackboneMode::closed_form);
    CHECK(resolve_backbone(StrategyKind::bootstrap, lin, BackboneMode::automatic) == BackboneMode::closed_form);
    CHECK(resolve_backbone(StrategyKind::sample_split, jk, BackboneMode::automatic) == BackboneMode::mc_sgd);
    CHECK_THROWS_AS(resolve_backbone(StrategyKind::naive, jk, BackboneMode::closed_form), ConfigError);
    CHECK(resolve_backbone(StrategyKind::naive, lin, BackboneMode::mc_sgd) == BackboneMode::mc_sgd);
    CHECK_THROWS_AS(parse_backbone("exact"), ConfigError);
}

TEST_CASE("strategies reject mismatched data") {
    const Dataset data = toys::regression(10, 3, 8);
    const auto m = known(2);
    const StrategyConfig cfg;
    CHECK_THROWS_AS(naive_strategy(data, m, cfg, 0), ConfigError);
    const JaakkolaTempered jk(GaussianPrior::isotropic(3));
    CHECK_THROWS_AS(run_strategy(StrategyKind::bayes, data, jk, cfg, 0), ConfigError);
    StrategyConfig bad;
    bad.mc = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("logistic strategies run on the Monte-Carlo backbone") {
    const Dataset data = toys::binary(30, 3, 9);
    const JaakkolaTempered jk(GaussianPrior::isotropic(3));
    StrategyConfig cfg;
    cfg.mc = 200;
    cfg.sgd.max_iters = 10;
    for (StrategyKind k : {StrategyKind::naive, StrategyKind::sample_split, StrategyKind::safebayes}) {
        const double a = run_strategy(k, data, jk, cfg, 1);
        CHECK(a >= 0.0);
        CHECK(a <= 90.0);
        CHECK(a == run_strategy(k, data, jk, cfg, 1));
    }
}

TEST_CASE("exact risk functions agree with the Monte-Carlo default") {
    const Dataset fit_data = toys::regression(20, 2, 11), eval = toys::regression(30, 2, 12);
    const auto lin = known(2);
    const auto exact = lin.risk_function(fit_data, eval, {});
    const auto mc = lin.TemperedModel::risk_function(fit_data, eval, {20000, 3});
    for (double a : {0.0, 10.0, 40.0}) CHECK(mc(a) == doctest::Approx(exact(a)).epsilon(0.02));

    const NigTempered nig(NigModel(NigPrior::standard(2)));
    const auto nexact = nig.risk_function(fit_data, eval, {});
    const auto nmc = nig.TemperedModel::risk_function(fit_data, eval, {20000, 3});
    for (double a : {0.0, 10.0, 40.0}) CHECK(nmc(a) == doctest::Approx(nexact(a)).epsilon(0.02));
}

TEST_CASE("strategy objective curves") {
    const Dataset data = toys::regression(12, 2, 13);
    const auto m = known(2);
    const StrategyConfig cfg;
    CHECK(std::isnan(strategy_objective(StrategyKind::bayes, data, m, cfg, 0)(5.0)));
    CHECK(strategy_objective(StrategyKind::safebayes, data, m, cfg, 0)(5.0) ==
          doctest::Approx(m.peprl(data, 5.0) / 11.0));
    CHECK(strategy_objective(StrategyKind::naive, data, m, cfg, 0)(5.0) ==
          doctest::Approx(gen_error_estimate(m.model(), fit(m.model(), data, 5.0), data)));
}

TEST_CASE("logistic mle minimizes the empirical risk") {
    const Dataset data = toys::binary(200, 3, 14);
    const VectorXd theta = logistic_mle(data);
    CHECK(logistic_risk_gradient(theta, data).norm() < 1e-8);
}
