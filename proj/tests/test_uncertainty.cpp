#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rlrestore/uncertainty.hpp"
#include "test_util.hpp"

#include <cmath>
#include <numeric>

using namespace rlr;
using gmm::Gmm;
using gmm::Mat;
using gmm::Vec;
using unc::FleetLayout;
using unc::ForecastMethod;
using unc::UncertaintyState;

namespace {

// AR(1)-style covariance over the flat (period-major) index.
Mat ar1_cov(int dim, double sigma2, double rho) {
    Mat cov(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) cov(i, j) = sigma2 * std::pow(rho, std::abs(i - j));
    }
    return cov;
}

Gmm gaussian_prior(const Vec& mean, const Mat& cov) {
    gmm::GaussianComponent c;
    c.weight = 1.0;
    c.mean = mean;
    c.covariance = cov;
    return Gmm({c});
}

// Two-component prior whose covariance is shared and block-diagonal across
// periods; means differ only on the block of `special_period`.
Gmm block_diag_prior(const FleetLayout& layout, int special_period) {
    const int dim = layout.flat_dim();
    const int a = layout.assets();
    Mat cov = Mat::Zero(dim, dim);
    for (int t = 1; t <= layout.periods; ++t) {
        for (int i = 0; i < a; ++i) {
            for (int j = 0; j < a; ++j) {
                cov((t - 1) * a + i, (t - 1) * a + j) = (i == j) ? 0.3 : 0.05;
            }
        }
    }
    std::vector<gmm::GaussianComponent> comps(2);
    for (int m = 0; m < 2; ++m) {
        comps[m].weight = m == 0 ? 0.4 : 0.6;
        comps[m].mean = Vec::Constant(dim, 1.0);
        for (int i = 0; i < a; ++i) {
            comps[m].mean[(special_period - 1) * a + i] = m == 0 ? 0.2 : 1.8;
        }
        comps[m].covariance = cov;
    }
    return Gmm(comps);
}

}  // namespace

TEST_CASE("fleet layout indexing") {
    FleetLayout layout{2, 1, 4};
    CHECK(layout.assets() == 3);
    CHECK(layout.flat_dim() == 12);
    CHECK(layout.flat_index(1, 0) == 0);
    CHECK(layout.flat_index(2, 0) == 3);
    CHECK(layout.flat_index(4, 2) == 11);
    CHECK_THROWS_AS(layout.flat_index(0, 0), std::invalid_argument);
    CHECK_THROWS_AS(layout.flat_index(5, 0), std::invalid_argument);
    CHECK_THROWS_AS(layout.flat_index(1, 3), std::invalid_argument);
    CHECK_THROWS_AS((FleetLayout{0, 0, 3}.validate()), std::invalid_argument);
}

TEST_CASE("textbook conditioning through ingest") {
    FleetLayout layout{1, 0, 2};
    Mat cov(2, 2);
    cov << 1.0, 0.5, 0.5, 1.0;
    UncertaintyState s(layout, gaussian_prior(Vec::Zero(2), cov));

    const UncertaintyState s1 = ingest_observation(s, 1, Vec::Constant(1, 1.0));
    const Gmm next = dist_next_period(s1);
    CHECK(next.components()[0].mean[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(next.components()[0].covariance(0, 0) == doctest::Approx(0.75).epsilon(1e-12));

    CHECK_THROWS_AS(ingest_observation(s, 2, Vec::Constant(1, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(ingest_observation(s1, 2, Vec::Constant(1, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(ingest_observation(s, 1, Vec::Constant(2, 1.0)), std::invalid_argument);
}

TEST_CASE("independent periods are unchanged by observations") {
    FleetLayout layout{1, 1, 3};
    const Gmm prior = block_diag_prior(layout, 3);
    UncertaintyState s(layout, prior);
    const UncertaintyState s1 = ingest_observation(s, 1, Vec::Constant(2, 0.9));

    const Gmm after = unc::dist_for_period(s1, 3);
    const Gmm expected = gmm::marginal(prior, {4, 5});
    REQUIRE(after.component_count() == 2);
    for (int m = 0; m < 2; ++m) {
        CHECK(after.components()[m].weight ==
              doctest::Approx(expected.components()[m].weight).epsilon(1e-10));
        CHECK((after.components()[m].mean - expected.components()[m].mean).cwiseAbs().maxCoeff() <
              1e-10);
    }
}

TEST_CASE("mixture ingest matches rejection sampling") {
    FleetLayout layout{1, 0, 2};
    std::vector<gmm::GaussianComponent> comps(2);
    comps[0].weight = 0.5;
    comps[0].mean = (Vec(2) << 0.4, 0.3).finished();
    comps[0].covariance = ar1_cov(2, 0.15, 0.8);
    comps[1].weight = 0.5;
    comps[1].mean = (Vec(2) << 0.9, 1.1).finished();
    comps[1].covariance = ar1_cov(2, 0.2, 0.7);
    const Gmm prior(comps);
    UncertaintyState s(layout, prior);

    const double y = 0.7;
    const UncertaintyState s1 = ingest_observation(s, 1, Vec::Constant(1, y));
    const Gmm cond = dist_next_period(s1);

    const gmm::Dataset joint = gmm::sample(prior, 1000000, 31);
    std::vector<double> accepted;
    for (Eigen::Index i = 0; i < joint.size(); ++i) {
        if (std::abs(joint.rows()(i, 0) - y) <= 0.02) accepted.push_back(joint.rows()(i, 1));
    }
    REQUIRE(accepted.size() > 20000);
    const double ks = rlrtest::ks_distance(accepted, [&](double x) { return gmm::cdf1(cond, x); });
    CHECK(ks < 0.01);

    // conditional moments against the same accepted sample
    double mean = 0.0;
    for (double v : accepted) mean += v;
    mean /= double(accepted.size());
    CHECK(gmm::moments(cond).mean[0] == doctest::Approx(mean).epsilon(0.02));
}

TEST_CASE("next-period distribution at k=0 is the prior marginal") {
    FleetLayout layout{2, 1, 3};
    const Gmm prior = rlrtest::random_mixture(7, 2, layout.flat_dim(), 0.5, 0.3);
    UncertaintyState s(layout, prior);
    const Gmm next = dist_next_period(s);
    const Gmm expected = gmm::marginal(prior, {0, 1, 2});
    for (int m = 0; m < 2; ++m) {
        CHECK((next.components()[m].mean - expected.components()[m].mean).cwiseAbs().maxCoeff() ==
              0.0);
        CHECK((next.components()[m].covariance - expected.components()[m].covariance)
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }
}

TEST_CASE("future-period chain collapses to next period when empty") {
    FleetLayout layout{1, 1, 3};
    const Gmm prior = rlrtest::random_mixture(11, 3, layout.flat_dim(), 0.4, 0.25);
    UncertaintyState s(layout, prior);
    const UncertaintyState s1 = ingest_observation(s, 1, Vec::Constant(2, 0.5));

    const Gmm direct = dist_next_period(s1);
    const Gmm chained = unc::dist_for_period(s1, 2);
    for (int m = 0; m < 3; ++m) {
        CHECK((direct.components()[m].mean - chained.components()[m].mean).cwiseAbs().maxCoeff() ==
              0.0);
    }
    CHECK_THROWS_AS(unc::dist_future_period(s1, 1), std::invalid_argument);
    CHECK_THROWS_AS(unc::dist_future_period(s1, 4), std::invalid_argument);
}

TEST_CASE("gaussian chain mean equals direct conditional mean") {
    FleetLayout layout{1, 0, 6};
    const Mat cov = ar1_cov(6, 0.2, 0.85);
    Vec mean(6);
    mean << 1.0, 1.1, 1.2, 1.15, 0.9, 0.8;
    UncertaintyState s(layout, gaussian_prior(mean, cov));
    const UncertaintyState s1 = ingest_observation(s, 1, Vec::Constant(1, 1.4));

    for (int t = 2; t <= 6; ++t) {
        const Gmm chained = unc::dist_for_period(s1, t);
        // direct conditional of the full prior on coordinate 0
        const Gmm direct = gmm::condition(gaussian_prior(mean, cov), {0}, Vec::Constant(1, 1.4));
        const double direct_mean = direct.components()[0].mean[t - 2];
        CHECK(chained.components()[0].mean[0] == doctest::Approx(direct_mean).epsilon(1e-9));
    }
}

TEST_CASE("sum distributions") {
    FleetLayout layout{1, 1, 2};
    // two independent unit-variance assets
    Vec mean = Vec::Zero(4);
    UncertaintyState s(layout, gaussian_prior(mean, Mat::Identity(4, 4)));
    const Gmm period_sum = unc::sum_dist_period(s, 1);
    CHECK(period_sum.dim() == 1);
    CHECK(period_sum.components()[0].covariance(0, 0) == doctest::Approx(2.0).epsilon(1e-14));

    const Gmm horizon = unc::sum_dist_horizon(s, 2);
    CHECK(horizon.components()[0].covariance(0, 0) == doctest::Approx(4.0).epsilon(1e-14));

    const Gmm first_only = unc::sum_dist_horizon(s, 1);
    CHECK(first_only.components()[0].covariance(0, 0) ==
          doctest::Approx(period_sum.components()[0].covariance(0, 0)));

    // single-asset fleet: the summed distribution is the coordinate itself
    FleetLayout solo{1, 0, 2};
    const Gmm prior1 = rlrtest::random_mixture(13, 2, 2, 0.6, 0.2);
    UncertaintyState s1(solo, prior1);
    const Gmm sum1 = unc::sum_dist_period(s1, 1);
    const Gmm marg1 = gmm::marginal(prior1, {0});
    for (int m = 0; m < 2; ++m) {
        CHECK(sum1.components()[m].mean[0] ==
              doctest::Approx(marg1.components()[m].mean[0]).epsilon(1e-14));
    }
}

TEST_CASE("summed quantile matches empirical quantile") {
    FleetLayout layout{2, 0, 1};
    std::vector<gmm::GaussianComponent> comps(2);
    comps[0].weight = 0.45;
    comps[0].mean = (Vec(2) << 0.5, 0.7).finished();
    comps[0].covariance = (Mat(2, 2) << 0.10, 0.04, 0.04, 0.12).finished();
    comps[1].weight = 0.55;
    comps[1].mean = (Vec(2) << 1.2, 1.0).finished();
    comps[1].covariance = (Mat(2, 2) << 0.15, -0.03, -0.03, 0.09).finished();
    const Gmm prior(comps);
    UncertaintyState s(layout, prior);
    const Gmm sum = unc::sum_dist_period(s, 1);

    const gmm::Dataset draws = gmm::sample(prior, 1000000, 77);
    std::vector<double> sums(draws.size());
    for (Eigen::Index i = 0; i < draws.size(); ++i) {
        sums[i] = draws.rows()(i, 0) + draws.rows()(i, 1);
    }
    std::sort(sums.begin(), sums.end());
    const double empirical_q10 = sums[static_cast<std::size_t>(0.1 * sums.size())];
    const double sigma = std::sqrt(gmm::moments(sum).covariance(0, 0));
    CHECK(std::abs(gmm::quantile1(sum, 0.1) - empirical_q10) < 0.01 * sigma);
}

TEST_CASE("horizon sum moments match Monte Carlo") {
    FleetLayout layout{1, 1, 3};
    const Gmm prior = rlrtest::random_mixture(17, 2, 6, 0.5, 0.2);
    UncertaintyState s(layout, prior);
    const Gmm total = unc::sum_dist_horizon(s, 3);

    const gmm::Dataset draws = gmm::sample(prior, 100000, 5);
    double mean = 0.0, var = 0.0;
    for (Eigen::Index i = 0; i < draws.size(); ++i) mean += draws.rows().row(i).sum();
    mean /= double(draws.size());
    for (Eigen::Index i = 0; i < draws.size(); ++i) {
        const double d = draws.rows().row(i).sum() - mean;
        var += d * d;
    }
    var /= double(draws.size());
    CHECK(gmm::moments(total).mean[0] == doctest::Approx(mean).epsilon(0.02));
    CHECK(gmm::moments(total).covariance(0, 0) == doctest::Approx(var).epsilon(0.02));
}

TEST_CASE("point forecasts") {
    FleetLayout layout{1, 1, 3};
    const Gmm prior = block_diag_prior(layout, 3);
    UncertaintyState s(layout, prior);

    CHECK_THROWS_AS(unc::point_forecast(s, 2, ForecastMethod::Persistence),
                    std::invalid_argument);

    Vec obs(2);
    obs << 0.8, 1.1;
    const UncertaintyState s1 = ingest_observation(s, 1, obs);
    for (int t = 2; t <= 3; ++t) {
        const Vec fc = unc::point_forecast(s1, t, ForecastMethod::Persistence);
        CHECK(fc[0] == doctest::Approx(0.8));
        CHECK(fc[1] == doctest::Approx(1.1));
    }

    // independent special block keeps its prior mean: 0.4*0.2 + 0.6*1.8
    const Vec fc = unc::point_forecast(s1, 3, ForecastMethod::UpdatedExpectation);
    CHECK(fc[0] == doctest::Approx(0.4 * 0.2 + 0.6 * 1.8).epsilon(1e-9));
    CHECK(fc[1] == doctest::Approx(0.4 * 0.2 + 0.6 * 1.8).epsilon(1e-9));
}

TEST_CASE("updated expectation matches rejection sampling") {
    FleetLayout layout{1, 0, 2};
    std::vector<gmm::GaussianComponent> comps(2);
    comps[0].weight = 0.6;
    comps[0].mean = (Vec(2) << 0.5, 0.4).finished();
    comps[0].covariance = ar1_cov(2, 0.12, 0.75);
    comps[1].weight = 0.4;
    comps[1].mean = (Vec(2) << 1.1, 1.2).finished();
    comps[1].covariance = ar1_cov(2, 0.18, 0.8);
    const Gmm prior(comps);
    UncertaintyState s(layout, prior);
    const double y = 0.8;
    const UncertaintyState s1 = ingest_observation(s, 1, Vec::Constant(1, y));

    const gmm::Dataset joint = gmm::sample(prior, 1000000, 41);
    double acc = 0.0;
    int count = 0;
    for (Eigen::Index i = 0; i < joint.size(); ++i) {
        if (std::abs(joint.rows()(i, 0) - y) <= 0.02) {
            acc += joint.rows()(i, 1);
            ++count;
        }
    }
    REQUIRE(count > 10000);
    const Vec fc = unc::point_forecast(s1, 2, ForecastMethod::UpdatedExpectation);
    CHECK(fc[0] == doctest::Approx(acc / count).epsilon(0.02));
}

TEST_CASE("recursive ingest equals joint conditioning") {
    FleetLayout layout{1, 1, 4};
    const Gmm prior = rlrtest::random_mixture(23, 3, 8, 0.4, 0.2);
    UncertaintyState s(layout, prior);
    Vec x1(2), x2(2);
    x1 << 0.4, 0.6;
    x2 << 0.7, 0.2;
    const UncertaintyState two_steps = ingest_observation(ingest_observation(s, 1, x1), 2, x2);

    Vec joint_obs(4);
    joint_obs << x1, x2;
    const Gmm once = gmm::condition(prior, {0, 1, 2, 3}, joint_obs);

    const auto a = gmm::moments(two_steps.conditional());
    const auto b = gmm::moments(once);
    CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((a.covariance - b.covariance).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("gaussian ingestion never widens per-period marginals") {
    FleetLayout layout{2, 0, 4};
    rlr::gmm::detail::Rng rng(97);
    const Mat cov = rlrtest::random_spd(rng, 8, 0.2);
    UncertaintyState s(layout, gaussian_prior(Vec::Constant(8, 1.0), cov));
    const UncertaintyState s1 = ingest_observation(s, 1, (Vec(2) << 0.9, 1.2).finished());

    for (int t = 2; t <= 4; ++t) {
        const Gmm before = gmm::marginal(s.prior(), {(t - 1) * 2, (t - 1) * 2 + 1});
        const Gmm after = unc::dist_for_period(s1, t);
        for (int i = 0; i < 2; ++i) {
            CHECK(after.components()[0].covariance(i, i) <=
                  before.components()[0].covariance(i, i) + 1e-12);
        }
    }
}

TEST_CASE("asset permutation commutes with the engine") {
    FleetLayout layout{2, 1, 2};
    const Gmm prior = rlrtest::random_mixture(29, 2, 6, 0.5, 0.3);
    // permutation of assets: (0 1 2) -> (2 0 1)
    const std::vector<int> perm{2, 0, 1};
    std::vector<int> flat_perm;
    for (int t = 0; t < 2; ++t) {
        for (int a : perm) flat_perm.push_back(t * 3 + a);
    }
    const Gmm permuted_prior = gmm::marginal(prior, flat_perm);

    UncertaintyState s(layout, prior);
    UncertaintyState sp(layout, permuted_prior);
    Vec obs(3);
    obs << 0.3, 0.8, 1.2;
    Vec perm_obs(3);
    for (int i = 0; i < 3; ++i) perm_obs[i] = obs[perm[i]];

    const Gmm a = unc::sum_dist_period(ingest_observation(s, 1, obs), 2);
    const Gmm b = unc::sum_dist_period(ingest_observation(sp, 1, perm_obs), 2);
    CHECK(gmm::moments(a).mean[0] == doctest::Approx(gmm::moments(b).mean[0]).epsilon(1e-10));
    CHECK(gmm::moments(a).covariance(0, 0) ==
          doctest::Approx(gmm::moments(b).covariance(0, 0)).epsilon(1e-10));
}

TEST_CASE("advance_unobserved keeps prior marginals") {
    FleetLayout layout{1, 1, 3};
    const Gmm prior = rlrtest::random_mixture(37, 2, 6, 0.5, 0.25);
    UncertaintyState s(layout, prior);
    const UncertaintyState s1 = advance_unobserved(s);
    CHECK(s1.current_k() == 1);
    const Gmm next = dist_next_period(s1);
    const Gmm expected = gmm::marginal(prior, {2, 3});
    for (int m = 0; m < 2; ++m) {
        CHECK(next.components()[m].weight ==
              doctest::Approx(expected.components()[m].weight).epsilon(1e-14));
        CHECK((next.components()[m].mean - expected.components()[m].mean).cwiseAbs().maxCoeff() ==
              0.0);
    }
    CHECK(advance_unobserved(s1).current_k() == 2);
    CHECK_THROWS_AS(advance_unobserved(advance_unobserved(s1)), std::invalid_argument);
}

TEST_CASE("horizon bundle is consistent with the piecewise calls") {
    FleetLayout layout{1, 1, 3};
    const Gmm prior = rlrtest::random_mixture(43, 2, 6, 0.5, 0.25);
    UncertaintyState s(layout, prior);
    const UncertaintyState s1 = ingest_observation(s, 1, (Vec(2) << 0.4, 0.9).finished());

    const auto bundle = unc::horizon_distributions(s1);
    REQUIRE(bundle.per_period.size() == 2);
    REQUIRE(bundle.period_sums.size() == 2);
    for (int t = 2; t <= 3; ++t) {
        const Gmm direct = unc::sum_dist_period(s1, t);
        const auto& from_bundle = bundle.period_sums.at(t);
        CHECK(gmm::moments(from_bundle).mean[0] ==
              doctest::Approx(gmm::moments(direct).mean[0]).epsilon(1e-12));
    }
    const Gmm horizon = unc::sum_dist_horizon(s1, 3);
    CHECK(gmm::moments(bundle.horizon_sum).mean[0] ==
          doctest::Approx(gmm::moments(horizon).mean[0]).epsilon(1e-12));

    double wsum = 0.0;
    for (const auto& comp : bundle.horizon_sum.components()) wsum += comp.weight;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
}
