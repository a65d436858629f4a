#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rlrestore/simulate.hpp"
#include "test_scenarios.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace rlr;
using model::Metric;
using model::Mode;
using model::OperatingState;
using model::ScenarioSpec;
using rlrtest::pair_prior;
using rlrtest::pair_scenario;
using rlrtest::point_prior;
using sim::SimOptions;
using sim::SimulationReport;
using sim::TraceSet;

namespace {

ScenarioSpec loose_ramp_pair(int periods) {
    ScenarioSpec sc = pair_scenario(periods);
    for (auto& mg : sc.microgrids) {
        for (auto& g : mg.generators) g.r_up = g.r_dn = milp::kInf;
    }
    return sc;
}

TraceSet trace_from_flat(const gmm::Vec& flat, int periods, int assets) {
    TraceSet ts;
    ts.power.resize(periods, assets);
    for (int t = 0; t < periods; ++t) {
        for (int a = 0; a < assets; ++a) ts.power(t, a) = flat[t * assets + a];
    }
    ts.provenance = "fixture";
    return ts;
}

}  // namespace

TEST_CASE("perfect forecast gives the static optimum with no adjustment") {
    const ScenarioSpec sc = loose_ramp_pair(4);
    gmm::Vec flat(8);
    flat << 0.9, 0.5, 0.8, 0.6, 0.7, 0.55, 0.85, 0.5;
    const gmm::Gmm prior = point_prior(flat);
    const TraceSet trace = trace_from_flat(flat, 4, 2);

    // oracle: solve the whole horizon once
    const auto us = unc::UncertaintyState(sc.fleet_layout(), prior);
    const auto built = model::build_window(sc, &us, 0, OperatingState::initial(sc));
    const auto static_sol = milp::solve_milp(built.model);
    REQUIRE(static_sol.status == milp::SolveStatus::Optimal);

    const SimulationReport report = sim::run(sc, prior, trace);
    CHECK(report.infeasible_windows == 0);
    CHECK(report.spillage_mwh == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(report.unserved_mwh == doctest::Approx(0.0));
    CHECK(report.regulation_events == 0);
    CHECK(report.resilience_service_time ==
          doctest::Approx(static_sol.objective).epsilon(1e-9));
}

TEST_CASE("dead calm day falls back to diesel-only restoration") {
    const ScenarioSpec sc = loose_ramp_pair(3);
    const gmm::Gmm prior = point_prior(gmm::Vec::Zero(6));
    const TraceSet trace = trace_from_flat(gmm::Vec::Zero(6), 3, 2);

    const auto us = unc::UncertaintyState(sc.fleet_layout(), prior);
    const auto built = model::build_window(sc, &us, 0, OperatingState::initial(sc));
    const auto static_sol = milp::solve_milp(built.model);
    REQUIRE(static_sol.status == milp::SolveStatus::Optimal);

    const SimulationReport report = sim::run(sc, prior, trace);
    CHECK(report.resilience_service_time ==
          doctest::Approx(static_sol.objective).epsilon(1e-9));
    CHECK(report.spillage_mwh == doctest::Approx(0.0));
}

TEST_CASE("identical inputs give identical reports") {
    const ScenarioSpec sc = pair_scenario(4);
    const gmm::Gmm prior = pair_prior(4);
    const auto traces = sim::generate_traces(prior, sc.fleet_layout(), sc.fleet.capacity_mw, 2, 7);

    const SimulationReport a = sim::run(sc, prior, traces[0]);
    const SimulationReport b = sim::run(sc, prior, traces[0]);
    CHECK(a.resilience_service_time == b.resilience_service_time);
    CHECK(a.spillage_mwh == b.spillage_mwh);
    CHECK(a.unserved_mwh == b.unserved_mwh);
    CHECK(a.regulation_events == b.regulation_events);
    REQUIRE(a.periods.size() == b.periods.size());
    for (std::size_t i = 0; i < a.periods.size(); ++i) {
        CHECK(a.periods[i].committed == b.periods[i].committed);
        CHECK(a.periods[i].gen_power == b.periods[i].gen_power);
    }
}

TEST_CASE("adjustment arithmetic") {
    // single microgrid, one generator, one load, one wind asset
    ScenarioSpec sc = rlrtest::trivial_scenario(2);
    sc.fleet.wind_count = 1;
    sc.fleet.capacity_mw = {5.0};
    sc.microgrids[0].renewable_ids = {0};
    sc.microgrids[0].generators[0].p_max = 3.0;
    sc.microgrids[0].generators[0].en_0 = 50.0;
    sc.microgrids[0].loads[0].demand = Eigen::VectorXd::Constant(2, 3.0);
    sc.validate();

    SUBCASE("shortfall covered by regulation") {
        const auto out = sim::adjust_realization(sc, 1, {1}, {2.0}, {}, {},
                                                 Eigen::VectorXd::Constant(1, 0.5), {50.0});
        CHECK(out.shortfall_flag);
        CHECK(out.regulation_up[0] == doctest::Approx(0.5));
        CHECK(out.spillage == doctest::Approx(0.0));
        CHECK(out.unserved_energy == doctest::Approx(0.0));
        CHECK(out.shed_loads.empty());
    }
    SUBCASE("surplus becomes spillage") {
        const auto out = sim::adjust_realization(sc, 1, {1}, {2.0}, {}, {},
                                                 Eigen::VectorXd::Constant(1, 1.4), {50.0});
        CHECK_FALSE(out.shortfall_flag);
        CHECK(out.spillage == doctest::Approx(0.4));
        CHECK(out.unserved_energy == doctest::Approx(0.0));
    }
    SUBCASE("headroom exhaustion sheds load") {
        sc.microgrids[0].generators[0].p_max = 2.3;  // headroom 0.3
        const auto out = sim::adjust_realization(sc, 1, {1}, {2.0}, {}, {},
                                                 Eigen::VectorXd::Constant(1, 0.0), {50.0});
        CHECK(out.shortfall_flag);
        CHECK(out.regulation_up[0] == doctest::Approx(0.3));
        CHECK(out.unserved_power == doctest::Approx(0.7));
        CHECK(out.unserved_energy == doctest::Approx(0.7 * sc.tau));
        CHECK(out.shed_loads == std::vector<int>{0});
    }
    SUBCASE("energy-limited regulation") {
        // only 2.2 MWh left: output can rise to 2.2 MW for one hour
        const auto out = sim::adjust_realization(sc, 1, {1}, {2.0}, {}, {},
                                                 Eigen::VectorXd::Constant(1, 0.0), {2.2});
        CHECK(out.regulation_up[0] == doctest::Approx(0.2));
        CHECK(out.unserved_power == doctest::Approx(0.8));
    }
}

TEST_CASE("per-period energy balance holds across the day") {
    const ScenarioSpec sc = pair_scenario(4);
    const gmm::Gmm prior = pair_prior(4);
    const auto traces = sim::generate_traces(prior, sc.fleet_layout(), sc.fleet.capacity_mw, 3, 21);

    for (const auto& trace : traces) {
        const SimulationReport report = sim::run(sc, prior, trace);
        for (const auto& rec : report.periods) {
            double supply = 0.0;
            for (std::size_t g = 0; g < rec.gen_power.size(); ++g) {
                supply += rec.gen_power[g] + rec.adjustment.regulation_up[g];
            }
            for (std::size_t e = 0; e < rec.ess_discharge.size(); ++e) {
                supply += rec.ess_discharge[e] + rec.ess_charge[e];
            }
            supply += rec.realized.sum();
            const double balance = rec.restored_demand_mw * sc.tau -
                                   (supply - rec.adjustment.spillage) * sc.tau -
                                   rec.adjustment.unserved_energy;
            CHECK(std::abs(balance) < 1e-9);
        }
    }
}

TEST_CASE("fuel and state-of-charge accounting") {
    const ScenarioSpec sc = pair_scenario(4);
    const gmm::Gmm prior = pair_prior(4);
    const auto traces = sim::generate_traces(prior, sc.fleet_layout(), sc.fleet.capacity_mw, 1, 5);
    const SimulationReport report = sim::run(sc, prior, traces[0]);

    // reconstruct the rolls independently
    std::vector<double> en;
    std::vector<double> soc;
    std::vector<const model::EssSpec*> esses;
    for (const auto& mg : sc.microgrids) {
        for (const auto& g : mg.generators) en.push_back(g.en_0);
        for (const auto& e : mg.esses) {
            soc.push_back(e.soc_now);
            esses.push_back(&e);
        }
    }
    for (const auto& rec : report.periods) {
        for (std::size_t e = 0; e < soc.size(); ++e) {
            CHECK(rec.soc[e] == doctest::Approx(soc[e]).epsilon(1e-9));
            soc[e] -= sc.tau *
                      (rec.ess_discharge[e] / esses[e]->eff_dch +
                       rec.ess_charge[e] * esses[e]->eff_ch) /
                      esses[e]->capacity;
        }
        for (std::size_t g = 0; g < en.size(); ++g) {
            const double burn = (rec.gen_power[g] + rec.adjustment.regulation_up[g]) * sc.tau;
            en[g] = std::max(0.0, en[g] - burn);
            CHECK(en[g] >= -1e-12);
        }
    }
}

TEST_CASE("trace generation clamps and calibrates") {
    const unc::FleetLayout layout{2, 0, 3};
    const gmm::Gmm truth = pair_prior(3, 2, 0.6, 0.8);

    // tight caps force clamping
    const auto tight = sim::generate_traces(truth, layout, {0.5, 0.5}, 50, 3);
    double max_seen = 0.0;
    for (const auto& ts : tight) max_seen = std::max(max_seen, ts.power.maxCoeff());
    CHECK(max_seen <= 0.5 + 1e-12);
    for (const auto& ts : tight) CHECK(ts.power.minCoeff() >= 0.0);

    // wide caps leave the sample mean near the truth
    const int days = 1000;
    const auto wide = sim::generate_traces(truth, layout, {100.0, 100.0}, days, 3);
    const auto mom = gmm::moments(truth);
    for (int coord = 0; coord < 6; ++coord) {
        double mean = 0.0;
        for (const auto& ts : wide) mean += ts.power(coord / 2, coord % 2);
        mean /= days;
        const double sigma = std::sqrt(mom.covariance(coord, coord));
        CHECK(std::abs(mean - mom.mean[coord]) < 3.0 * sigma / std::sqrt(double(days)));
    }

    // determinism
    const auto again = sim::generate_traces(truth, layout, {0.5, 0.5}, 50, 3);
    CHECK((again[7].power - tight[7].power).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("comparison table") {
    const ScenarioSpec sc = pair_scenario(3);
    const gmm::Gmm prior = pair_prior(3);
    const auto traces = sim::generate_traces(prior, sc.fleet_layout(), sc.fleet.capacity_mw, 2, 9);
    std::vector<SimulationReport> reports;
    for (const auto& t : traces) reports.push_back(sim::run(sc, prior, t));

    const auto table = sim::compare({{"a", reports}, {"b", reports}});
    CHECK(table.labels.size() == 2);
    CHECK(table.delta_vs_first[1] == doctest::Approx(0.0));
    CHECK(table.win_rate_vs_first[1] == doctest::Approx(1.0));

    std::vector<SimulationReport> shorter{reports[0]};
    CHECK_THROWS_AS(sim::compare({{"a", reports}, {"b", shorter}}), std::invalid_argument);
}

TEST_CASE("trace shape is validated") {
    const ScenarioSpec sc = pair_scenario(3);
    const gmm::Gmm prior = pair_prior(3);
    TraceSet bad;
    bad.power = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(sim::run(sc, prior, bad), std::invalid_argument);
}
