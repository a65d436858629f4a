#pragma once

#include "rlrestore/gmm.hpp"
#include "rlrestore/milp.hpp"
#include "rlrestore/restoration.hpp"
#include "rlrestore/uncertainty.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace rlr::sim {

// One day of realized renewable output: periods x assets, in MW.
struct TraceSet {
    Eigen::MatrixXd power;
    std::string provenance;
};

// What happened once the committed interval met reality. Regulation raises
// dispatchable units (lowest index first within the adequacy group) up to
// headroom and remaining fuel; storage is never re-dispatched. A residual
// deficit is recorded as unserved energy and the cheapest committed loads
// are dropped from the service tally.
struct AdjustmentOutcome {
    std::vector<double> regulation_up;  // per generator, MW
    double spillage = 0.0;              // MW across groups
    double unserved_power = 0.0;        // MW residual after regulation
    double unserved_energy = 0.0;       // MWh
    bool shortfall_flag = false;        // supply fell short before regulation
    std::vector<int> shed_loads;        // global load indices dropped
};

struct PeriodRecord {
    int period = 0;
    milp::SolveStatus window_status = milp::SolveStatus::SolverFailure;
    double window_objective = 0.0;
    std::vector<std::uint8_t> committed;  // first-interval restoration flags
    std::vector<double> gen_power;
    std::vector<double> ess_discharge;
    std::vector<double> ess_charge;
    std::vector<double> soc;
    Eigen::VectorXd realized;  // per asset
    AdjustmentOutcome adjustment;
    std::vector<std::uint8_t> served;  // committed minus shed
    double restored_demand_mw = 0.0;
    double adequacy_rhs = 0.0;  // summed over groups, diagnostic
};

struct SimulationReport {
    std::string label;
    model::Mode mode = model::Mode::Standalone;
    model::Formulation formulation = model::Formulation::Ded;
    model::Metric metric = model::Metric::ServiceTime;
    double alpha = 0.9;
    bool no_update = false;
    std::vector<PeriodRecord> periods;
    double resilience_service_time = 0.0;
    double resilience_weighted_power = 0.0;
    double spillage_mwh = 0.0;
    double unserved_mwh = 0.0;
    int regulation_events = 0;
    int infeasible_windows = 0;
};

struct SimOptions {
    bool no_update = false;  // keep prior marginals, discard observations
    // Rolling windows run under a deterministic node budget; gap-limited
    // incumbents are committed like any other plan.
    milp::MilpOptions milp{.node_limit = 800};
    std::string label;
};

// Receding-horizon operation over one trace day: per period, solve the
// window, commit the first interval, realize the trace row, adjust, roll
// the plant state, and fold the realization into the uncertainty state.
// Infeasible windows commit nothing and minimal generation, then continue.
SimulationReport run(const model::ScenarioSpec& sc, const gmm::Gmm& prior, const TraceSet& trace,
                     const SimOptions& opt = {});

AdjustmentOutcome adjust_realization(const model::ScenarioSpec& sc, int period,
                                     const std::vector<std::uint8_t>& committed,
                                     const std::vector<double>& gen_power,
                                     const std::vector<double>& ess_discharge,
                                     const std::vector<double>& ess_charge,
                                     const Eigen::VectorXd& realized,
                                     const std::vector<double>& gen_energy);

// Daily samples from the ground-truth joint, clamped to [0, capacity].
std::vector<TraceSet> generate_traces(const gmm::Gmm& truth, const unc::FleetLayout& layout,
                                      const std::vector<double>& capacities, int days,
                                      std::uint64_t seed);

struct ComparisonTable {
    std::vector<std::string> labels;
    Eigen::MatrixXd resilience;        // days x labels (service-time metric)
    std::vector<double> mean_resilience;
    std::vector<double> total_spillage_mwh;
    std::vector<double> total_unserved_mwh;
    std::vector<int> regulation_events;
    std::vector<double> delta_vs_first;     // mean resilience difference
    std::vector<double> win_rate_vs_first;  // share of days with >= resilience
};

// Tabulates labelled batches of per-day reports; every label must cover the
// same number of days.
ComparisonTable compare(
    const std::vector<std::pair<std::string, std::vector<SimulationReport>>>& runs);

}  // namespace rlr::sim
