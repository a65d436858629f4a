#pragma once

#include "rlrestore/milp.hpp"
#include "rlrestore/uncertainty.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace rlr::model {

// Dispatchable unit (diesel etc.). Energies in MWh, powers in MW, ramps in
// MW per period; r_dn is stored as a nonnegative magnitude.
struct GeneratorSpec {
    double p_min = 0.0;
    double p_max = 0.0;
    double en_0 = 0.0;
    double r_up = milp::kInf;
    double r_dn = milp::kInf;
    double p_prev = 0.0;
    std::string name;
};

// Storage unit. Charging power is carried as a negative level; ch_prev is
// therefore <= 0 while dch_prev >= 0.
struct EssSpec {
    double capacity = 0.0;  // MWh
    double soc_min = 0.0;
    double soc_max = 1.0;
    double soc_now = 0.5;
    double p_ch_max = 0.0;
    double p_dch_max = 0.0;
    double eff_ch = 1.0;
    double eff_dch = 1.0;
    double dch_prev = 0.0;
    double ch_prev = 0.0;
    std::string name;
};

struct LoadSpec {
    double weight = 1.0;
    Eigen::VectorXd demand;  // MW, one entry per period
    std::string name;
};

struct MicrogridSpec {
    std::string name;
    std::vector<GeneratorSpec> generators;
    std::vector<EssSpec> esses;
    std::vector<LoadSpec> loads;
    std::vector<int> renewable_ids;  // indices into the fleet
};

enum class Mode { Standalone, Networked };
enum class Metric { ServiceTime, WeightedPower };
enum class Formulation { Ded, Ocdd, Persistence, UpdatedExpectation };

struct FleetSpec {
    int wind_count = 0;
    int solar_count = 0;
    std::vector<double> capacity_mw;  // per asset, wind first then solar
};

struct ScenarioSpec {
    std::vector<MicrogridSpec> microgrids;
    int periods = 1;   // K
    double tau = 1.0;  // hours per period
    double alpha = 0.9;
    Mode mode = Mode::Standalone;
    Metric metric = Metric::ServiceTime;
    Formulation formulation = Formulation::Ded;
    FleetSpec fleet;
    bool monotone_restoration = false;

    void validate() const;
    int total_generators() const;
    int total_esses() const;
    int total_loads() const;
    unc::FleetLayout fleet_layout() const;  // requires at least one asset
};

// Mutable part of the plant state as the horizon rolls forward; entries are
// microgrid-major, matching the scenario order.
struct OperatingState {
    std::vector<double> gen_energy;  // EN_g entering the window
    std::vector<double> gen_prev;
    std::vector<double> ess_soc;
    std::vector<double> ess_dch_prev;
    std::vector<double> ess_ch_prev;

    static OperatingState initial(const ScenarioSpec& sc);
};

// Variable indexing of one window MILP; t is the absolute period.
struct WindowLayout {
    int k = 0;
    int last_period = 0;
    int n_gens = 0, n_esses = 0, n_loads = 0;
    int vars_per_period = 0;
    bool ocdd = false;

    int window_periods() const { return last_period - k; }
    int total_vars() const { return window_periods() * vars_per_period; }
    int base(int t) const;
    int u(int t, int load) const { return base(t) + load; }
    int gen_p(int t, int g) const { return base(t) + n_loads + g; }
    int ess_dch(int t, int e) const { return base(t) + n_loads + n_gens + e; }
    int ess_ch(int t, int e) const { return base(t) + n_loads + n_gens + n_esses + e; }
    int ess_chi(int t, int e) const { return base(t) + n_loads + n_gens + 2 * n_esses + e; }
    int ess_gam(int t, int e) const { return base(t) + n_loads + n_gens + 3 * n_esses + e; }
    int soc(int t, int e) const { return base(t) + n_loads + n_gens + 4 * n_esses + e; }
    int gen_r(int t, int g) const;     // ramp increment, ramp-variable form only
    int ess_rdch(int t, int e) const;  // idem
    int ess_rch(int t, int e) const;   // idem
};

// Adequacy accounting unit: the whole system when networked, one microgrid
// when standalone. Indices are global (microgrid-major).
struct AdequacyGroup {
    std::string name;
    std::vector<int> gens;
    std::vector<int> esses;
    std::vector<int> loads;
    std::vector<int> assets;
};

std::vector<AdequacyGroup> adequacy_groups(const ScenarioSpec& sc);

struct BuiltWindow {
    milp::MilpModel model;
    WindowLayout layout;
    std::vector<std::vector<double>> period_rhs;  // [group][t - k - 1]
    std::vector<double> horizon_rhs;              // [group]
    bool fallback_feasible = true;  // u = 0 with minimal generation fits the RHS
};

// Assembles the restoration MILP for periods k+1..K. The uncertainty state
// may be null only when no adequacy group owns a renewable asset; the risk
// terms then vanish and the window is deterministic. Dispatches on
// sc.formulation (the ramp-variable form goes through build_window_ocdd).
BuiltWindow build_window(const ScenarioSpec& sc, const unc::UncertaintyState* us, int k,
                         const OperatingState& state);

// Ramp-variable form: generator and storage levels are reconstructed from
// the previous committed point plus per-period increments, and the ramp
// bounds apply to every increment including the first.
BuiltWindow build_window_ocdd(const ScenarioSpec& sc, const unc::UncertaintyState* us, int k,
                              const OperatingState& state);

struct PlanWindow {
    int k = 0;
    // per window period (index 0 = period k+1), load/unit indices global
    std::vector<std::vector<std::uint8_t>> restored;
    std::vector<std::vector<double>> gen_power;
    std::vector<std::vector<double>> ess_discharge;
    std::vector<std::vector<double>> ess_charge;  // <= 0
    std::vector<std::vector<std::uint8_t>> ess_chi, ess_gam;
    std::vector<std::vector<double>> soc;
    double objective = 0.0;
};

// Decodes a solved window; throws std::runtime_error when the solution
// carries no usable incumbent.
PlanWindow extract_plan(const BuiltWindow& built, const milp::MilpSolution& sol,
                        const ScenarioSpec& sc, int k);

struct EnergyRoll {
    std::vector<double> values;
    bool clamped = false;
};

// EN_g forward roll over one period of realized output.
EnergyRoll roll_energy(const std::vector<double>& en, const std::vector<double>& realized_output,
                       double tau);

// Priority-weighted service metric over committed periods. served[i][l] is
// the final service flag of global load l in period first_period + i.
double resilience(const ScenarioSpec& sc, const std::vector<std::vector<std::uint8_t>>& served,
                  Metric metric, int first_period = 1);

}  // namespace rlr::model
