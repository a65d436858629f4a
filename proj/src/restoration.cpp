#include "rlrestore/restoration.hpp"

#include "rlrestore/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rlr::model {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void ScenarioSpec::validate() const {
    require(!microgrids.empty(), "scenario needs at least one microgrid");
    require(periods >= 1, "scenario needs at least one period");
    require(tau > 0.0, "period length must be positive");
    require(alpha > 0.5 && alpha < 1.0, "confidence level must lie in (0.5, 1)");
    const int assets = fleet.wind_count + fleet.solar_count;
    require(fleet.wind_count >= 0 && fleet.solar_count >= 0, "fleet counts must be nonnegative");
    require(static_cast<int>(fleet.capacity_mw.size()) == assets,
            "fleet capacity list must have one entry per asset");
    for (double cap : fleet.capacity_mw) require(cap >= 0.0, "asset capacity must be nonnegative");

    std::vector<char> owned(assets, 0);
    for (const auto& mg : microgrids) {
        require(!mg.loads.empty(), "microgrid '" + mg.name + "' needs at least one load");
        for (const auto& g : mg.generators) {
            require(0.0 <= g.p_min && g.p_min <= g.p_max,
                    "generator '" + g.name + "' needs 0 <= p_min <= p_max");
            require(g.en_0 >= 0.0, "generator '" + g.name + "' needs en_0 >= 0");
            require(g.r_up >= 0.0 && g.r_dn >= 0.0,
                    "generator '" + g.name + "' ramp limits must be nonnegative");
        }
        for (const auto& e : mg.esses) {
            require(e.capacity > 0.0, "storage '" + e.name + "' needs positive capacity");
            require(0.0 <= e.soc_min && e.soc_min <= e.soc_now && e.soc_now <= e.soc_max &&
                        e.soc_max <= 1.0,
                    "storage '" + e.name + "' needs soc_min <= soc_now <= soc_max in [0,1]");
            require(e.p_ch_max >= 0.0 && e.p_dch_max >= 0.0,
                    "storage '" + e.name + "' power limits must be nonnegative");
            require(e.eff_ch > 0.0 && e.eff_ch <= 1.0 && e.eff_dch > 0.0 && e.eff_dch <= 1.0,
                    "storage '" + e.name + "' efficiencies must lie in (0,1]");
            require(e.dch_prev >= 0.0 && e.ch_prev <= 0.0,
                    "storage '" + e.name + "' previous levels have the wrong sign");
        }
        for (const auto& l : mg.loads) {
            require(l.weight > 0.0, "load '" + l.name + "' needs a positive weight");
            require(l.demand.size() == periods,
                    "load '" + l.name + "' needs one demand entry per period");
            require((l.demand.array() >= 0.0).all(),
                    "load '" + l.name + "' demand must be nonnegative");
        }
        for (int id : mg.renewable_ids) {
            require(id >= 0 && id < assets,
                    "microgrid '" + mg.name + "' references an unknown renewable asset");
            require(!owned[id], "renewable asset " + std::to_string(id) + " owned twice");
            owned[id] = 1;
        }
    }
}

int ScenarioSpec::total_generators() const {
    int n = 0;
    for (const auto& mg : microgrids) n += static_cast<int>(mg.generators.size());
    return n;
}

int ScenarioSpec::total_esses() const {
    int n = 0;
    for (const auto& mg : microgrids) n += static_cast<int>(mg.esses.size());
    return n;
}

int ScenarioSpec::total_loads() const {
    int n = 0;
    for (const auto& mg : microgrids) n += static_cast<int>(mg.loads.size());
    return n;
}

unc::FleetLayout ScenarioSpec::fleet_layout() const {
    unc::FleetLayout layout{fleet.wind_count, fleet.solar_count, periods};
    layout.validate();
    return layout;
}

OperatingState OperatingState::initial(const ScenarioSpec& sc) {
    OperatingState st;
    for (const auto& mg : sc.microgrids) {
        for (const auto& g : mg.generators) {
            st.gen_energy.push_back(g.en_0);
            st.gen_prev.push_back(g.p_prev);
        }
        for (const auto& e : mg.esses) {
            st.ess_soc.push_back(e.soc_now);
            st.ess_dch_prev.push_back(e.dch_prev);
            st.ess_ch_prev.push_back(e.ch_prev);
        }
    }
    return st;
}

int WindowLayout::base(int t) const {
    if (t <= k || t > last_period) {
        throw std::out_of_range("window layout: period " + std::to_string(t) +
                                " outside window " + std::to_string(k + 1) + ".." +
                                std::to_string(last_period));
    }
    return (t - k - 1) * vars_per_period;
}

int WindowLayout::gen_r(int t, int g) const {
    if (!ocdd) throw std::logic_error("ramp increments exist only in the ramp-variable form");
    return base(t) + n_loads + n_gens + 5 * n_esses + g;
}

int WindowLayout::ess_rdch(int t, int e) const {
    if (!ocdd) throw std::logic_error("ramp increments exist only in the ramp-variable form");
    return base(t) + n_loads + 2 * n_gens + 5 * n_esses + e;
}

int WindowLayout::ess_rch(int t, int e) const {
    if (!ocdd) throw std::logic_error("ramp increments exist only in the ramp-variable form");
    return base(t) + n_loads + 2 * n_gens + 6 * n_esses + e;
}

std::vector<AdequacyGroup> adequacy_groups(const ScenarioSpec& sc) {
    std::vector<AdequacyGroup> groups;
    int g0 = 0, e0 = 0, l0 = 0;
    for (const auto& mg : sc.microgrids) {
        AdequacyGroup grp;
        grp.name = mg.name;
        for (std::size_t i = 0; i < mg.generators.size(); ++i) grp.gens.push_back(g0 + int(i));
        for (std::size_t i = 0; i < mg.esses.size(); ++i) grp.esses.push_back(e0 + int(i));
        for (std::size_t i = 0; i < mg.loads.size(); ++i) grp.loads.push_back(l0 + int(i));
        grp.assets = mg.renewable_ids;
        g0 += static_cast<int>(mg.generators.size());
        e0 += static_cast<int>(mg.esses.size());
        l0 += static_cast<int>(mg.loads.size());
        groups.push_back(std::move(grp));
    }
    if (sc.mode == Mode::Networked) {
        AdequacyGroup pooled;
        pooled.name = "networked";
        for (const auto& grp : groups) {
            pooled.gens.insert(pooled.gens.end(), grp.gens.begin(), grp.gens.end());
            pooled.esses.insert(pooled.esses.end(), grp.esses.begin(), grp.esses.end());
            pooled.loads.insert(pooled.loads.end(), grp.loads.begin(), grp.loads.end());
            pooled.assets.insert(pooled.assets.end(), grp.assets.begin(), grp.assets.end());
        }
        return {pooled};
    }
    return groups;
}

namespace {

struct FlatScenario {
    std::vector<const GeneratorSpec*> gens;
    std::vector<const EssSpec*> esses;
    std::vector<const LoadSpec*> loads;

    explicit FlatScenario(const ScenarioSpec& sc) {
        for (const auto& mg : sc.microgrids) {
            for (const auto& g : mg.generators) gens.push_back(&g);
            for (const auto& e : mg.esses) esses.push_back(&e);
            for (const auto& l : mg.loads) loads.push_back(&l);
        }
    }
};

// Right-hand sides of the per-period and horizon adequacy rows for one
// group, per the scenario's formulation.
struct GroupRhs {
    std::vector<double> period;  // t = k+1..K
    double horizon = 0.0;
};

GroupRhs group_rhs(const ScenarioSpec& sc, const unc::UncertaintyState* us, int k,
                   const AdequacyGroup& grp) {
    const int n_t = sc.periods - k;
    GroupRhs rhs;
    rhs.period.assign(n_t, 0.0);
    rhs.horizon = 0.0;
    if (grp.assets.empty()) return rhs;
    if (us == nullptr) {
        throw std::invalid_argument(
            "build_window: an uncertainty state is required when adequacy groups own "
            "renewable assets");
    }
    if (us->current_k() != k) {
        throw std::invalid_argument("build_window: uncertainty state is at period " +
                                    std::to_string(us->current_k()) + ", window starts after " +
                                    std::to_string(k));
    }

    const bool persistence = sc.formulation == Formulation::Persistence;
    const bool expectation = sc.formulation == Formulation::UpdatedExpectation;
    if (persistence || expectation) {
        // point forecasts on both rows; persistence before any observation
        // falls back to the prior expectation
        const auto method = (persistence && !us->observations().empty())
                                ? unc::ForecastMethod::Persistence
                                : unc::ForecastMethod::UpdatedExpectation;
        for (int t = k + 1; t <= sc.periods; ++t) {
            const gmm::Vec fc = unc::point_forecast(*us, t, method);
            double sum = 0.0;
            for (int a : grp.assets) sum += fc[a];
            rhs.period[t - k - 1] = sum;
        }
        if (expectation) {
            rhs.horizon =
                gmm::moments(unc::sum_dist_horizon(*us, sc.periods, grp.assets)).mean[0];
        } else {
            for (double v : rhs.period) rhs.horizon += v;
        }
        return rhs;
    }

    const double p = 1.0 - sc.alpha;
    for (int t = k + 1; t <= sc.periods; ++t) {
        rhs.period[t - k - 1] = gmm::quantile1(unc::sum_dist_period(*us, t, grp.assets), p);
    }
    rhs.horizon = gmm::quantile1(unc::sum_dist_horizon(*us, sc.periods, grp.assets), p);
    return rhs;
}

BuiltWindow build_window_impl(const ScenarioSpec& sc, const unc::UncertaintyState* us, int k,
                              const OperatingState& state, bool ocdd) {
    sc.validate();
    if (k < 0 || k >= sc.periods) {
        throw std::invalid_argument("build_window: window start " + std::to_string(k) +
                                    " leaves no periods");
    }
    const FlatScenario flat(sc);
    const int G = static_cast<int>(flat.gens.size());
    const int E = static_cast<int>(flat.esses.size());
    const int L = static_cast<int>(flat.loads.size());
    if (state.gen_energy.size() != std::size_t(G) || state.ess_soc.size() != std::size_t(E)) {
        throw std::invalid_argument("build_window: operating state does not match the scenario");
    }

    WindowLayout layout;
    layout.k = k;
    layout.last_period = sc.periods;
    layout.n_gens = G;
    layout.n_esses = E;
    layout.n_loads = L;
    layout.ocdd = ocdd;
    layout.vars_per_period = L + G + 5 * E + (ocdd ? G + 2 * E : 0);

    milp::MilpModel model;
    const double tau = sc.tau;

    // variables, period-major
    for (int t = k + 1; t <= sc.periods; ++t) {
        const std::string ts = std::to_string(t);
        for (int l = 0; l < L; ++l) model.add_binary("u_" + ts + "_" + std::to_string(l));
        for (int g = 0; g < G; ++g) {
            model.add_variable(flat.gens[g]->p_min, flat.gens[g]->p_max, milp::VarKind::Continuous,
                               "p_" + ts + "_" + std::to_string(g));
        }
        for (int e = 0; e < E; ++e) {
            model.add_variable(0.0, flat.esses[e]->p_dch_max, milp::VarKind::Continuous,
                               "dch_" + ts + "_" + std::to_string(e));
        }
        for (int e = 0; e < E; ++e) {
            model.add_variable(-flat.esses[e]->p_ch_max, 0.0, milp::VarKind::Continuous,
                               "ch_" + ts + "_" + std::to_string(e));
        }
        for (int e = 0; e < E; ++e) model.add_binary("chi_" + ts + "_" + std::to_string(e));
        for (int e = 0; e < E; ++e) model.add_binary("gam_" + ts + "_" + std::to_string(e));
        for (int e = 0; e < E; ++e) {
            const auto& ess = *flat.esses[e];
            const double lo = (t == k + 1) ? state.ess_soc[e] : ess.soc_min;
            const double hi = (t == k + 1) ? state.ess_soc[e] : ess.soc_max;
            model.add_variable(lo, hi, milp::VarKind::Continuous,
                               "soc_" + ts + "_" + std::to_string(e));
        }
        if (ocdd) {
            for (int g = 0; g < G; ++g) {
                model.add_variable(-flat.gens[g]->r_dn, flat.gens[g]->r_up,
                                   milp::VarKind::Continuous,
                                   "r_" + ts + "_" + std::to_string(g));
            }
            for (int e = 0; e < E; ++e) {
                model.add_variable(-milp::kInf, milp::kInf, milp::VarKind::Continuous,
                                   "rdch_" + ts + "_" + std::to_string(e));
            }
            for (int e = 0; e < E; ++e) {
                model.add_variable(-milp::kInf, milp::kInf, milp::VarKind::Continuous,
                                   "rch_" + ts + "_" + std::to_string(e));
            }
        }
    }

    // objective: priority-weighted service time, optionally power-weighted
    model.objective.direction = milp::Direction::Maximize;
    for (int t = k + 1; t <= sc.periods; ++t) {
        for (int l = 0; l < L; ++l) {
            const auto& load = *flat.loads[l];
            const double factor = sc.metric == Metric::ServiceTime
                                      ? load.weight * tau
                                      : load.weight * load.demand[t - 1] * tau;
            model.objective.coefficients.emplace_back(layout.u(t, l), factor);
        }
    }

    // storage behaviour
    for (int t = k + 1; t <= sc.periods; ++t) {
        const std::string ts = std::to_string(t);
        for (int e = 0; e < E; ++e) {
            const auto& ess = *flat.esses[e];
            model.add_constraint({{layout.ess_chi(t, e), 1.0}, {layout.ess_gam(t, e), 1.0}},
                                 milp::Sense::LessEqual, 1.0,
                                 "ess_mode_" + ts + "_" + std::to_string(e));
            model.add_constraint(
                {{layout.ess_dch(t, e), 1.0}, {layout.ess_chi(t, e), -ess.p_dch_max}},
                milp::Sense::LessEqual, 0.0, "dch_cap_" + ts + "_" + std::to_string(e));
            model.add_constraint(
                {{layout.ess_ch(t, e), -1.0}, {layout.ess_gam(t, e), -ess.p_ch_max}},
                milp::Sense::LessEqual, 0.0, "ch_cap_" + ts + "_" + std::to_string(e));
            if (t >= k + 2) {
                // soc(t) = soc(t-1) - tau*(dch/eff_d + ch*eff_c)/capacity
                const double kd = tau / (ess.eff_dch * ess.capacity);
                const double kc = tau * ess.eff_ch / ess.capacity;
                model.add_constraint({{layout.soc(t, e), 1.0},
                                      {layout.soc(t - 1, e), -1.0},
                                      {layout.ess_dch(t - 1, e), kd},
                                      {layout.ess_ch(t - 1, e), kc}},
                                     milp::Sense::Equal, 0.0,
                                     "soc_roll_" + ts + "_" + std::to_string(e));
            }
        }
    }

    // generator coupling
    for (int g = 0; g < G; ++g) {
        const auto& gen = *flat.gens[g];
        std::vector<std::pair<int, double>> energy;
        for (int t = k + 1; t <= sc.periods; ++t) energy.emplace_back(layout.gen_p(t, g), tau);
        model.add_constraint(std::move(energy), milp::Sense::LessEqual, state.gen_energy[g],
                             "fuel_" + std::to_string(g));
        if (!ocdd) {
            for (int t = k + 2; t <= sc.periods; ++t) {
                if (std::isfinite(gen.r_up)) {
                    model.add_constraint(
                        {{layout.gen_p(t, g), 1.0}, {layout.gen_p(t - 1, g), -1.0}},
                        milp::Sense::LessEqual, gen.r_up,
                        "ramp_up_" + std::to_string(t) + "_" + std::to_string(g));
                }
                if (std::isfinite(gen.r_dn)) {
                    model.add_constraint(
                        {{layout.gen_p(t - 1, g), 1.0}, {layout.gen_p(t, g), -1.0}},
                        milp::Sense::LessEqual, gen.r_dn,
                        "ramp_dn_" + std::to_string(t) + "_" + std::to_string(g));
                }
            }
        }
    }

    if (ocdd) {
        // levels reconstructed from the previous committed point plus
        // increments; the first step is ramp-limited too
        for (int t = k + 1; t <= sc.periods; ++t) {
            const std::string ts = std::to_string(t);
            for (int g = 0; g < G; ++g) {
                std::vector<std::pair<int, double>> link{{layout.gen_p(t, g), 1.0},
                                                         {layout.gen_r(t, g), -1.0}};
                double rhs = 0.0;
                if (t == k + 1) {
                    rhs = state.gen_prev[g];
                } else {
                    link.emplace_back(layout.gen_p(t - 1, g), -1.0);
                }
                model.add_constraint(std::move(link), milp::Sense::Equal, rhs,
                                     "link_p_" + ts + "_" + std::to_string(g));
            }
            for (int e = 0; e < E; ++e) {
                std::vector<std::pair<int, double>> link{{layout.ess_dch(t, e), 1.0},
                                                         {layout.ess_rdch(t, e), -1.0}};
                double rhs = 0.0;
                if (t == k + 1) {
                    rhs = state.ess_dch_prev[e];
                } else {
                    link.emplace_back(layout.ess_dch(t - 1, e), -1.0);
                }
                model.add_constraint(std::move(link), milp::Sense::Equal, rhs,
                                     "link_dch_" + ts + "_" + std::to_string(e));

                std::vector<std::pair<int, double>> linkc{{layout.ess_ch(t, e), 1.0},
                                                          {layout.ess_rch(t, e), -1.0}};
                double rhsc = 0.0;
                if (t == k + 1) {
                    rhsc = state.ess_ch_prev[e];
                } else {
                    linkc.emplace_back(layout.ess_ch(t - 1, e), -1.0);
                }
                model.add_constraint(std::move(linkc), milp::Sense::Equal, rhsc,
                                     "link_ch_" + ts + "_" + std::to_string(e));
            }
        }
    }

    if (sc.monotone_restoration) {
        for (int t = k + 1; t < sc.periods; ++t) {
            for (int l = 0; l < L; ++l) {
                model.add_constraint({{layout.u(t, l), 1.0}, {layout.u(t + 1, l), -1.0}},
                                     milp::Sense::LessEqual, 0.0);
            }
        }
    }

    // adequacy rows
    const auto groups = adequacy_groups(sc);
    BuiltWindow built{std::move(model), layout, {}, {}, true};
    for (const auto& grp : groups) {
        const GroupRhs rhs = group_rhs(sc, us, k, grp);

        double pmin_sum = 0.0;
        for (int g : grp.gens) pmin_sum += flat.gens[g]->p_min;
        double en_sum = 0.0;
        for (int g : grp.gens) en_sum += state.gen_energy[g];

        for (int t = k + 1; t <= sc.periods; ++t) {
            std::vector<std::pair<int, double>> row;
            for (int l : grp.loads) row.emplace_back(layout.u(t, l), flat.loads[l]->demand[t - 1]);
            for (int g : grp.gens) row.emplace_back(layout.gen_p(t, g), -1.0);
            for (int e : grp.esses) {
                row.emplace_back(layout.ess_dch(t, e), -1.0);
                row.emplace_back(layout.ess_ch(t, e), -1.0);
            }
            const double r = rhs.period[t - k - 1];
            built.model.add_constraint(std::move(row), milp::Sense::LessEqual, r,
                                       "power_adequacy_" + grp.name + "_" + std::to_string(t));
            if (-pmin_sum > r + 1e-9) built.fallback_feasible = false;
        }

        std::vector<std::pair<int, double>> horizon;
        for (int t = k + 1; t <= sc.periods; ++t) {
            for (int l : grp.loads) {
                horizon.emplace_back(layout.u(t, l), flat.loads[l]->demand[t - 1]);
            }
        }
        const double hrhs = rhs.horizon + en_sum / tau;
        built.model.add_constraint(std::move(horizon), milp::Sense::LessEqual, hrhs,
                                   "energy_adequacy_" + grp.name);
        if (0.0 > hrhs + 1e-9) built.fallback_feasible = false;

        built.period_rhs.push_back(rhs.period);
        built.horizon_rhs.push_back(rhs.horizon);
    }

    return built;
}

}  // namespace

BuiltWindow build_window(const ScenarioSpec& sc, const unc::UncertaintyState* us, int k,
                         const OperatingState& state) {
    if (sc.formulation == Formulation::Ocdd) return build_window_ocdd(sc, us, k, state);
    return build_window_impl(sc, us, k, state, false);
}

BuiltWindow build_window_ocdd(const ScenarioSpec& sc, const unc::UncertaintyState* us, int k,
                              const OperatingState& state) {
    return build_window_impl(sc, us, k, state, true);
}

PlanWindow extract_plan(const BuiltWindow& built, const milp::MilpSolution& sol,
                        const ScenarioSpec& sc, int k) {
    if (sol.status != milp::SolveStatus::Optimal && sol.status != milp::SolveStatus::GapLimit) {
        throw std::runtime_error("extract_plan: window has no usable solution");
    }
    if (sol.values.size() < built.layout.total_vars()) {
        throw std::runtime_error("extract_plan: solution does not match the window layout");
    }
    const WindowLayout& lay = built.layout;
    PlanWindow plan;
    plan.k = k;
    plan.objective = sol.objective;
    const int n_t = lay.window_periods();
    plan.restored.resize(n_t);
    plan.gen_power.resize(n_t);
    plan.ess_discharge.resize(n_t);
    plan.ess_charge.resize(n_t);
    plan.ess_chi.resize(n_t);
    plan.ess_gam.resize(n_t);
    plan.soc.resize(n_t);
    for (int t = k + 1; t <= lay.last_period; ++t) {
        const int i = t - k - 1;
        plan.restored[i].resize(lay.n_loads);
        for (int l = 0; l < lay.n_loads; ++l) {
            plan.restored[i][l] = sol.values[lay.u(t, l)] > 0.5 ? 1 : 0;
        }
        plan.gen_power[i].resize(lay.n_gens);
        for (int g = 0; g < lay.n_gens; ++g) plan.gen_power[i][g] = sol.values[lay.gen_p(t, g)];
        plan.ess_discharge[i].resize(lay.n_esses);
        plan.ess_charge[i].resize(lay.n_esses);
        plan.ess_chi[i].resize(lay.n_esses);
        plan.ess_gam[i].resize(lay.n_esses);
        plan.soc[i].resize(lay.n_esses);
        for (int e = 0; e < lay.n_esses; ++e) {
            plan.ess_discharge[i][e] = sol.values[lay.ess_dch(t, e)];
            plan.ess_charge[i][e] = sol.values[lay.ess_ch(t, e)];
            plan.ess_chi[i][e] = sol.values[lay.ess_chi(t, e)] > 0.5 ? 1 : 0;
            plan.ess_gam[i][e] = sol.values[lay.ess_gam(t, e)] > 0.5 ? 1 : 0;
            plan.soc[i][e] = sol.values[lay.soc(t, e)];
        }
    }
    (void)sc;
    return plan;
}

EnergyRoll roll_energy(const std::vector<double>& en, const std::vector<double>& realized_output,
                       double tau) {
    if (en.size() != realized_output.size()) {
        throw std::invalid_argument("roll_energy: one output per generator required");
    }
    EnergyRoll roll;
    roll.values.resize(en.size());
    for (std::size_t g = 0; g < en.size(); ++g) {
        const double next = en[g] - realized_output[g] * tau;
        if (next < 0.0) {
            roll.clamped = true;
            roll.values[g] = 0.0;
        } else {
            roll.values[g] = next;
        }
    }
    return roll;
}

double resilience(const ScenarioSpec& sc, const std::vector<std::vector<std::uint8_t>>& served,
                  Metric metric, int first_period) {
    const FlatScenario flat(sc);
    double total = 0.0;
    for (std::size_t i = 0; i < served.size(); ++i) {
        const int t = first_period + static_cast<int>(i);
        if (t < 1 || t > sc.periods) {
            throw std::invalid_argument("resilience: period outside the scenario horizon");
        }
        if (served[i].size() != flat.loads.size()) {
            throw std::invalid_argument("resilience: one flag per load required");
        }
        for (std::size_t l = 0; l < flat.loads.size(); ++l) {
            if (!served[i][l]) continue;
            const auto& load = *flat.loads[l];
            const double factor =
                metric == Metric::ServiceTime ? load.weight : load.weight * load.demand[t - 1];
            total += factor * sc.tau;
        }
    }
    return total;
}

}  // namespace rlr::model
