#include "rlrestore/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rlr::sim {

namespace {

struct FlatLoads {
    std::vector<double> weight;
    std::vector<const Eigen::VectorXd*> demand;

    explicit FlatLoads(const model::ScenarioSpec& sc) {
        for (const auto& mg : sc.microgrids) {
            for (const auto& l : mg.loads) {
                weight.push_back(l.weight);
                demand.push_back(&l.demand);
            }
        }
    }
};

struct FlatGens {
    std::vector<double> p_max;

    explicit FlatGens(const model::ScenarioSpec& sc) {
        for (const auto& mg : sc.microgrids) {
            for (const auto& g : mg.generators) p_max.push_back(g.p_max);
        }
    }
};

}  // namespace

AdjustmentOutcome adjust_realization(const model::ScenarioSpec& sc, int period,
                                     const std::vector<std::uint8_t>& committed,
                                     const std::vector<double>& gen_power,
                                     const std::vector<double>& ess_discharge,
                                     const std::vector<double>& ess_charge,
                                     const Eigen::VectorXd& realized,
                                     const std::vector<double>& gen_energy) {
    const FlatLoads loads(sc);
    const FlatGens gens(sc);
    const auto groups = model::adequacy_groups(sc);
    constexpr double tol = 1e-9;

    AdjustmentOutcome out;
    out.regulation_up.assign(gens.p_max.size(), 0.0);

    for (const auto& grp : groups) {
        double demand = 0.0;
        for (int l : grp.loads) {
            if (committed[l]) demand += (*loads.demand[l])[period - 1];
        }
        double supply = 0.0;
        for (int g : grp.gens) supply += gen_power[g];
        for (int e : grp.esses) supply += ess_discharge[e] + ess_charge[e];
        for (int a : grp.assets) supply += realized[a];

        double deficit = demand - supply;
        if (deficit > tol) {
            out.shortfall_flag = true;
            // raise units in index order within the group
            for (int g : grp.gens) {
                if (deficit <= tol) break;
                const double power_room = gens.p_max[g] - gen_power[g];
                const double energy_room = gen_energy[g] / sc.tau - gen_power[g];
                const double room = std::max(0.0, std::min(power_room, energy_room));
                const double extra = std::min(room, deficit);
                out.regulation_up[g] += extra;
                deficit -= extra;
            }
            if (deficit > tol) {
                out.unserved_power += deficit;
                // drop the cheapest committed loads until the gap is covered
                std::vector<int> order;
                for (int l : grp.loads) {
                    if (committed[l]) order.push_back(l);
                }
                std::sort(order.begin(), order.end(), [&](int a, int b) {
                    if (loads.weight[a] != loads.weight[b]) {
                        return loads.weight[a] < loads.weight[b];
                    }
                    return a < b;
                });
                double covered = 0.0;
                for (int l : order) {
                    if (covered >= deficit - tol) break;
                    out.shed_loads.push_back(l);
                    covered += (*loads.demand[l])[period - 1];
                }
            }
        } else if (deficit < -tol) {
            out.spillage += -deficit;
        }
    }
    out.unserved_energy = out.unserved_power * sc.tau;
    return out;
}

SimulationReport run(const model::ScenarioSpec& sc, const gmm::Gmm& prior, const TraceSet& trace,
                     const SimOptions& opt) {
    sc.validate();
    const unc::FleetLayout layout = sc.fleet_layout();
    if (trace.power.rows() != sc.periods || trace.power.cols() != layout.assets()) {
        throw std::invalid_argument("simulate: trace must be periods x assets");
    }

    const int G = sc.total_generators();
    const int E = sc.total_esses();
    const int L = sc.total_loads();
    std::vector<double> gen_pmin;
    std::vector<const model::EssSpec*> esses;
    for (const auto& mg : sc.microgrids) {
        for (const auto& g : mg.generators) gen_pmin.push_back(g.p_min);
        for (const auto& e : mg.esses) esses.push_back(&e);
    }

    SimulationReport report;
    report.label = opt.label;
    report.mode = sc.mode;
    report.formulation = sc.formulation;
    report.metric = sc.metric;
    report.alpha = sc.alpha;
    report.no_update = opt.no_update;

    // Stand-alone microgrids share nothing but the joint uncertainty state,
    // so their windows are solved independently.
    const bool decompose = sc.mode == model::Mode::Standalone && sc.microgrids.size() > 1;
    std::vector<model::ScenarioSpec> parts;
    std::vector<int> gen_off{0}, ess_off{0}, load_off{0};
    for (const auto& mg : sc.microgrids) {
        gen_off.push_back(gen_off.back() + static_cast<int>(mg.generators.size()));
        ess_off.push_back(ess_off.back() + static_cast<int>(mg.esses.size()));
        load_off.push_back(load_off.back() + static_cast<int>(mg.loads.size()));
        if (decompose) {
            model::ScenarioSpec part = sc;
            part.microgrids = {mg};
            parts.push_back(std::move(part));
        }
    }

    unc::UncertaintyState us(layout, prior);
    model::OperatingState state = model::OperatingState::initial(sc);
    std::vector<std::vector<std::uint8_t>> served_matrix;

    auto status_rank = [](milp::SolveStatus s) {
        switch (s) {
            case milp::SolveStatus::Optimal: return 0;
            case milp::SolveStatus::GapLimit: return 1;
            case milp::SolveStatus::Infeasible: return 2;
            case milp::SolveStatus::Unbounded: return 3;
            case milp::SolveStatus::SolverFailure: return 4;
        }
        return 4;
    };

    for (int k = 0; k < sc.periods; ++k) {
        PeriodRecord rec;
        rec.period = k + 1;
        rec.window_status = milp::SolveStatus::Optimal;
        rec.committed.assign(L, 0);
        rec.gen_power = gen_pmin;
        rec.ess_discharge.assign(E, 0.0);
        rec.ess_charge.assign(E, 0.0);
        rec.soc = state.ess_soc;

        const int n_parts = decompose ? static_cast<int>(parts.size()) : 1;
        for (int p = 0; p < n_parts; ++p) {
            const model::ScenarioSpec& window_sc = decompose ? parts[p] : sc;
            model::OperatingState window_state;
            if (decompose) {
                const auto slice = [&](const std::vector<double>& v, const std::vector<int>& off) {
                    return std::vector<double>(v.begin() + off[p], v.begin() + off[p + 1]);
                };
                window_state.gen_energy = slice(state.gen_energy, gen_off);
                window_state.gen_prev = slice(state.gen_prev, gen_off);
                window_state.ess_soc = slice(state.ess_soc, ess_off);
                window_state.ess_dch_prev = slice(state.ess_dch_prev, ess_off);
                window_state.ess_ch_prev = slice(state.ess_ch_prev, ess_off);
            } else {
                window_state = state;
            }

            const model::BuiltWindow built = model::build_window(window_sc, &us, k, window_state);
            const milp::MilpSolution sol = milp::solve_milp(built.model, opt.milp);
            if (status_rank(sol.status) > status_rank(rec.window_status)) {
                rec.window_status = sol.status;
            }
            for (const auto& row : built.period_rhs) rec.adequacy_rhs += row[0];

            const bool usable = (sol.status == milp::SolveStatus::Optimal ||
                                 sol.status == milp::SolveStatus::GapLimit) &&
                                sol.values.size() >= built.layout.total_vars();
            if (!usable) {
                // this block keeps minimal generation and restores nothing
                ++report.infeasible_windows;
                continue;
            }
            rec.window_objective += sol.objective;
            const model::PlanWindow plan = model::extract_plan(built, sol, window_sc, k);
            const int g0 = decompose ? gen_off[p] : 0;
            const int e0 = decompose ? ess_off[p] : 0;
            const int l0 = decompose ? load_off[p] : 0;
            for (std::size_t l = 0; l < plan.restored[0].size(); ++l) {
                rec.committed[l0 + l] = plan.restored[0][l];
            }
            for (std::size_t g = 0; g < plan.gen_power[0].size(); ++g) {
                rec.gen_power[g0 + g] = plan.gen_power[0][g];
            }
            for (std::size_t e = 0; e < plan.ess_discharge[0].size(); ++e) {
                rec.ess_discharge[e0 + e] = plan.ess_discharge[0][e];
                rec.ess_charge[e0 + e] = plan.ess_charge[0][e];
                rec.soc[e0 + e] = plan.soc[0][e];
            }
        }

        rec.realized = trace.power.row(k);
        rec.adjustment =
            adjust_realization(sc, k + 1, rec.committed, rec.gen_power, rec.ess_discharge,
                               rec.ess_charge, rec.realized, state.gen_energy);

        rec.served = rec.committed;
        for (int l : rec.adjustment.shed_loads) rec.served[l] = 0;
        const FlatLoads loads(sc);
        for (int l = 0; l < L; ++l) {
            if (rec.committed[l]) rec.restored_demand_mw += (*loads.demand[l])[k];
        }

        // roll the plant: fuel burn includes regulation
        std::vector<double> realized_gen(G);
        for (int g = 0; g < G; ++g) {
            realized_gen[g] = rec.gen_power[g] + rec.adjustment.regulation_up[g];
        }
        state.gen_energy = model::roll_energy(state.gen_energy, realized_gen, sc.tau).values;
        state.gen_prev = realized_gen;
        for (int e = 0; e < E; ++e) {
            const auto& ess = *esses[e];
            state.ess_soc[e] -= sc.tau *
                                (rec.ess_discharge[e] / ess.eff_dch +
                                 rec.ess_charge[e] * ess.eff_ch) /
                                ess.capacity;
            state.ess_dch_prev[e] = rec.ess_discharge[e];
            state.ess_ch_prev[e] = rec.ess_charge[e];
        }

        report.spillage_mwh += rec.adjustment.spillage * sc.tau;
        report.unserved_mwh += rec.adjustment.unserved_energy;
        if (rec.adjustment.shortfall_flag) ++report.regulation_events;
        served_matrix.push_back(rec.served);
        report.periods.push_back(std::move(rec));

        if (k + 1 < sc.periods) {
            us = opt.no_update ? unc::advance_unobserved(us)
                               : unc::ingest_observation(us, k + 1, trace.power.row(k));
        }
    }

    report.resilience_service_time =
        model::resilience(sc, served_matrix, model::Metric::ServiceTime);
    report.resilience_weighted_power =
        model::resilience(sc, served_matrix, model::Metric::WeightedPower);
    return report;
}

std::vector<TraceSet> generate_traces(const gmm::Gmm& truth, const unc::FleetLayout& layout,
                                      const std::vector<double>& capacities, int days,
                                      std::uint64_t seed) {
    layout.validate();
    if (truth.dim() != layout.flat_dim()) {
        throw std::invalid_argument("generate_traces: ground truth dimension mismatch");
    }
    if (static_cast<int>(capacities.size()) != layout.assets()) {
        throw std::invalid_argument("generate_traces: one capacity per asset required");
    }
    if (days < 1) throw std::invalid_argument("generate_traces: need at least one day");

    const gmm::Dataset draws = gmm::sample(truth, days, seed);
    std::vector<TraceSet> traces;
    traces.reserve(days);
    for (int d = 0; d < days; ++d) {
        TraceSet ts;
        ts.provenance = "synthetic seed " + std::to_string(seed) + " day " + std::to_string(d);
        ts.power.resize(layout.periods, layout.assets());
        for (int t = 0; t < layout.periods; ++t) {
            for (int a = 0; a < layout.assets(); ++a) {
                const double raw = draws.rows()(d, t * layout.assets() + a);
                ts.power(t, a) = std::clamp(raw, 0.0, capacities[a]);
            }
        }
        traces.push_back(std::move(ts));
    }
    return traces;
}

ComparisonTable compare(
    const std::vector<std::pair<std::string, std::vector<SimulationReport>>>& runs) {
    if (runs.empty()) throw std::invalid_argument("compare: no labelled runs");
    const std::size_t days = runs[0].second.size();
    if (days == 0) throw std::invalid_argument("compare: no days in the first run");
    for (const auto& [label, reports] : runs) {
        if (reports.size() != days) {
            throw std::invalid_argument("compare: run '" + label + "' covers " +
                                        std::to_string(reports.size()) + " days, expected " +
                                        std::to_string(days));
        }
    }

    ComparisonTable table;
    table.resilience.resize(days, runs.size());
    for (std::size_t r = 0; r < runs.size(); ++r) {
        table.labels.push_back(runs[r].first);
        double spill = 0.0, unserved = 0.0;
        int events = 0;
        for (std::size_t d = 0; d < days; ++d) {
            const auto& rep = runs[r].second[d];
            table.resilience(d, r) = rep.resilience_service_time;
            spill += rep.spillage_mwh;
            unserved += rep.unserved_mwh;
            events += rep.regulation_events;
        }
        table.mean_resilience.push_back(table.resilience.col(r).mean());
        table.total_spillage_mwh.push_back(spill);
        table.total_unserved_mwh.push_back(unserved);
        table.regulation_events.push_back(events);
    }
    for (std::size_t r = 0; r < runs.size(); ++r) {
        table.delta_vs_first.push_back(table.mean_resilience[r] - table.mean_resilience[0]);
        int wins = 0;
        for (std::size_t d = 0; d < days; ++d) {
            if (table.resilience(d, r) >= table.resilience(d, 0) - 1e-9) ++wins;
        }
        table.win_rate_vs_first.push_back(double(wins) / double(days));
    }
    return table;
}

}  // namespace rlr::sim
