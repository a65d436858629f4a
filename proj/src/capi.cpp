#include "rlrestore.h"

#include "rlrestore/gmm.hpp"
#include "rlrestore/scenario_io.hpp"
#include "rlrestore/simulate.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

struct rlr_gmm {
    rlr::gmm::Gmm value;
};
struct rlr_scenario {
    rlr::model::ScenarioSpec value;
};
struct rlr_traces {
    std::vector<rlr::sim::TraceSet> value;
};
struct rlr_report {
    rlr::sim::SimulationReport value;
};

namespace {

thread_local std::string g_last_error;

rlr_status fail(rlr_status code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

template <typename F>
rlr_status wrap(F&& body) {
    try {
        return body();
    } catch (const rlr::io::UsageError& e) {
        return fail(RLR_ERR_INVALID_ARGUMENT, e.what());
    } catch (const rlr::io::DataError& e) {
        return fail(RLR_ERR_PARSE, e.what());
    } catch (const rlr::io::SolverError& e) {
        return fail(RLR_ERR_SOLVER, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(RLR_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::runtime_error& e) {
        return fail(RLR_ERR_NUMERIC, e.what());
    } catch (const std::exception& e) {
        return fail(RLR_ERR_INTERNAL, e.what());
    }
}

char* strdup_out(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

rlr_status require_file(const char* path) {
    if (path == nullptr) return fail(RLR_ERR_INVALID_ARGUMENT, "path is null");
    if (!std::filesystem::exists(path)) {
        return fail(RLR_ERR_IO, std::string("no such file: ") + path);
    }
    return RLR_OK;
}

rlr::model::ScenarioSpec with_options(const rlr_scenario* sc, const rlr_run_options* opt) {
    rlr::model::ScenarioSpec out = sc->value;
    if (opt == nullptr) return out;
    if (opt->formulation >= 0) {
        switch (opt->formulation) {
            case RLR_FORMULATION_DED: out.formulation = rlr::model::Formulation::Ded; break;
            case RLR_FORMULATION_OCDD: out.formulation = rlr::model::Formulation::Ocdd; break;
            case RLR_FORMULATION_PERSISTENCE:
                out.formulation = rlr::model::Formulation::Persistence;
                break;
            case RLR_FORMULATION_EXPECTATION:
                out.formulation = rlr::model::Formulation::UpdatedExpectation;
                break;
            default: throw std::invalid_argument("unknown formulation code");
        }
    }
    if (opt->mode >= 0) {
        if (opt->mode == RLR_MODE_STANDALONE) {
            out.mode = rlr::model::Mode::Standalone;
        } else if (opt->mode == RLR_MODE_NETWORKED) {
            out.mode = rlr::model::Mode::Networked;
        } else {
            throw std::invalid_argument("unknown mode code");
        }
    }
    if (opt->metric >= 0) {
        if (opt->metric == RLR_METRIC_SERVICE_TIME) {
            out.metric = rlr::model::Metric::ServiceTime;
        } else if (opt->metric == RLR_METRIC_WEIGHTED_POWER) {
            out.metric = rlr::model::Metric::WeightedPower;
        } else {
            throw std::invalid_argument("unknown metric code");
        }
    }
    if (opt->alpha > 0.0) out.alpha = opt->alpha;
    out.validate();
    return out;
}

rlr::milp::MilpOptions milp_options(const rlr_run_options* opt) {
    rlr::milp::MilpOptions m;
    if (opt != nullptr) {
        if (opt->abs_gap > 0.0) m.abs_gap = opt->abs_gap;
        if (opt->node_limit > 0) m.node_limit = opt->node_limit;
    }
    return m;
}

}  // namespace

extern "C" {

const char* rlr_version(void) { return "0.1.0"; }

const char* rlr_last_error(void) { return g_last_error.c_str(); }

void rlr_string_free(char* s) { std::free(s); }

/* ---- mixtures ---------------------------------------------------------- */

namespace {

// Mixture JSON failures surface as parse errors, not argument errors.
rlr::gmm::Gmm parse_gmm(const std::string& text) {
    try {
        return rlr::gmm::from_json(text);
    } catch (const std::invalid_argument& e) {
        throw rlr::io::DataError(e.what());
    }
}

}  // namespace

rlr_status rlr_gmm_load_file(const char* path, rlr_gmm** out) {
    if (out == nullptr) return fail(RLR_ERR_INVALID_ARGUMENT, "output handle is null");
    if (const rlr_status st = require_file(path); st != RLR_OK) return st;
    return wrap([&] {
        *out = new rlr_gmm{parse_gmm(rlr::io::read_file(path))};
        return RLR_OK;
    });
}

rlr_status rlr_gmm_from_json(const char* json_text, rlr_gmm** out) {
    if (json_text == nullptr || out == nullptr) {
        return fail(RLR_ERR_INVALID_ARGUMENT, "null argument");
    }
    return wrap([&] {
        *out = new rlr_gmm{parse_gmm(json_text)};
        return RLR_OK;
    });
}

rlr_status rlr_gmm_save_file(const rlr_gmm* g, const char* path) {
    if (g == nullptr || path == nullptr) return fail(RLR_ERR_INVALID_ARGUMENT, "null argument");
    return wrap([&] {
        rlr::io::write_file_atomic(path, rlr::gmm::to_json(g->value));
        return RLR_OK;
    });
}

rlr_status rlr_gmm_to_json(const rlr_gmm* g, char** json_out) {
    if (g == nullptr || json_out == nullptr) {
        return fail(RLR_ERR_INVALID_ARGUMENT, "null argument");
    }
    return wrap([&] {
        *json_out = strdup_out(rlr::gmm::to_json(g->value));
        return *json_out == nullptr ? fail(RLR_ERR_INTERNAL, "allocation failed") : RLR_OK;
    });
}

rlr_status rlr_gmm_fit_traces(const rlr_traces* traces, int components, uint64_t seed,
                              rlr_gmm** out) {
    if (traces == nullptr || out == nullptr) {
        return fail(RLR_ERR_INVALID_ARGUMENT, "null argument");
    }
    return wrap([&] {
        const auto data = rlr::io::traces_to_dataset(traces->value);
        rlr::gmm::FitConfig cfg;
        cfg.seed = seed;
        *out = new rlr_gmm{rlr::gmm::fit(data, components, cfg)};
        return RLR_OK;
    });
}

int rlr_gmm_dim(const rlr_gmm* g) { return g == nullptr ? 0 : g->value.dim(); }

int rlr_gmm_component_count(const rlr_gmm* g) {
    return g == nullptr ? 0 : g->value.component_count();
}

rlr_status rlr_gmm_mean(const rlr_gmm* g, double* out) {
    if (g == nullptr || out == nullptr) return fail(RLR_ERR_INVALID_ARGUMENT, "null argument");
    return wrap([&] {
        const auto mom = rlr::gmm::moments(g->value);
        for (int i = 0; i < g->value.dim(); ++i) out[i] = mom.mean[i];
        return RLR_OK;
    });
}

rlr_status rlr_gmm_quantile1(const rlr_gmm* g, double p, double* out) {
    if (g == nullptr || out == nullptr) return fail(RLR_ERR_INVALID_ARGUMENT, "null argument");
    return wrap([&] {
        *out = rlr::gmm::quantile1(g->value, p);
        return RLR_OK;
    });
}

void rlr_gmm_free(rlr_gmm* g) { delete g; }

/* ---- scenarios --------------------------------------------------------- */

rlr_status rlr_scenario_load_file(const char* path, rlr_scenario** out) {
    if (out == nullptr) return fail(RLR_ERR_INVALID_ARGUMENT, "output handle is null");
    if (const rlr_status st = require_file(path); st != RLR_OK) return st;
    return wrap([&] {
        *out = new rlr_scenario{rlr::io::load_scenario(path)};
        return RLR_OK;
    });
}

rlr_status rlr_scenario_from_json(const char* json_text, rlr_scenario** out) {
    if (json_text == nullptr || out == nullptr) {
        return fail(RLR_ERR_INVALID_ARGUMENT, "null argument");
    }
    return wrap([&] {
        *out = new rlr_scenario{rlr::io::scenario_from_json(json_text)};
        return RLR_OK;
    });
}

rlr_status rlr_scenario_to_json(const rlr_scenario* sc, char** json_out) {
    if (sc == nullptr || json_out == nullptr) {
        return fail(RLR_ERR_INVALID_ARGUMENT, "null argument");
    }
    return wrap([&] {
        *json_out = strdup_out(rlr::io::scenario_to_json(sc->value));
        return *json_out == nullptr ? fail(RLR_ERR_INTERNAL, "allocation failed") : RLR_OK;
    });
}

int rlr_scenario_periods(const rlr_scenario* sc) {
    return sc == nullptr ? 0 : sc->value.periods;
}

int rlr_scenario_asset_count(const rlr_scenario* sc) {
    return sc == nullptr ? 0 : sc->value.fleet.wind_count + sc->value.fleet.solar_count;
}

int rlr_scenario_microgrid_count(const rlr_scenario* sc) {
    return sc == nullptr ? 0 : static_cast<int>(sc->value.microgrids.size());
}

void rlr_scenario_free(rlr_scenario* sc) { delete sc; }

/* ---- traces ------------------------------------------------------------ */

rlr_status rlr_traces_load_csv(const char* path, rlr_traces** out) {
    if (out == nullptr) return fail(RLR_ERR_INVALID_ARGUMENT, "output handle is null");
    if (const rlr_status st = require_file(path); st != RLR_OK) return st;
    return wrap([&] {
        *out = new rlr_traces{rlr::io::ingest_csv_traces(path)};
        return RLR_OK;
    });
}

rlr_status rlr_traces_save_csv(const rlr_traces* traces, const char* path) {
    if (traces == nullptr || path == nullptr) {
        return fail(RLR_ERR_INVALID_ARGUMENT, "null argument");
    }
    return wrap([&] {
        rlr::io::write_csv_traces(path, traces->value);
        return RLR_OK;
    });
}

rlr_status rlr_traces_generate(const rlr_gmm* truth, const rlr_scenario* sc, int days,
                               uint64_t seed, rlr_traces** out) {
    if (truth == nullptr || sc == nullptr || out == nullptr) {
        return fail(RLR_ERR_INVALID_ARGUMENT, "null argument");
    }
    return wrap([&] {
        const auto layout = sc->value.fleet_layout();
        *out = new rlr_traces{rlr::sim::generate_traces(truth->value, layout,
                                                        sc->value.fleet.capacity_mw, days, seed)};
        return RLR_OK;
    });
}

int rlr_traces_day_count(const rlr_traces* traces) {
    return traces == nullptr ? 0 : static_cast<int>(traces->value.size());
}

void rlr_traces_free(rlr_traces* traces) { delete traces; }

/* ---- planning and simulation ------------------------------------------- */

void rlr_run_options_init(rlr_run_options* opt) {
    if (opt == nullptr) return;
    opt->formulation = -1;
    opt->mode = -1;
    opt->metric = -1;
    opt->alpha = -1.0;
    opt->no_update = 0;
    opt->abs_gap = 1e-6;
    opt->node_limit = 500000;
}

rlr_status rlr_solve_window(const rlr_scenario* sc, const rlr_gmm* prior,
                            const rlr_run_options* opt, int k, char** plan_json_out) {
    if (sc == nullptr || plan_json_out == nullptr) {
        return fail(RLR_ERR_INVALID_ARGUMENT, "null argument");
    }
    return wrap([&] {
        const auto spec = with_options(sc, opt);
        const std::string text = rlr::io::solve_window_json(
            spec, prior == nullptr ? nullptr : &prior->value, k, milp_options(opt));
        *plan_json_out = strdup_out(text);
        return *plan_json_out == nullptr ? fail(RLR_ERR_INTERNAL, "allocation failed") : RLR_OK;
    });
}

rlr_status rlr_simulate_day(const rlr_scenario* sc, const rlr_gmm* prior,
                            const rlr_traces* traces, int day_index, const rlr_run_options* opt,
                            rlr_report** out) {
    if (sc == nullptr || prior == nullptr || traces == nullptr || out == nullptr) {
        return fail(RLR_ERR_INVALID_ARGUMENT, "null argument");
    }
    if (day_index < 0 || day_index >= static_cast<int>(traces->value.size())) {
        return fail(RLR_ERR_INVALID_ARGUMENT,
                    "day index " + std::to_string(day_index) + " out of range");
    }
    return wrap([&] {
        const auto spec = with_options(sc, opt);
        rlr::sim::SimOptions sim_opt;
        sim_opt.no_update = opt != nullptr && opt->no_update != 0;
        sim_opt.milp = milp_options(opt);
        *out = new rlr_report{
            rlr::sim::run(spec, prior->value, traces->value[day_index], sim_opt)};
        return RLR_OK;
    });
}

rlr_status rlr_report_to_json(const rlr_report* report, char** json_out) {
    if (report == nullptr || json_out == nullptr) {
        return fail(RLR_ERR_INVALID_ARGUMENT, "null argument");
    }
    return wrap([&] {
        *json_out = strdup_out(rlr::io::report_to_json(report->value));
        return *json_out == nullptr ? fail(RLR_ERR_INTERNAL, "allocation failed") : RLR_OK;
    });
}

double rlr_report_resilience(const rlr_report* report, int metric) {
    if (report == nullptr) return std::nan("");
    return metric == RLR_METRIC_WEIGHTED_POWER ? report->value.resilience_weighted_power
                                               : report->value.resilience_service_time;
}

double rlr_report_spillage_mwh(const rlr_report* report) {
    return report == nullptr ? std::nan("") : report->value.spillage_mwh;
}

double rlr_report_unserved_mwh(const rlr_report* report) {
    return report == nullptr ? std::nan("") : report->value.unserved_mwh;
}

int rlr_report_regulation_events(const rlr_report* report) {
    return report == nullptr ? -1 : report->value.regulation_events;
}

void rlr_report_free(rlr_report* report) { delete report; }

/* ---- command-line entry ------------------------------------------------ */

int rlr_run_cli(int argc, const char* const* argv) {
    std::vector<std::string> args;
    args.reserve(argc > 0 ? argc : 0);
    for (int i = 0; i < argc; ++i) args.emplace_back(argv[i]);
    return rlr::io::run_cli(args);
}

}  // extern "C"
