/*
 * rlrestore — risk-limiting load restoration for microgrids under renewable
 * uncertainty.
 *
 * C shared-library interface: opaque handles, integer status codes, JSON and
 * CSV payloads for structured data. Every function that can fail returns an
 * rlr_status; rlr_last_error() describes the most recent failure on the
 * calling thread. Handles are freed with their matching *_free function;
 * strings returned through char** are freed with rlr_string_free.
 */

#ifndef RLRESTORE_H
#define RLRESTORE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rlr_status {
    RLR_OK = 0,
    RLR_ERR_INVALID_ARGUMENT = 1,
    RLR_ERR_IO = 2,
    RLR_ERR_PARSE = 3,
    RLR_ERR_NUMERIC = 4,
    RLR_ERR_SOLVER = 5,
    RLR_ERR_INTERNAL = 6
} rlr_status;

typedef struct rlr_gmm rlr_gmm;           /* Gaussian mixture */
typedef struct rlr_scenario rlr_scenario; /* microgrid scenario */
typedef struct rlr_traces rlr_traces;     /* realized renewable days */
typedef struct rlr_report rlr_report;     /* one simulated day */

const char* rlr_version(void);
/* Message of the last failure on this thread; valid until the next call. */
const char* rlr_last_error(void);
void rlr_string_free(char* s);

/* ---- mixtures ---------------------------------------------------------- */
rlr_status rlr_gmm_load_file(const char* path, rlr_gmm** out);
rlr_status rlr_gmm_from_json(const char* json_text, rlr_gmm** out);
rlr_status rlr_gmm_save_file(const rlr_gmm* g, const char* path);
rlr_status rlr_gmm_to_json(const rlr_gmm* g, char** json_out);
/* Maximum-likelihood fit on trace days (one sample per day). */
rlr_status rlr_gmm_fit_traces(const rlr_traces* traces, int components, uint64_t seed,
                              rlr_gmm** out);
int rlr_gmm_dim(const rlr_gmm* g);
int rlr_gmm_component_count(const rlr_gmm* g);
/* Mean of the mixture; `out` must hold rlr_gmm_dim(g) doubles. */
rlr_status rlr_gmm_mean(const rlr_gmm* g, double* out);
/* Quantile of a univariate mixture at probability p in (0,1). */
rlr_status rlr_gmm_quantile1(const rlr_gmm* g, double p, double* out);
void rlr_gmm_free(rlr_gmm* g);

/* ---- scenarios --------------------------------------------------------- */
rlr_status rlr_scenario_load_file(const char* path, rlr_scenario** out);
rlr_status rlr_scenario_from_json(const char* json_text, rlr_scenario** out);
rlr_status rlr_scenario_to_json(const rlr_scenario* sc, char** json_out);
int rlr_scenario_periods(const rlr_scenario* sc);
int rlr_scenario_asset_count(const rlr_scenario* sc);
int rlr_scenario_microgrid_count(const rlr_scenario* sc);
void rlr_scenario_free(rlr_scenario* sc);

/* ---- traces ------------------------------------------------------------ */
rlr_status rlr_traces_load_csv(const char* path, rlr_traces** out);
rlr_status rlr_traces_save_csv(const rlr_traces* traces, const char* path);
/* Daily draws from a ground-truth mixture, clamped to asset capacities. */
rlr_status rlr_traces_generate(const rlr_gmm* truth, const rlr_scenario* sc, int days,
                               uint64_t seed, rlr_traces** out);
int rlr_traces_day_count(const rlr_traces* traces);
void rlr_traces_free(rlr_traces* traces);

/* ---- planning and simulation ------------------------------------------- */
enum {
    RLR_FORMULATION_DED = 0,
    RLR_FORMULATION_OCDD = 1,
    RLR_FORMULATION_PERSISTENCE = 2,
    RLR_FORMULATION_EXPECTATION = 3
};
enum { RLR_MODE_STANDALONE = 0, RLR_MODE_NETWORKED = 1 };
enum { RLR_METRIC_SERVICE_TIME = 0, RLR_METRIC_WEIGHTED_POWER = 1 };

typedef struct rlr_run_options {
    int formulation; /* RLR_FORMULATION_*, -1 keeps the scenario value */
    int mode;        /* RLR_MODE_*, -1 keeps the scenario value */
    int metric;      /* RLR_METRIC_*, -1 keeps the scenario value */
    double alpha;    /* confidence level in (0.5, 1), <= 0 keeps it */
    int no_update;   /* nonzero: keep prior marginals all day */
    double abs_gap;  /* branch-and-bound absolute gap */
    long node_limit; /* branch-and-bound node budget */
} rlr_run_options;

void rlr_run_options_init(rlr_run_options* opt);

/* Builds and solves the window starting after period k (k = 0: the full
 * horizon) and returns the plan as JSON. */
rlr_status rlr_solve_window(const rlr_scenario* sc, const rlr_gmm* prior,
                            const rlr_run_options* opt, int k, char** plan_json_out);

/* Simulates one trace day (0-based index) under receding-horizon control. */
rlr_status rlr_simulate_day(const rlr_scenario* sc, const rlr_gmm* prior,
                            const rlr_traces* traces, int day_index, const rlr_run_options* opt,
                            rlr_report** out);

rlr_status rlr_report_to_json(const rlr_report* report, char** json_out);
/* metric: RLR_METRIC_*; returns NaN on a null report. */
double rlr_report_resilience(const rlr_report* report, int metric);
double rlr_report_spillage_mwh(const rlr_report* report);
double rlr_report_unserved_mwh(const rlr_report* report);
int rlr_report_regulation_events(const rlr_report* report);
void rlr_report_free(rlr_report* report);

/* ---- command-line entry ------------------------------------------------ */
/* Full CLI dispatch (fit, gen-traces, solve-window, simulate, compare).
 * argv excludes the program name. Returns the process exit code:
 * 0 ok, 2 usage error, 3 data error, 4 solver failure. */
int rlr_run_cli(int argc, const char* const* argv);

#ifdef __cplusplus
}
#endif

#endif /* RLRESTORE_H */
