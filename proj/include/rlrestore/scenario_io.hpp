#pragma once

#include "rlrestore/gmm.hpp"
#include "rlrestore/restoration.hpp"
#include "rlrestore/simulate.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rlr::io {

// Error taxonomy carried to CLI exit codes: usage 2, data 3, solver 4.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Command { Fit, GenTraces, SolveWindow, Simulate, Compare };

struct RunConfig {
    Command command = Command::Simulate;
    std::string scenario_path;
    std::string prior_path;
    std::string traces_path;
    std::string out_path;
    std::vector<std::string> report_paths;  // compare inputs
    std::vector<std::string> labels;
    std::optional<double> alpha;
    int components = 5;
    std::uint64_t seed = 0;
    std::optional<model::Formulation> formulation;
    std::optional<model::Mode> mode;
    std::optional<model::Metric> metric;
    bool no_update = false;
    int days = 1;
    int window_k = 0;
    std::optional<int> day_index;  // restrict simulate to one trace day
    std::string lp_out;
    std::string label;
};

// Parses CLI arguments (without the program name). `--config file.json`
// supplies defaults for any flag not given on the command line; unknown
// keys in the file are rejected. Throws UsageError.
RunConfig parse_config(const std::vector<std::string>& args);

model::ScenarioSpec scenario_from_json(const std::string& text);
std::string scenario_to_json(const model::ScenarioSpec& sc);
model::ScenarioSpec load_scenario(const std::string& path);

// Trace CSV: header `day,period,asset,power_mw`; day/period/asset are
// 1-based; every (period, asset) cell of every day must be present.
std::vector<sim::TraceSet> ingest_csv_traces(const std::string& path);
std::string traces_to_csv(const std::vector<sim::TraceSet>& traces);
void write_csv_traces(const std::string& path, const std::vector<sim::TraceSet>& traces);

// Trace days as flat rows (period-major), the shape the fitter consumes.
gmm::Dataset traces_to_dataset(const std::vector<sim::TraceSet>& traces);

std::string report_to_json(const sim::SimulationReport& report);
sim::SimulationReport report_from_json(const std::string& text);
std::string reports_to_json(const std::vector<sim::SimulationReport>& reports);
std::vector<sim::SimulationReport> reports_from_json(const std::string& text);

std::string report_csv_series(const std::vector<sim::SimulationReport>& reports);
std::string report_summary_text(const std::vector<sim::SimulationReport>& reports);
std::string comparison_to_json(const sim::ComparisonTable& table);
std::string comparison_text(const sim::ComparisonTable& table);

// Writes reports.json, series.csv and summary.txt into out_dir.
void emit_report(const std::vector<sim::SimulationReport>& reports, const std::string& out_dir);
// Writes comparison.json and comparison.txt into out_dir.
void emit_comparison(const sim::ComparisonTable& table, const std::string& out_dir);

std::string read_file(const std::string& path);
// Temp-file-plus-rename so readers never observe partial content.
void write_file_atomic(const std::string& path, const std::string& content);

// Build + solve one window starting after period k from the initial
// operating state and serialize the plan. prior may be null only when the
// scenario owns no renewable assets. Throws SolverError on numerical
// failure.
std::string solve_window_json(const model::ScenarioSpec& sc, const gmm::Gmm* prior, int k,
                              const milp::MilpOptions& milp_opt);

// Full command dispatch; returns the process exit code and reports errors
// on stderr. Never throws.
int run_cli(const std::vector<std::string>& args);

}  // namespace rlr::io
