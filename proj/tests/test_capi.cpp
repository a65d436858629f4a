#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rlrestore.h"

#include "rlrestore/gmm.hpp"
#include "rlrestore/scenario_io.hpp"
#include "test_scenarios.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

namespace {

std::filesystem::path temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "rlrestore_capi_test";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string scenario_json() {
    return rlr::io::scenario_to_json(rlrtest::pair_scenario(3));
}

std::string prior_json() { return rlr::gmm::to_json(rlrtest::pair_prior(3)); }

}  // namespace

TEST_CASE("version and error text") {
    CHECK(std::strlen(rlr_version()) > 0);
    CHECK(rlr_last_error() != nullptr);
}

TEST_CASE("null arguments are rejected") {
    CHECK(rlr_gmm_load_file("x.json", nullptr) == RLR_ERR_INVALID_ARGUMENT);
    CHECK(rlr_gmm_from_json(nullptr, nullptr) == RLR_ERR_INVALID_ARGUMENT);
    CHECK(std::strlen(rlr_last_error()) > 0);
    CHECK(rlr_scenario_load_file("x.json", nullptr) == RLR_ERR_INVALID_ARGUMENT);
    CHECK(rlr_traces_load_csv("x.csv", nullptr) == RLR_ERR_INVALID_ARGUMENT);
    CHECK(std::isnan(rlr_report_resilience(nullptr, RLR_METRIC_SERVICE_TIME)));
    CHECK(rlr_report_regulation_events(nullptr) == -1);
    rlr_gmm_free(nullptr);
    rlr_scenario_free(nullptr);
    rlr_traces_free(nullptr);
    rlr_report_free(nullptr);
}

TEST_CASE("missing files and malformed payloads") {
    rlr_gmm* g = nullptr;
    CHECK(rlr_gmm_load_file("/definitely/not/here.json", &g) == RLR_ERR_IO);
    CHECK(g == nullptr);
    CHECK(rlr_gmm_from_json("{", &g) == RLR_ERR_PARSE);
    CHECK(rlr_gmm_from_json("{\"dim\": 1, \"components\": []}", &g) == RLR_ERR_PARSE);
    rlr_scenario* sc = nullptr;
    CHECK(rlr_scenario_from_json("{\"K\": 0}", &sc) == RLR_ERR_PARSE);
}

TEST_CASE("gmm handle round trip") {
    rlr_gmm* g = nullptr;
    REQUIRE(rlr_gmm_from_json(prior_json().c_str(), &g) == RLR_OK);
    CHECK(rlr_gmm_dim(g) == 6);
    CHECK(rlr_gmm_component_count(g) == 2);

    std::vector<double> mean(6);
    REQUIRE(rlr_gmm_mean(g, mean.data()) == RLR_OK);
    CHECK(mean[0] > 0.0);

    char* text = nullptr;
    REQUIRE(rlr_gmm_to_json(g, &text) == RLR_OK);
    rlr_gmm* back = nullptr;
    REQUIRE(rlr_gmm_from_json(text, &back) == RLR_OK);
    CHECK(rlr_gmm_dim(back) == 6);
    rlr_string_free(text);

    const std::string path = (temp_dir() / "g.json").string();
    REQUIRE(rlr_gmm_save_file(g, path.c_str()) == RLR_OK);
    rlr_gmm* loaded = nullptr;
    REQUIRE(rlr_gmm_load_file(path.c_str(), &loaded) == RLR_OK);
    CHECK(rlr_gmm_component_count(loaded) == 2);

    double q = 0.0;
    CHECK(rlr_gmm_quantile1(g, 0.1, &q) == RLR_ERR_INVALID_ARGUMENT);  // not univariate
    rlr_gmm* uni = nullptr;
    REQUIRE(rlr_gmm_from_json(
                "{\"dim\":1,\"components\":[{\"weight\":1.0,\"mean\":[0.0],"
                "\"covariance\":[[1.0]]}]}",
                &uni) == RLR_OK);
    REQUIRE(rlr_gmm_quantile1(uni, 0.5, &q) == RLR_OK);
    CHECK(std::abs(q) < 1e-9);
    CHECK(rlr_gmm_quantile1(uni, 1.5, &q) == RLR_ERR_INVALID_ARGUMENT);

    rlr_gmm_free(g);
    rlr_gmm_free(back);
    rlr_gmm_free(loaded);
    rlr_gmm_free(uni);
}

TEST_CASE("pipeline through the shared library surface") {
    rlr_scenario* sc = nullptr;
    REQUIRE(rlr_scenario_from_json(scenario_json().c_str(), &sc) == RLR_OK);
    CHECK(rlr_scenario_periods(sc) == 3);
    CHECK(rlr_scenario_asset_count(sc) == 2);
    CHECK(rlr_scenario_microgrid_count(sc) == 2);

    char* sc_text = nullptr;
    REQUIRE(rlr_scenario_to_json(sc, &sc_text) == RLR_OK);
    CHECK(std::string(sc_text).find("microgrids") != std::string::npos);
    rlr_string_free(sc_text);

    rlr_gmm* truth = nullptr;
    REQUIRE(rlr_gmm_from_json(prior_json().c_str(), &truth) == RLR_OK);

    rlr_traces* traces = nullptr;
    REQUIRE(rlr_traces_generate(truth, sc, 3, 17, &traces) == RLR_OK);
    CHECK(rlr_traces_day_count(traces) == 3);

    const std::string csv_path = (temp_dir() / "t.csv").string();
    REQUIRE(rlr_traces_save_csv(traces, csv_path.c_str()) == RLR_OK);
    rlr_traces* loaded = nullptr;
    REQUIRE(rlr_traces_load_csv(csv_path.c_str(), &loaded) == RLR_OK);
    CHECK(rlr_traces_day_count(loaded) == 3);

    rlr_gmm* fitted = nullptr;
    REQUIRE(rlr_gmm_fit_traces(loaded, 1, 0, &fitted) == RLR_OK);
    CHECK(rlr_gmm_dim(fitted) == 6);

    rlr_run_options opt;
    rlr_run_options_init(&opt);
    CHECK(opt.formulation == -1);
    opt.mode = RLR_MODE_NETWORKED;

    char* plan = nullptr;
    REQUIRE(rlr_solve_window(sc, truth, &opt, 0, &plan) == RLR_OK);
    CHECK(std::string(plan).find("\"objective\"") != std::string::npos);
    rlr_string_free(plan);
    CHECK(rlr_solve_window(sc, truth, &opt, 99, &plan) == RLR_ERR_INVALID_ARGUMENT);

    rlr_report* report = nullptr;
    REQUIRE(rlr_simulate_day(sc, truth, traces, 0, &opt, &report) == RLR_OK);
    const double service = rlr_report_resilience(report, RLR_METRIC_SERVICE_TIME);
    CHECK(service > 0.0);
    CHECK(rlr_report_spillage_mwh(report) >= 0.0);
    CHECK(rlr_report_unserved_mwh(report) >= 0.0);
    CHECK(rlr_report_regulation_events(report) >= 0);

    char* report_text = nullptr;
    REQUIRE(rlr_report_to_json(report, &report_text) == RLR_OK);
    const auto parsed = rlr::io::report_from_json(report_text);
    CHECK(parsed.resilience_service_time == doctest::Approx(service));
    rlr_string_free(report_text);

    CHECK(rlr_simulate_day(sc, truth, traces, 99, &opt, &report) == RLR_ERR_INVALID_ARGUMENT);

    rlr_report_free(report);
    rlr_gmm_free(fitted);
    rlr_traces_free(loaded);
    rlr_traces_free(traces);
    rlr_gmm_free(truth);
    rlr_scenario_free(sc);
}

TEST_CASE("cli entry point maps exit codes") {
    const char* bad[] = {"mystery"};
    CHECK(rlr_run_cli(1, bad) == 2);
    CHECK(rlr_run_cli(0, nullptr) == 2);
}
