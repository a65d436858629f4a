#include "rlrestore/scenario_io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace rlr::io {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string formulation_name(model::Formulation f) {
    switch (f) {
        case model::Formulation::Ded: return "ded";
        case model::Formulation::Ocdd: return "ocdd";
        case model::Formulation::Persistence: return "persistence";
        case model::Formulation::UpdatedExpectation: return "expectation";
    }
    return "ded";
}

model::Formulation formulation_from(const std::string& s) {
    if (s == "ded") return model::Formulation::Ded;
    if (s == "ocdd") return model::Formulation::Ocdd;
    if (s == "persistence") return model::Formulation::Persistence;
    if (s == "expectation") return model::Formulation::UpdatedExpectation;
    throw UsageError("unknown formulation '" + s +
                     "' (expected ded|ocdd|persistence|expectation)");
}

std::string mode_name(model::Mode m) {
    return m == model::Mode::Standalone ? "standalone" : "networked";
}

model::Mode mode_from(const std::string& s) {
    if (s == "standalone") return model::Mode::Standalone;
    if (s == "networked") return model::Mode::Networked;
    throw UsageError("unknown mode '" + s + "' (expected standalone|networked)");
}

std::string metric_name(model::Metric m) {
    return m == model::Metric::ServiceTime ? "service-time" : "weighted-power";
}

model::Metric metric_from(const std::string& s) {
    if (s == "service-time") return model::Metric::ServiceTime;
    if (s == "weighted-power") return model::Metric::WeightedPower;
    throw UsageError("unknown metric '" + s + "' (expected service-time|weighted-power)");
}

std::string status_name(milp::SolveStatus s) {
    switch (s) {
        case milp::SolveStatus::Optimal: return "optimal";
        case milp::SolveStatus::Infeasible: return "infeasible";
        case milp::SolveStatus::Unbounded: return "unbounded";
        case milp::SolveStatus::GapLimit: return "gap-limit";
        case milp::SolveStatus::SolverFailure: return "solver-failure";
    }
    return "solver-failure";
}

milp::SolveStatus status_from(const std::string& s) {
    if (s == "optimal") return milp::SolveStatus::Optimal;
    if (s == "infeasible") return milp::SolveStatus::Infeasible;
    if (s == "unbounded") return milp::SolveStatus::Unbounded;
    if (s == "gap-limit") return milp::SolveStatus::GapLimit;
    return milp::SolveStatus::SolverFailure;
}

double get_num(const json& j, const char* key, std::optional<double> fallback = {}) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw DataError(std::string("missing field '") + key + "'");
    }
    if (!j[key].is_number()) throw DataError(std::string("field '") + key + "' must be a number");
    return j[key].get<double>();
}

std::vector<double> vec_to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.begin(), v.end());
}

}  // namespace

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::filesystem::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(target.parent_path(), ec);
    }
    const std::filesystem::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open '" + tmp.string() + "' for writing");
        out << content;
        if (!out) throw DataError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) throw DataError("cannot rename '" + tmp.string() + "' to '" + path + "'");
}

model::ScenarioSpec scenario_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("scenario JSON parse error: ") + e.what());
    }
    model::ScenarioSpec sc;
    try {
        sc.periods = static_cast<int>(get_num(doc, "K"));
        sc.tau = get_num(doc, "tau", 1.0);
        sc.alpha = get_num(doc, "alpha", 0.9);
        if (doc.contains("mode")) sc.mode = mode_from(doc["mode"].get<std::string>());
        if (doc.contains("metric")) sc.metric = metric_from(doc["metric"].get<std::string>());
        if (doc.contains("formulation")) {
            sc.formulation = formulation_from(doc["formulation"].get<std::string>());
        }
        sc.monotone_restoration = doc.value("monotone_restoration", false);

        if (doc.contains("fleet")) {
            const auto& fl = doc["fleet"];
            sc.fleet.wind_count = static_cast<int>(get_num(fl, "wind_count", 0.0));
            sc.fleet.solar_count = static_cast<int>(get_num(fl, "solar_count", 0.0));
            if (fl.contains("capacity_mw")) {
                sc.fleet.capacity_mw = fl["capacity_mw"].get<std::vector<double>>();
            }
        }

        if (!doc.contains("microgrids") || !doc["microgrids"].is_array()) {
            throw DataError("scenario needs a 'microgrids' array");
        }
        for (const auto& jm : doc["microgrids"]) {
            model::MicrogridSpec mg;
            mg.name = jm.value("name", "mg" + std::to_string(sc.microgrids.size() + 1));
            for (const auto& jg : jm.value("generators", json::array())) {
                model::GeneratorSpec g;
                g.name = jg.value("name", "");
                g.p_min = get_num(jg, "p_min", 0.0);
                g.p_max = get_num(jg, "p_max");
                g.en_0 = get_num(jg, "en_0");
                g.r_up = jg.contains("r_up") ? get_num(jg, "r_up") : milp::kInf;
                g.r_dn = jg.contains("r_dn") ? get_num(jg, "r_dn") : milp::kInf;
                g.p_prev = get_num(jg, "p_prev", 0.0);
                mg.generators.push_back(std::move(g));
            }
            for (const auto& je : jm.value("esses", json::array())) {
                model::EssSpec e;
                e.name = je.value("name", "");
                e.capacity = get_num(je, "capacity");
                e.soc_min = get_num(je, "soc_min", 0.0);
                e.soc_max = get_num(je, "soc_max", 1.0);
                e.soc_now = get_num(je, "soc_now");
                e.p_ch_max = get_num(je, "p_ch_max");
                e.p_dch_max = get_num(je, "p_dch_max");
                e.eff_ch = get_num(je, "eff_ch", 1.0);
                e.eff_dch = get_num(je, "eff_dch", 1.0);
                e.dch_prev = get_num(je, "dch_prev", 0.0);
                e.ch_prev = get_num(je, "ch_prev", 0.0);
                mg.esses.push_back(std::move(e));
            }
            for (const auto& jl : jm.value("loads", json::array())) {
                model::LoadSpec l;
                l.name = jl.value("name", "");
                l.weight = get_num(jl, "weight");
                if (!jl.contains("demand") || !jl["demand"].is_array()) {
                    throw DataError("load '" + l.name + "' needs a 'demand' array");
                }
                const auto demand = jl["demand"].get<std::vector<double>>();
                l.demand = Eigen::Map<const Eigen::VectorXd>(demand.data(), demand.size());
                mg.loads.push_back(std::move(l));
            }
            if (jm.contains("renewable_ids")) {
                mg.renewable_ids = jm["renewable_ids"].get<std::vector<int>>();
            }
            sc.microgrids.push_back(std::move(mg));
        }
        sc.validate();
    } catch (const json::exception& e) {
        throw DataError(std::string("scenario JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("scenario invalid: ") + e.what());
    }
    return sc;
}

std::string scenario_to_json(const model::ScenarioSpec& sc) {
    ordered_json doc;
    doc["K"] = sc.periods;
    doc["tau"] = sc.tau;
    doc["alpha"] = sc.alpha;
    doc["mode"] = mode_name(sc.mode);
    doc["metric"] = metric_name(sc.metric);
    doc["formulation"] = formulation_name(sc.formulation);
    if (sc.monotone_restoration) doc["monotone_restoration"] = true;
    doc["fleet"] = {{"wind_count", sc.fleet.wind_count},
                    {"solar_count", sc.fleet.solar_count},
                    {"capacity_mw", sc.fleet.capacity_mw}};
    auto& mgs = doc["microgrids"] = ordered_json::array();
    for (const auto& mg : sc.microgrids) {
        ordered_json jm;
        jm["name"] = mg.name;
        auto& jgs = jm["generators"] = ordered_json::array();
        for (const auto& g : mg.generators) {
            ordered_json jg;
            jg["name"] = g.name;
            jg["p_min"] = g.p_min;
            jg["p_max"] = g.p_max;
            jg["en_0"] = g.en_0;
            if (std::isfinite(g.r_up)) jg["r_up"] = g.r_up;
            if (std::isfinite(g.r_dn)) jg["r_dn"] = g.r_dn;
            if (g.p_prev != 0.0) jg["p_prev"] = g.p_prev;
            jgs.push_back(std::move(jg));
        }
        auto& jes = jm["esses"] = ordered_json::array();
        for (const auto& e : mg.esses) {
            ordered_json je;
            je["name"] = e.name;
            je["capacity"] = e.capacity;
            je["soc_min"] = e.soc_min;
            je["soc_max"] = e.soc_max;
            je["soc_now"] = e.soc_now;
            je["p_ch_max"] = e.p_ch_max;
            je["p_dch_max"] = e.p_dch_max;
            je["eff_ch"] = e.eff_ch;
            je["eff_dch"] = e.eff_dch;
            if (e.dch_prev != 0.0) je["dch_prev"] = e.dch_prev;
            if (e.ch_prev != 0.0) je["ch_prev"] = e.ch_prev;
            jes.push_back(std::move(je));
        }
        auto& jls = jm["loads"] = ordered_json::array();
        for (const auto& l : mg.loads) {
            ordered_json jl;
            jl["name"] = l.name;
            jl["weight"] = l.weight;
            jl["demand"] = vec_to_std(l.demand);
            jls.push_back(std::move(jl));
        }
        jm["renewable_ids"] = mg.renewable_ids;
        mgs.push_back(std::move(jm));
    }
    return doc.dump(2);
}

model::ScenarioSpec load_scenario(const std::string& path) {
    return scenario_from_json(read_file(path));
}

std::vector<sim::TraceSet> ingest_csv_traces(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw DataError("trace file '" + path + "' is empty");
    auto strip = [](std::string s) {
        s.erase(std::remove_if(s.begin(), s.end(),
                               [](char c) { return c == ' ' || c == '\r' || c == '\t'; }),
                s.end());
        return s;
    };
    if (strip(line) != "day,period,asset,power_mw") {
        throw DataError("trace file '" + path + "' must start with 'day,period,asset,power_mw'");
    }

    std::map<int, std::map<std::pair<int, int>, double>> by_day;
    int max_period = 0, max_asset = 0;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string s = strip(line);
        if (s.empty()) continue;
        std::istringstream row(s);
        std::string f0, f1, f2, f3;
        if (!std::getline(row, f0, ',') || !std::getline(row, f1, ',') ||
            !std::getline(row, f2, ',') || !std::getline(row, f3, ',')) {
            throw DataError("trace line " + std::to_string(line_no) + ": expected 4 fields");
        }
        int day, period, asset;
        double power;
        try {
            day = std::stoi(f0);
            period = std::stoi(f1);
            asset = std::stoi(f2);
            power = std::stod(f3);
        } catch (const std::exception&) {
            throw DataError("trace line " + std::to_string(line_no) + ": malformed value");
        }
        if (day < 1 || period < 1 || asset < 1) {
            throw DataError("trace line " + std::to_string(line_no) +
                            ": day/period/asset must be >= 1");
        }
        if (!std::isfinite(power) || power < 0.0) {
            throw DataError("trace line " + std::to_string(line_no) +
                            ": power must be finite and nonnegative");
        }
        const auto key = std::make_pair(period, asset);
        auto& cells = by_day[day];
        if (cells.count(key)) {
            throw DataError("duplicate trace row for day " + std::to_string(day) + ", period " +
                            std::to_string(period) + ", asset " + std::to_string(asset));
        }
        cells[key] = power;
        max_period = std::max(max_period, period);
        max_asset = std::max(max_asset, asset);
    }
    if (by_day.empty()) throw DataError("trace file '" + path + "' has no data rows");

    std::vector<sim::TraceSet> traces;
    for (const auto& [day, cells] : by_day) {
        if (static_cast<int>(cells.size()) != max_period * max_asset) {
            throw DataError("day " + std::to_string(day) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(max_period * max_asset));
        }
        sim::TraceSet ts;
        ts.provenance = "file:" + path + " day " + std::to_string(day);
        ts.power.resize(max_period, max_asset);
        for (const auto& [key, power] : cells) {
            ts.power(key.first - 1, key.second - 1) = power;
        }
        traces.push_back(std::move(ts));
    }
    return traces;
}

std::string traces_to_csv(const std::vector<sim::TraceSet>& traces) {
    std::ostringstream os;
    os.precision(17);
    os << "day,period,asset,power_mw\n";
    for (std::size_t d = 0; d < traces.size(); ++d) {
        const auto& power = traces[d].power;
        for (Eigen::Index t = 0; t < power.rows(); ++t) {
            for (Eigen::Index a = 0; a < power.cols(); ++a) {
                os << (d + 1) << "," << (t + 1) << "," << (a + 1) << "," << power(t, a) << "\n";
            }
        }
    }
    return os.str();
}

void write_csv_traces(const std::string& path, const std::vector<sim::TraceSet>& traces) {
    write_file_atomic(path, traces_to_csv(traces));
}

gmm::Dataset traces_to_dataset(const std::vector<sim::TraceSet>& traces) {
    if (traces.empty()) throw DataError("no trace days to fit on");
    const Eigen::Index periods = traces[0].power.rows();
    const Eigen::Index assets = traces[0].power.cols();
    Eigen::MatrixXd rows(traces.size(), periods * assets);
    for (std::size_t d = 0; d < traces.size(); ++d) {
        if (traces[d].power.rows() != periods || traces[d].power.cols() != assets) {
            throw DataError("trace days disagree on shape");
        }
        for (Eigen::Index t = 0; t < periods; ++t) {
            for (Eigen::Index a = 0; a < assets; ++a) {
                rows(d, t * assets + a) = traces[d].power(t, a);
            }
        }
    }
    return gmm::Dataset(std::move(rows));
}

namespace {

ordered_json report_json(const sim::SimulationReport& r) {
    ordered_json doc;
    doc["label"] = r.label;
    doc["mode"] = mode_name(r.mode);
    doc["formulation"] = formulation_name(r.formulation);
    doc["metric"] = metric_name(r.metric);
    doc["alpha"] = r.alpha;
    doc["no_update"] = r.no_update;
    doc["totals"] = {{"resilience_service_time", r.resilience_service_time},
                     {"resilience_weighted_power", r.resilience_weighted_power},
                     {"spillage_mwh", r.spillage_mwh},
                     {"unserved_mwh", r.unserved_mwh},
                     {"regulation_events", r.regulation_events},
                     {"infeasible_windows", r.infeasible_windows}};
    auto& periods = doc["periods"] = ordered_json::array();
    for (const auto& p : r.periods) {
        ordered_json jp;
        jp["period"] = p.period;
        jp["window_status"] = status_name(p.window_status);
        jp["window_objective"] = p.window_objective;
        jp["committed"] = p.committed;
        jp["served"] = p.served;
        jp["gen_power"] = p.gen_power;
        jp["ess_discharge"] = p.ess_discharge;
        jp["ess_charge"] = p.ess_charge;
        jp["soc"] = p.soc;
        jp["realized"] = vec_to_std(p.realized);
        jp["adjustment"] = {{"regulation_up", p.adjustment.regulation_up},
                            {"spillage", p.adjustment.spillage},
                            {"unserved_power", p.adjustment.unserved_power},
                            {"unserved_energy", p.adjustment.unserved_energy},
                            {"shortfall", p.adjustment.shortfall_flag},
                            {"shed_loads", p.adjustment.shed_loads}};
        jp["restored_demand_mw"] = p.restored_demand_mw;
        jp["adequacy_rhs"] = p.adequacy_rhs;
        periods.push_back(std::move(jp));
    }
    return doc;
}

sim::SimulationReport report_from(const json& doc) {
    sim::SimulationReport r;
    try {
        r.label = doc.value("label", "");
        r.mode = mode_from(doc.value("mode", "standalone"));
        r.formulation = formulation_from(doc.value("formulation", "ded"));
        r.metric = metric_from(doc.value("metric", "service-time"));
        r.alpha = doc.value("alpha", 0.9);
        r.no_update = doc.value("no_update", false);
        const auto& totals = doc.at("totals");
        r.resilience_service_time = totals.at("resilience_service_time").get<double>();
        r.resilience_weighted_power = totals.at("resilience_weighted_power").get<double>();
        r.spillage_mwh = totals.at("spillage_mwh").get<double>();
        r.unserved_mwh = totals.at("unserved_mwh").get<double>();
        r.regulation_events = totals.at("regulation_events").get<int>();
        r.infeasible_windows = totals.at("infeasible_windows").get<int>();
        for (const auto& jp : doc.at("periods")) {
            sim::PeriodRecord p;
            p.period = jp.at("period").get<int>();
            p.window_status = status_from(jp.at("window_status").get<std::string>());
            p.window_objective = jp.at("window_objective").get<double>();
            p.committed = jp.at("committed").get<std::vector<std::uint8_t>>();
            p.served = jp.at("served").get<std::vector<std::uint8_t>>();
            p.gen_power = jp.at("gen_power").get<std::vector<double>>();
            p.ess_discharge = jp.at("ess_discharge").get<std::vector<double>>();
            p.ess_charge = jp.at("ess_charge").get<std::vector<double>>();
            p.soc = jp.at("soc").get<std::vector<double>>();
            const auto realized = jp.at("realized").get<std::vector<double>>();
            p.realized = Eigen::Map<const Eigen::VectorXd>(realized.data(), realized.size());
            const auto& ja = jp.at("adjustment");
            p.adjustment.regulation_up = ja.at("regulation_up").get<std::vector<double>>();
            p.adjustment.spillage = ja.at("spillage").get<double>();
            p.adjustment.unserved_power = ja.at("unserved_power").get<double>();
            p.adjustment.unserved_energy = ja.at("unserved_energy").get<double>();
            p.adjustment.shortfall_flag = ja.at("shortfall").get<bool>();
            p.adjustment.shed_loads = ja.at("shed_loads").get<std::vector<int>>();
            p.restored_demand_mw = jp.at("restored_demand_mw").get<double>();
            p.adequacy_rhs = jp.at("adequacy_rhs").get<double>();
            r.periods.push_back(std::move(p));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("report JSON: ") + e.what());
    }
    return r;
}

}  // namespace

std::string report_to_json(const sim::SimulationReport& report) {
    return report_json(report).dump(2);
}

sim::SimulationReport report_from_json(const std::string& text) {
    try {
        return report_from(json::parse(text));
    } catch (const json::exception& e) {
        throw DataError(std::string("report JSON parse error: ") + e.what());
    }
}

std::string reports_to_json(const std::vector<sim::SimulationReport>& reports) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : reports) arr.push_back(report_json(r));
    return arr.dump(2);
}

std::vector<sim::SimulationReport> reports_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("report JSON parse error: ") + e.what());
    }
    std::vector<sim::SimulationReport> out;
    if (doc.is_array()) {
        for (const auto& item : doc) out.push_back(report_from(item));
    } else {
        out.push_back(report_from(doc));
    }
    if (out.empty()) throw DataError("report file holds no reports");
    return out;
}

std::string report_csv_series(const std::vector<sim::SimulationReport>& reports) {
    std::ostringstream os;
    os.precision(17);
    os << "day,period,window_status,window_objective,restored_count,restored_demand_mw,"
          "scheduled_gen_mw,ess_net_mw,realized_renewable_mw,regulation_mw,spillage_mw,"
          "unserved_mwh,shortfall\n";
    for (std::size_t d = 0; d < reports.size(); ++d) {
        for (const auto& p : reports[d].periods) {
            double gen = 0.0, reg = 0.0, ess = 0.0;
            for (double v : p.gen_power) gen += v;
            for (double v : p.adjustment.regulation_up) reg += v;
            for (double v : p.ess_discharge) ess += v;
            for (double v : p.ess_charge) ess += v;
            int restored = 0;
            for (auto u : p.committed) restored += u;
            os << (d + 1) << "," << p.period << "," << status_name(p.window_status) << ","
               << p.window_objective << "," << restored << "," << p.restored_demand_mw << ","
               << gen << "," << ess << "," << p.realized.sum() << "," << reg << ","
               << p.adjustment.spillage << "," << p.adjustment.unserved_energy << ","
               << (p.adjustment.shortfall_flag ? 1 : 0) << "\n";
        }
    }
    return os.str();
}

std::string report_summary_text(const std::vector<sim::SimulationReport>& reports) {
    std::ostringstream os;
    os << "day  resilience  weighted  spill_mwh  unserved_mwh  regulation  infeasible\n";
    double st = 0.0, wp = 0.0, sp = 0.0, un = 0.0;
    int reg = 0, inf = 0;
    for (std::size_t d = 0; d < reports.size(); ++d) {
        const auto& r = reports[d];
        os << (d + 1) << "  " << r.resilience_service_time << "  "
           << r.resilience_weighted_power << "  " << r.spillage_mwh << "  " << r.unserved_mwh
           << "  " << r.regulation_events << "  " << r.infeasible_windows << "\n";
        st += r.resilience_service_time;
        wp += r.resilience_weighted_power;
        sp += r.spillage_mwh;
        un += r.unserved_mwh;
        reg += r.regulation_events;
        inf += r.infeasible_windows;
    }
    os << "total  " << st << "  " << wp << "  " << sp << "  " << un << "  " << reg << "  " << inf
       << "\n";
    if (!reports.empty()) {
        os << "mean resilience " << st / double(reports.size()) << " over " << reports.size()
           << " day(s)\n";
    }
    return os.str();
}

std::string comparison_to_json(const sim::ComparisonTable& table) {
    ordered_json doc;
    doc["labels"] = table.labels;
    auto& rows = doc["per_day_resilience"] = ordered_json::array();
    for (Eigen::Index d = 0; d < table.resilience.rows(); ++d) {
        rows.push_back(vec_to_std(table.resilience.row(d)));
    }
    doc["mean_resilience"] = table.mean_resilience;
    doc["total_spillage_mwh"] = table.total_spillage_mwh;
    doc["total_unserved_mwh"] = table.total_unserved_mwh;
    doc["regulation_events"] = table.regulation_events;
    doc["delta_vs_first"] = table.delta_vs_first;
    doc["win_rate_vs_first"] = table.win_rate_vs_first;
    return doc.dump(2);
}

std::string comparison_text(const sim::ComparisonTable& table) {
    std::ostringstream os;
    os << "label  mean_resilience  delta_vs_first  win_rate  spill_mwh  unserved_mwh  "
          "regulation\n";
    for (std::size_t r = 0; r < table.labels.size(); ++r) {
        os << table.labels[r] << "  " << table.mean_resilience[r] << "  "
           << table.delta_vs_first[r] << "  " << table.win_rate_vs_first[r] << "  "
           << table.total_spillage_mwh[r] << "  " << table.total_unserved_mwh[r] << "  "
           << table.regulation_events[r] << "\n";
    }
    return os.str();
}

void emit_report(const std::vector<sim::SimulationReport>& reports, const std::string& out_dir) {
    const std::filesystem::path dir(out_dir);
    write_file_atomic((dir / "reports.json").string(), reports_to_json(reports));
    write_file_atomic((dir / "series.csv").string(), report_csv_series(reports));
    write_file_atomic((dir / "summary.txt").string(), report_summary_text(reports));
}

void emit_comparison(const sim::ComparisonTable& table, const std::string& out_dir) {
    const std::filesystem::path dir(out_dir);
    write_file_atomic((dir / "comparison.json").string(), comparison_to_json(table));
    write_file_atomic((dir / "comparison.txt").string(), comparison_text(table));
}

namespace {

struct RawArgs {
    std::string scenario, prior, traces, out, formulation, mode, metric, label, lp_out, config;
    double alpha = -1.0;
    int components = 5;
    std::uint64_t seed = 0;
    int days = 1;
    int window_k = 0;
    int day_index = 0;
    bool no_update = false;
    std::vector<std::string> reports, labels;
};

}  // namespace

RunConfig parse_config(const std::vector<std::string>& args) {
    CLI::App app{"risk-limiting microgrid load restoration"};
    app.require_subcommand(1);

    RawArgs raw;
    std::map<std::string, CLI::App*> subs;
    std::map<CLI::App*, std::map<std::string, CLI::Option*>> opts;

    auto add_common = [&](CLI::App* sub) {
        auto& table = opts[sub];
        table["config"] = sub->add_option("--config", raw.config);
        table["scenario"] = sub->add_option("--scenario", raw.scenario);
        table["prior"] = sub->add_option("--prior", raw.prior);
        table["traces"] = sub->add_option("--traces", raw.traces);
        table["out"] = sub->add_option("--out", raw.out);
        table["alpha"] = sub->add_option("--alpha", raw.alpha);
        table["components"] = sub->add_option("--components", raw.components);
        table["seed"] = sub->add_option("--seed", raw.seed);
        table["formulation"] = sub->add_option("--formulation", raw.formulation);
        table["mode"] = sub->add_option("--mode", raw.mode);
        table["metric"] = sub->add_option("--metric", raw.metric);
        table["no_update"] = sub->add_flag("--no-update", raw.no_update);
        table["days"] = sub->add_option("--days", raw.days);
        table["k"] = sub->add_option("--k", raw.window_k);
        table["day"] = sub->add_option("--day", raw.day_index);
        table["label"] = sub->add_option("--label", raw.label);
        table["lp_out"] = sub->add_option("--lp-out", raw.lp_out);
        table["reports"] = sub->add_option("--reports", raw.reports)->take_all();
        table["labels"] = sub->add_option("--labels", raw.labels)->take_all();
    };

    for (const char* name : {"fit", "gen-traces", "solve-window", "simulate", "compare"}) {
        CLI::App* sub = app.add_subcommand(name);
        subs[name] = sub;
        add_common(sub);
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    CLI::App* active = nullptr;
    std::string active_name;
    for (auto& [name, sub] : subs) {
        if (sub->parsed()) {
            active = sub;
            active_name = name;
        }
    }
    if (active == nullptr) throw UsageError("no command given");
    auto& table = opts[active];

    // config file supplies defaults for flags not present on the line
    bool alpha_from_config = false;
    bool day_from_config = false;
    if (table["config"]->count() > 0) {
        json doc;
        try {
            doc = json::parse(read_file(raw.config));
        } catch (const json::exception& e) {
            throw UsageError(std::string("config file parse error: ") + e.what());
        } catch (const DataError& e) {
            throw UsageError(e.what());
        }
        if (!doc.is_object()) throw UsageError("config file must hold a JSON object");
        for (const auto& [key, value] : doc.items()) {
            auto it = table.find(key);
            if (it == table.end() || key == "config") {
                throw UsageError("unknown config key '" + key + "'");
            }
            if (it->second->count() > 0) continue;  // flags win
            if (key == "alpha") alpha_from_config = true;
            if (key == "day") day_from_config = true;
            if (key == "scenario") raw.scenario = value.get<std::string>();
            else if (key == "prior") raw.prior = value.get<std::string>();
            else if (key == "traces") raw.traces = value.get<std::string>();
            else if (key == "out") raw.out = value.get<std::string>();
            else if (key == "alpha") raw.alpha = value.get<double>();
            else if (key == "components") raw.components = value.get<int>();
            else if (key == "seed") raw.seed = value.get<std::uint64_t>();
            else if (key == "formulation") raw.formulation = value.get<std::string>();
            else if (key == "mode") raw.mode = value.get<std::string>();
            else if (key == "metric") raw.metric = value.get<std::string>();
            else if (key == "no_update") raw.no_update = value.get<bool>();
            else if (key == "days") raw.days = value.get<int>();
            else if (key == "k") raw.window_k = value.get<int>();
            else if (key == "day") raw.day_index = value.get<int>();
            else if (key == "label") raw.label = value.get<std::string>();
            else if (key == "lp_out") raw.lp_out = value.get<std::string>();
            else if (key == "reports") raw.reports = value.get<std::vector<std::string>>();
            else if (key == "labels") raw.labels = value.get<std::vector<std::string>>();
        }
    }

    RunConfig cfg;
    if (active_name == "fit") cfg.command = Command::Fit;
    else if (active_name == "gen-traces") cfg.command = Command::GenTraces;
    else if (active_name == "solve-window") cfg.command = Command::SolveWindow;
    else if (active_name == "simulate") cfg.command = Command::Simulate;
    else cfg.command = Command::Compare;

    cfg.scenario_path = raw.scenario;
    cfg.prior_path = raw.prior;
    cfg.traces_path = raw.traces;
    cfg.out_path = raw.out;
    cfg.report_paths = raw.reports;
    cfg.labels = raw.labels;
    cfg.components = raw.components;
    cfg.seed = raw.seed;
    cfg.no_update = raw.no_update;
    cfg.days = raw.days;
    cfg.window_k = raw.window_k;
    cfg.lp_out = raw.lp_out;
    cfg.label = raw.label;
    if (table["day"]->count() > 0 || day_from_config) cfg.day_index = raw.day_index;
    if (table["alpha"]->count() > 0 || alpha_from_config) cfg.alpha = raw.alpha;
    if (!raw.formulation.empty()) cfg.formulation = formulation_from(raw.formulation);
    if (!raw.mode.empty()) cfg.mode = mode_from(raw.mode);
    if (!raw.metric.empty()) cfg.metric = metric_from(raw.metric);

    if (cfg.alpha && !(*cfg.alpha > 0.5 && *cfg.alpha < 1.0)) {
        throw UsageError("alpha must lie in (0.5, 1), got " + fmt(*cfg.alpha));
    }
    if (cfg.components < 1) throw UsageError("components must be >= 1");
    if (cfg.days < 1) throw UsageError("days must be >= 1");
    if (cfg.day_index && *cfg.day_index < 1) throw UsageError("day must be >= 1");

    auto need = [](const std::string& value, const char* flag) {
        if (value.empty()) {
            throw UsageError(std::string("missing required ") + flag + " path");
        }
    };
    switch (cfg.command) {
        case Command::Fit:
            need(cfg.traces_path, "--traces");
            need(cfg.out_path, "--out");
            break;
        case Command::GenTraces:
            need(cfg.scenario_path, "--scenario");
            need(cfg.prior_path, "--prior");
            need(cfg.out_path, "--out");
            break;
        case Command::SolveWindow:
            need(cfg.scenario_path, "--scenario");
            break;
        case Command::Simulate:
            need(cfg.scenario_path, "--scenario");
            need(cfg.prior_path, "--prior");
            need(cfg.traces_path, "--traces");
            need(cfg.out_path, "--out");
            break;
        case Command::Compare:
            if (cfg.report_paths.empty()) throw UsageError("missing required --reports paths");
            need(cfg.out_path, "--out");
            break;
    }
    return cfg;
}

namespace {

model::ScenarioSpec scenario_with_overrides(const RunConfig& cfg) {
    model::ScenarioSpec sc = load_scenario(cfg.scenario_path);
    if (cfg.alpha) sc.alpha = *cfg.alpha;
    if (cfg.formulation) sc.formulation = *cfg.formulation;
    if (cfg.mode) sc.mode = *cfg.mode;
    if (cfg.metric) sc.metric = *cfg.metric;
    sc.validate();
    return sc;
}

gmm::Gmm load_prior(const std::string& path) {
    try {
        return gmm::from_json(read_file(path));
    } catch (const std::invalid_argument& e) {
        throw DataError("prior '" + path + "': " + e.what());
    }
}

int cmd_fit(const RunConfig& cfg) {
    const auto traces = ingest_csv_traces(cfg.traces_path);
    const gmm::Dataset data = traces_to_dataset(traces);
    if (!cfg.scenario_path.empty()) {
        const auto sc = load_scenario(cfg.scenario_path);
        if (sc.fleet_layout().flat_dim() != data.dim()) {
            throw DataError("trace dimension " + std::to_string(data.dim()) +
                            " does not match the scenario fleet dimension " +
                            std::to_string(sc.fleet_layout().flat_dim()));
        }
    }
    if (data.size() < cfg.components) {
        throw DataError("need at least " + std::to_string(cfg.components) + " trace days to fit " +
                        std::to_string(cfg.components) + " components");
    }
    gmm::FitConfig fit_cfg;
    fit_cfg.seed = cfg.seed;
    const gmm::FitResult res = gmm::fit_detailed(data, cfg.components, fit_cfg);
    write_file_atomic(cfg.out_path, gmm::to_json(res.model));
    std::cout << "fit " << cfg.components << " components on " << data.size() << " days, dim "
              << data.dim() << ", log-likelihood " << res.log_likelihood_trace.back()
              << ", iterations " << res.iterations << (res.converged ? "" : " (not converged)")
              << "\n";
    return 0;
}

int cmd_gen_traces(const RunConfig& cfg) {
    const auto sc = scenario_with_overrides(cfg);
    const auto truth = load_prior(cfg.prior_path);
    const auto layout = sc.fleet_layout();
    if (truth.dim() != layout.flat_dim()) {
        throw DataError("ground-truth dimension " + std::to_string(truth.dim()) +
                        " does not match the scenario fleet dimension " +
                        std::to_string(layout.flat_dim()));
    }
    const auto traces =
        sim::generate_traces(truth, layout, sc.fleet.capacity_mw, cfg.days, cfg.seed);
    write_csv_traces(cfg.out_path, traces);
    std::cout << "wrote " << traces.size() << " day(s) to " << cfg.out_path << "\n";
    return 0;
}

ordered_json plan_json(const model::BuiltWindow& built, const milp::MilpSolution& sol,
                       const model::ScenarioSpec& sc, int k, double seconds) {
    ordered_json doc;
    doc["k"] = k;
    doc["status"] = status_name(sol.status);
    doc["objective"] = sol.objective;
    doc["gap"] = sol.gap;
    doc["nodes"] = sol.node_count;
    doc["simplex_iterations"] = sol.iterations;
    doc["solve_seconds"] = seconds;
    doc["fallback_feasible"] = built.fallback_feasible;
    auto& rhs = doc["period_rhs"] = ordered_json::array();
    for (const auto& row : built.period_rhs) rhs.push_back(row);
    doc["horizon_rhs"] = built.horizon_rhs;
    if ((sol.status == milp::SolveStatus::Optimal ||
         sol.status == milp::SolveStatus::GapLimit) &&
        sol.values.size() >= built.layout.total_vars()) {
        const auto plan = model::extract_plan(built, sol, sc, k);
        auto& periods = doc["periods"] = ordered_json::array();
        for (int t = k + 1; t <= sc.periods; ++t) {
            const int i = t - k - 1;
            ordered_json jp;
            jp["period"] = t;
            jp["restored"] = plan.restored[i];
            jp["gen_power"] = plan.gen_power[i];
            jp["ess_discharge"] = plan.ess_discharge[i];
            jp["ess_charge"] = plan.ess_charge[i];
            jp["soc"] = plan.soc[i];
            periods.push_back(std::move(jp));
        }
    }
    return doc;
}

}  // namespace

std::string solve_window_json(const model::ScenarioSpec& sc, const gmm::Gmm* prior, int k,
                              const milp::MilpOptions& milp_opt) {
    sc.validate();
    if (k < 0 || k >= sc.periods) throw UsageError("window start k must lie in [0, K)");
    std::optional<unc::UncertaintyState> us;
    if (sc.fleet.wind_count + sc.fleet.solar_count > 0) {
        if (prior == nullptr) {
            throw DataError("a prior is required when the scenario owns renewable assets");
        }
        us.emplace(sc.fleet_layout(), *prior);
    }
    const auto state = model::OperatingState::initial(sc);
    const auto built = model::build_window(sc, us ? &*us : nullptr, k, state);
    const auto start = std::chrono::steady_clock::now();
    const auto sol = milp::solve_milp(built.model, milp_opt);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (sol.status == milp::SolveStatus::SolverFailure) {
        throw SolverError("window solve failed numerically");
    }
    return plan_json(built, sol, sc, k, seconds).dump(2);
}

namespace {

int cmd_solve_window(const RunConfig& cfg) {
    const auto sc = scenario_with_overrides(cfg);
    if (cfg.window_k < 0 || cfg.window_k >= sc.periods) {
        throw UsageError("window start k must lie in [0, K)");
    }

    std::optional<unc::UncertaintyState> us;
    if (sc.fleet.wind_count + sc.fleet.solar_count > 0) {
        if (cfg.prior_path.empty()) {
            throw UsageError("missing required --prior path (scenario has renewable assets)");
        }
        const auto prior = load_prior(cfg.prior_path);
        us.emplace(sc.fleet_layout(), prior);
        if (cfg.window_k > 0) {
            if (cfg.traces_path.empty()) {
                throw UsageError("--k > 0 needs --traces to supply the observed periods");
            }
            const auto traces = ingest_csv_traces(cfg.traces_path);
            const int day = cfg.day_index.value_or(1);
            if (day < 1 || day > static_cast<int>(traces.size())) {
                throw DataError("trace day " + std::to_string(day) + " out of range");
            }
            for (int k = 1; k <= cfg.window_k; ++k) {
                us = unc::ingest_observation(*us, k, traces[day - 1].power.row(k - 1));
            }
        }
    }

    const auto state = model::OperatingState::initial(sc);
    const auto built =
        model::build_window(sc, us ? &*us : nullptr, cfg.window_k, state);
    if (!cfg.lp_out.empty()) write_file_atomic(cfg.lp_out, milp::to_lp_format(built.model));

    const auto start = std::chrono::steady_clock::now();
    const auto sol = milp::solve_milp(built.model);
    const double seconds = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - start).count();
    if (sol.status == milp::SolveStatus::SolverFailure) {
        throw SolverError("window solve failed numerically");
    }

    const std::string text = plan_json(built, sol, sc, cfg.window_k, seconds).dump(2);
    if (cfg.out_path.empty()) {
        std::cout << text << "\n";
    } else {
        write_file_atomic(cfg.out_path, text);
        std::cout << "window k=" << cfg.window_k << " status " << status_name(sol.status)
                  << " objective " << sol.objective << " in " << seconds << "s\n";
    }
    return 0;
}

int cmd_simulate(const RunConfig& cfg) {
    const auto sc = scenario_with_overrides(cfg);
    const auto prior = load_prior(cfg.prior_path);
    if (prior.dim() != sc.fleet_layout().flat_dim()) {
        throw DataError("prior dimension " + std::to_string(prior.dim()) +
                        " does not match the scenario fleet dimension " +
                        std::to_string(sc.fleet_layout().flat_dim()));
    }
    auto traces = ingest_csv_traces(cfg.traces_path);
    if (cfg.day_index) {
        const int day = *cfg.day_index;
        if (day < 1 || day > static_cast<int>(traces.size())) {
            throw DataError("trace day " + std::to_string(day) + " out of range (file has " +
                            std::to_string(traces.size()) + ")");
        }
        traces = {traces[day - 1]};
    }

    sim::SimOptions opt;
    opt.no_update = cfg.no_update;
    opt.label = cfg.label.empty() ? formulation_name(sc.formulation) + "/" + mode_name(sc.mode) +
                                        (cfg.no_update ? "/no-update" : "")
                                  : cfg.label;
    std::vector<sim::SimulationReport> reports;
    for (std::size_t d = 0; d < traces.size(); ++d) {
        reports.push_back(sim::run(sc, prior, traces[d], opt));
        std::cout << "day " << (d + 1) << ": resilience "
                  << reports.back().resilience_service_time << ", spillage "
                  << reports.back().spillage_mwh << " MWh, regulation events "
                  << reports.back().regulation_events << "\n";
    }
    emit_report(reports, cfg.out_path);
    std::cout << report_summary_text(reports);
    return 0;
}

int cmd_compare(const RunConfig& cfg) {
    if (!cfg.labels.empty() && cfg.labels.size() != cfg.report_paths.size()) {
        throw UsageError("--labels must match --reports in count");
    }
    std::vector<std::pair<std::string, std::vector<sim::SimulationReport>>> runs;
    for (std::size_t i = 0; i < cfg.report_paths.size(); ++i) {
        auto reports = reports_from_json(read_file(cfg.report_paths[i]));
        std::string label;
        if (!cfg.labels.empty()) {
            label = cfg.labels[i];
        } else if (!reports[0].label.empty()) {
            label = reports[0].label;
        } else {
            label = std::filesystem::path(cfg.report_paths[i]).stem().string();
        }
        runs.emplace_back(std::move(label), std::move(reports));
    }
    sim::ComparisonTable table;
    try {
        table = sim::compare(runs);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
    emit_comparison(table, cfg.out_path);
    std::cout << comparison_text(table);
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    RunConfig cfg;
    try {
        cfg = parse_config(args);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }
    try {
        switch (cfg.command) {
            case Command::Fit: return cmd_fit(cfg);
            case Command::GenTraces: return cmd_gen_traces(cfg);
            case Command::SolveWindow: return cmd_solve_window(cfg);
            case Command::Simulate: return cmd_simulate(cfg);
            case Command::Compare: return cmd_compare(cfg);
        }
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
}

}  // namespace rlr::io
