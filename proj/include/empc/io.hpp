#pragma once

// File formats and configuration:
//   - load/PV series as CSV (`timestamp,load_kw,pv_kw`), validated
//     strictly against the scenario's time grid;
//   - scenario configuration as JSON;
//   - run outputs: per-step trace CSV, cost report (machine JSON plus
//     an aligned human table), and a run manifest.
// Numeric CSV/JSON output uses full round-trip precision so reports can
// be re-derived exactly from the emitted files.

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "empc/errors.hpp"
#include "empc/series.hpp"
#include "empc/sim.hpp"
#include "empc/timegrid.hpp"

namespace empc {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kSeriesHeader = "timestamp,load_kw,pv_kw";

namespace detail {

// Shortest-exact is overkill for CSV; 17 significant digits guarantee
// double round-trips.
inline std::string full_precision(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline long long minutes_since_epoch(const CivilDate& d, int minute_of_day) {
  using namespace std::chrono;
  sys_days sd{year_month_day{year{d.year}, month{d.month}, std::chrono::day{d.day}}};
  return static_cast<long long>(sd.time_since_epoch().count()) * 1440LL + minute_of_day;
}

inline long long parse_timestamp_minutes(const std::string& ts) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  char tail = 0;
  if (std::sscanf(ts.c_str(), "%d-%d-%dT%d:%d%c", &y, &mo, &d, &h, &mi, &tail) != 5 ||
      mo < 1 || d < 1 || h < 0 || h > 23 || mi < 0 || mi > 59) {
    throw DataError("malformed timestamp '" + ts + "': expected YYYY-MM-DDTHH:MM");
  }
  CivilDate cd{y, static_cast<unsigned>(mo), static_cast<unsigned>(d)};
  if (!cd.ok()) throw DataError("malformed timestamp '" + ts + "': no such calendar day");
  return minutes_since_epoch(cd, h * 60 + mi);
}

inline std::string format_timestamp_minutes(long long m) {
  using namespace std::chrono;
  year_month_day ymd{sys_days{days{m / 1440}}};
  int rem = static_cast<int>(m % 1440);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), rem / 60,
                rem % 60);
  return buf;
}

inline double parse_kw_field(const std::string& field, const char* what, const std::string& ts) {
  const char* s = field.c_str();
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(s, &end);
  if (end == s || *end != '\0' || field.empty()) {
    throw DataError(std::string("malformed ") + what + " value '" + field + "' at " + ts);
  }
  if (!std::isfinite(v)) {
    throw DataError(std::string(what) + " is not finite at " + ts);
  }
  return v;
}

}  // namespace detail

inline void write_timeseries(const std::string& path, const TimeGrid& g, const SeriesData& s) {
  if (s.load_kw.size() != static_cast<size_t>(g.n_steps) ||
      s.pv_kw.size() != static_cast<size_t>(g.n_steps)) {
    throw DataError("write series: series length does not match the grid");
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << kSeriesHeader << '\n';
  for (long long t = 0; t < g.n_steps; ++t) {
    out << g.timestamp(t) << ',' << detail::full_precision(s.load_kw[static_cast<size_t>(t)])
        << ',' << detail::full_precision(s.pv_kw[static_cast<size_t>(t)]) << '\n';
  }
  if (!out) throw DataError("write series: I/O failure on '" + path + "'");
}

// Reads and validates a series file against the grid: exact header, the
// grid's start timestamp, uniform spacing with no gaps, exact length,
// finite values, load >= 0, PV >= 0 (net load may still be negative).
inline SeriesData load_timeseries(const std::string& path, const TimeGrid& g) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open series file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("series file '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSeriesHeader) {
    throw DataError("series header must be '" + std::string(kSeriesHeader) + "', found '" +
                    line + "'");
  }

  SeriesData s;
  s.load_kw.reserve(static_cast<size_t>(g.n_steps));
  s.pv_kw.reserve(static_cast<size_t>(g.n_steps));
  long long start_min = detail::minutes_since_epoch(g.start, 0);
  long long prev_min = 0;
  long long rows = 0;

  auto split3 = [](const std::string& l, long long line_no) {
    auto p1 = l.find(',');
    auto p2 = p1 == std::string::npos ? std::string::npos : l.find(',', p1 + 1);
    if (p1 == std::string::npos || p2 == std::string::npos ||
        l.find(',', p2 + 1) != std::string::npos) {
      throw DataError("malformed series row " + std::to_string(line_no) +
                      ": expected 3 comma-separated fields");
    }
    return std::array<std::string, 3>{l.substr(0, p1), l.substr(p1 + 1, p2 - p1 - 1),
                                      l.substr(p2 + 1)};
  };

  long long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto [ts, f_load, f_pv] = split3(line, line_no);
    long long m = detail::parse_timestamp_minutes(ts);
    if (rows == 0) {
      if (m != start_min) {
        throw DataError("series must start at " + g.timestamp(0) + ", found " + ts);
      }
    } else {
      long long dm = m - prev_min;
      if (dm <= 0) throw DataError("series timestamps not increasing at " + ts);
      if (dm != g.step_minutes) {
        // A one-off hole is a gap; a consistent wrong delta means the
        // file has a different resolution. Peek one row to tell them apart.
        bool consistent = false;
        std::string next_line;
        while (std::getline(in, next_line)) {
          if (!next_line.empty() && next_line.back() == '\r') next_line.pop_back();
          if (next_line.empty()) continue;
          auto next = split3(next_line, line_no + 1);
          consistent = detail::parse_timestamp_minutes(next[0]) - m == dm;
          break;
        }
        if (dm % g.step_minutes != 0 || consistent) {
          throw DataError("series spacing mismatch at " + ts + ": rows are " +
                          std::to_string(dm) + " min apart, grid expects " +
                          std::to_string(g.step_minutes) + " min");
        }
        long long missing = dm / g.step_minutes - 1;
        std::string first_missing =
            detail::format_timestamp_minutes(prev_min + g.step_minutes);
        throw DataError("series gap: missing row for " + first_missing +
                        (missing > 1 ? " (+" + std::to_string(missing - 1) + " more)" : ""));
      }
    }
    if (rows >= g.n_steps) {
      throw DataError("series length mismatch: more than " + std::to_string(g.n_steps) +
                      " rows for the configured grid");
    }
    double load = detail::parse_kw_field(f_load, "load_kw", ts);
    double pv = detail::parse_kw_field(f_pv, "pv_kw", ts);
    if (load < 0.0) throw DataError("negative load_kw at " + ts);
    if (pv < 0.0) throw DataError("negative pv_kw at " + ts);
    s.load_kw.push_back(load);
    s.pv_kw.push_back(pv);
    prev_min = m;
    ++rows;
  }
  if (rows != g.n_steps) {
    throw DataError("series length mismatch: " + std::to_string(rows) + " rows for a " +
                    std::to_string(g.n_steps) + "-step grid");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Scenario configuration (JSON).

namespace detail {

inline const nlohmann::json& need_obj(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_object()) {
    throw ConfigError(std::string("config: missing section '") + key + "'");
  }
  return *it;
}

inline double need_num(const nlohmann::json& j, const char* section, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw ConfigError(std::string("config: missing numeric key '") + section + "." + key + "'");
  }
  return it->get<double>();
}

inline double opt_num(const nlohmann::json& j, const char* key, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw ConfigError(std::string("config: key '") + key + "' must be a number");
  return it->get<double>();
}

inline std::string need_str(const nlohmann::json& j, const char* section, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw ConfigError(std::string("config: missing string key '") + section + "." + key + "'");
  }
  return it->get<std::string>();
}

inline int hours_to_steps(double hours, int step_minutes, const char* key) {
  double steps = hours * 60.0 / step_minutes;
  double rounded = std::round(steps);
  if (hours <= 0.0 || std::abs(steps - rounded) > 1e-9) {
    throw ConfigError(std::string("config: controller.") + key + " = " +
                      std::to_string(hours) + " h is not a whole number of " +
                      std::to_string(step_minutes) + "-min steps");
  }
  return static_cast<int>(rounded);
}

}  // namespace detail

inline ScenarioConfig parse_config_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  ScenarioConfig cfg;
  if (j.contains("name")) cfg.name = j.at("name").get<std::string>();

  const auto& jt = detail::need_obj(j, "tariff");
  cfg.tariff.r_ec = detail::need_num(jt, "tariff", "r_ec");
  cfg.tariff.r_nc = detail::need_num(jt, "tariff", "r_nc");
  cfg.tariff.r_op = detail::need_num(jt, "tariff", "r_op");

  const auto& jb = detail::need_obj(j, "bess");
  cfg.bess.energy_kwh = detail::need_num(jb, "bess", "energy_kwh");
  cfg.bess.power_kw = detail::need_num(jb, "bess", "power_kw");
  cfg.bess.eta = detail::need_num(jb, "bess", "eta");
  cfg.bess.soc_min = detail::need_num(jb, "bess", "soc_min");
  cfg.bess.soc_max = detail::need_num(jb, "bess", "soc_max");
  cfg.bess.soc_init = detail::opt_num(jb, "soc_init", 0.5);

  const auto& js = detail::need_obj(j, "sim");
  cfg.start_date = detail::need_str(js, "sim", "start_date");
  cfg.n_days = static_cast<int>(detail::need_num(js, "sim", "n_days"));
  cfg.step_minutes = static_cast<int>(detail::opt_num(js, "step_minutes", 15.0));

  const auto& jd = detail::need_obj(j, "data");
  cfg.series_path = detail::need_str(jd, "data", "series_path");

  if (j.contains("initial_peaks")) {
    const auto& jp = j.at("initial_peaks");
    cfg.initial_peaks.nc_kw = detail::opt_num(jp, "nc_kw", 0.0);
    cfg.initial_peaks.op_kw = detail::opt_num(jp, "op_kw", 0.0);
  }

  const auto& jc = detail::need_obj(j, "controller");
  std::string variant = detail::need_str(jc, "controller", "variant");
  std::string tracking = detail::need_str(jc, "controller", "tracking");
  std::string mode = detail::need_str(jc, "controller", "mode");
  if (variant == "trad") {
    cfg.controller.variant = Variant::trad;
  } else if (variant == "proposed") {
    cfg.controller.variant = Variant::proposed;
  } else if (variant == "empc_star") {
    cfg.controller.variant = Variant::empc_star;
  } else {
    throw ConfigError("config: controller.variant must be trad | proposed | empc_star");
  }
  if (tracking == "nt") {
    cfg.controller.tracking = Tracking::nt;
  } else if (tracking == "wt") {
    cfg.controller.tracking = Tracking::wt;
  } else {
    throw ConfigError("config: controller.tracking must be nt | wt");
  }
  HorizonMode hmode;
  if (mode == "shrinking") {
    hmode = HorizonMode::shrinking;
  } else if (mode == "rolling") {
    hmode = HorizonMode::rolling;
  } else {
    throw ConfigError("config: controller.mode must be shrinking | rolling");
  }
  cfg.controller.mpc.mode = hmode;
  cfg.controller.mpc.nominal_length_steps = detail::hours_to_steps(
      detail::need_num(jc, "controller", "t_mpc_hours"), cfg.step_minutes, "t_mpc_hours");
  switch (cfg.controller.variant) {
    case Variant::trad:
      cfg.controller.ref = {};
      break;
    case Variant::proposed:
      cfg.controller.ref.mode = hmode;
      cfg.controller.ref.nominal_length_steps = detail::hours_to_steps(
          detail::need_num(jc, "controller", "t_r_hours"), cfg.step_minutes, "t_r_hours");
      break;
    case Variant::empc_star:
      cfg.controller.ref = {HorizonMode::full_month, 0};
      break;
  }

  // Surface range and combination errors now rather than at run time.
  validate(cfg.tariff);
  validate(cfg.bess);
  TimeGrid g = make_scenario_grid(cfg);
  make_controller(cfg.controller, cfg.tariff, cfg.bess, g);
  return cfg;
}

inline ScenarioConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config_json(j);
}

inline ScenarioConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

// ---------------------------------------------------------------------------
// Run outputs.

inline void write_trace_csv(const std::string& path, const TimeGrid& g,
                            const std::vector<StepRecord>& trace) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << "t,timestamp,u1_kw,u2_kw,x,peak_nc_kw,peak_op_kw,solve_time_s,month_cross\n";
  for (const StepRecord& r : trace) {
    out << r.t << ',' << g.timestamp(r.t) << ',' << detail::full_precision(r.u1_kw) << ','
        << detail::full_precision(r.u2_kw) << ',' << detail::full_precision(r.x_next) << ','
        << detail::full_precision(r.peak_state_after.nc_kw) << ','
        << detail::full_precision(r.peak_state_after.op_kw) << ','
        << detail::full_precision(r.solve_time_s) << ',' << (r.month_cross ? 1 : 0) << '\n';
  }
  if (!out) throw DataError("write trace: I/O failure on '" + path + "'");
}

// Machine-readable report. Deliberately excludes timing so reruns of the
// same configuration produce byte-identical files.
inline nlohmann::json report_to_json(const CostReport& rep) {
  nlohmann::json j;
  j["n_steps"] = rep.n_steps;
  j["annual"] = {{"ncdc", rep.ncdc},
                 {"opdc", rep.opdc},
                 {"energy_cost", rep.energy_cost},
                 {"bess_loss", rep.bess_loss},
                 {"total", rep.annual_cost}};
  nlohmann::json months = nlohmann::json::array();
  for (const MonthCost& m : rep.months) {
    months.push_back({{"month", m.label},
                      {"ncdc", m.ncdc},
                      {"opdc", m.opdc},
                      {"energy_cost", m.energy_cost},
                      {"bess_loss", m.bess_loss},
                      {"total", m.total()},
                      {"peak_nc_kw", m.peak_nc_kw},
                      {"peak_op_kw", m.peak_op_kw},
                      {"partial", m.partial}});
  }
  j["months"] = std::move(months);
  return j;
}

inline std::string report_table(const CostReport& rep) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-9s %15s %15s %15s %15s %15s %s\n", "month", "NCDC($)",
                "OPDC($)", "energy($)", "loss($)", "total($)", "flags");
  out << line;
  auto row = [&](const std::string& label, double nc, double op, double en, double lo,
                 double tot, const char* flags) {
    std::snprintf(line, sizeof line, "%-9s %15.10g %15.10g %15.10g %15.10g %15.10g %s\n",
                  label.c_str(), nc, op, en, lo, tot, flags);
    out << line;
  };
  for (const MonthCost& m : rep.months) {
    row(m.label, m.ncdc, m.opdc, m.energy_cost, m.bess_loss, m.total(),
        m.partial ? "partial" : "");
  }
  row("TOTAL", rep.ncdc, rep.opdc, rep.energy_cost, rep.bess_loss, rep.annual_cost, "");
  return out.str();
}

// Writes trace.csv, report.json, report.txt, and manifest.json into
// out_dir (created if needed); returns the paths written. The manifest
// embeds the configuration snapshot and the wall-clock timings (the one
// output that legitimately varies between reruns).
inline std::vector<std::string> emit_outputs(const SimResult& res, const ScenarioConfig& cfg,
                                             const std::string& out_dir,
                                             const std::string& config_snapshot = "",
                                             double wall_time_s = 0.0) {
  if (res.trace.empty()) throw DataError("emit outputs: empty trace, nothing to report");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<std::string> files;

  std::string trace_path = (fs::path(out_dir) / "trace.csv").string();
  write_trace_csv(trace_path, res.grid, res.trace);
  files.push_back(trace_path);

  std::string report_json_path = (fs::path(out_dir) / "report.json").string();
  {
    std::ofstream out(report_json_path);
    if (!out) throw DataError("cannot open '" + report_json_path + "' for writing");
    out << report_to_json(res.report).dump(2) << '\n';
  }
  files.push_back(report_json_path);

  std::string report_txt_path = (fs::path(out_dir) / "report.txt").string();
  {
    std::ofstream out(report_txt_path);
    if (!out) throw DataError("cannot open '" + report_txt_path + "' for writing");
    out << report_table(res.report);
  }
  files.push_back(report_txt_path);

  std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();
  {
    nlohmann::json m;
    m["scenario"] = cfg.name;
    m["version"] = kVersion;
    if (!config_snapshot.empty()) {
      try {
        m["config"] = nlohmann::json::parse(config_snapshot);
      } catch (const nlohmann::json::parse_error&) {
        m["config"] = config_snapshot;
      }
    }
    m["n_steps"] = res.report.n_steps;
    m["wall_time_s"] = wall_time_s;
    m["total_solve_time_s"] = res.report.total_solve_time_s;
    m["max_solve_time_s"] = res.report.max_solve_time_s;
    m["outputs"] = files;
    std::ofstream out(manifest_path);
    if (!out) throw DataError("cannot open '" + manifest_path + "' for writing");
    out << m.dump(2) << '\n';
  }
  files.push_back(manifest_path);
  return files;
}

}  // namespace empc
