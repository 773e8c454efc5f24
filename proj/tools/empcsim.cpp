// Command-line front end: run one scenario, compare a case matrix,
// generate synthetic data, or dump a subproblem LP for inspection.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 solver failure, 1 anything else. EMPCSIM_LOG=quiet|info|debug
// controls stderr progress output.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "empc/empc.hpp"

namespace {

namespace fs = std::filesystem;

int log_level() {
  const char* env = std::getenv("EMPCSIM_LOG");
  if (!env) return 1;
  std::string v = env;
  if (v == "quiet" || v == "0") return 0;
  if (v == "debug" || v == "2") return 2;
  return 1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw empc::ConfigError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// series_path entries are resolved relative to the config file.
empc::SeriesData load_series(const empc::ScenarioConfig& cfg, const empc::TimeGrid& g,
                             const std::string& config_path) {
  fs::path p = cfg.series_path;
  if (p.is_relative()) p = fs::path(config_path).parent_path() / p;
  return empc::load_timeseries(p.string(), g);
}

empc::StepObserver progress_observer(const empc::TimeGrid& g, const std::string& label) {
  int lvl = log_level();
  if (lvl == 0) return {};
  return [=, &g](const empc::Decision&, const empc::StepRecord& r) {
    bool day_tick = r.t % g.steps_per_day == 0;
    bool month_tick = day_tick && empc::sigma(g, r.t);
    if ((lvl >= 2 && day_tick) || (lvl == 1 && month_tick)) {
      std::fprintf(stderr, "[%s] %s  x=%.4f  peaks=(%.1f, %.1f) kW\n", label.c_str(),
                   g.timestamp(r.t).c_str(), r.x_next, r.peak_state_after.nc_kw,
                   r.peak_state_after.op_kw);
    }
  };
}

std::string hours_of(const empc::TimeGrid& g, int steps) {
  int minutes = steps * g.step_minutes;
  if (minutes % 60 == 0) return std::to_string(minutes / 60);
  return std::to_string(minutes) + "min";
}

std::string case_name(const empc::ControllerConfig& c, const empc::TimeGrid& g) {
  using empc::HorizonMode;
  using empc::Variant;
  if (c.variant == Variant::empc_star) {
    return std::string("star_") + to_string(c.tracking);
  }
  std::string mode = c.mpc.mode == HorizonMode::shrinking ? "sh" : "ro";
  std::string name = std::string(c.variant == Variant::proposed ? "prop" : "trad") + "_" +
                     to_string(c.tracking) + "_" + mode + "_m" +
                     hours_of(g, c.mpc.nominal_length_steps);
  if (c.variant == Variant::proposed) {
    name += "_r" + hours_of(g, c.ref.nominal_length_steps);
  }
  return name;
}

// One case entry: variant:tracking:mode:t_mpc_hours[:t_r_hours]
// (e.g. trad:nt:shrinking:24, proposed:wt:rolling:24:48) or empc_star:tracking.
empc::ControllerConfig parse_case(const std::string& spec, const empc::TimeGrid& g) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ':')) parts.push_back(tok);
  auto fail = [&](const std::string& why) {
    throw empc::ConfigError("case '" + spec + "': " + why);
  };
  if (parts.size() < 2) fail("expected variant:tracking:mode:t_mpc_hours[:t_r_hours]");

  empc::ControllerConfig c;
  if (parts[1] == "nt") {
    c.tracking = empc::Tracking::nt;
  } else if (parts[1] == "wt") {
    c.tracking = empc::Tracking::wt;
  } else {
    fail("tracking must be nt | wt");
  }

  auto hours_to_steps = [&](const std::string& h) {
    double v = std::strtod(h.c_str(), nullptr);
    double steps = v * 60.0 / g.step_minutes;
    if (steps <= 0 || steps != std::floor(steps)) fail("bad horizon hours '" + h + "'");
    return static_cast<int>(steps);
  };

  if (parts[0] == "empc_star") {
    c.variant = empc::Variant::empc_star;
    c.mpc = {empc::HorizonMode::shrinking, g.steps_per_day};
    c.ref = {empc::HorizonMode::full_month, 0};
    return c;
  }
  if (parts.size() < 4) fail("expected variant:tracking:mode:t_mpc_hours[:t_r_hours]");
  if (parts[2] == "shrinking") {
    c.mpc.mode = empc::HorizonMode::shrinking;
  } else if (parts[2] == "rolling") {
    c.mpc.mode = empc::HorizonMode::rolling;
  } else {
    fail("mode must be shrinking | rolling");
  }
  c.mpc.nominal_length_steps = hours_to_steps(parts[3]);
  if (parts[0] == "trad") {
    c.variant = empc::Variant::trad;
    if (parts.size() > 4) fail("trad takes no reference horizon");
  } else if (parts[0] == "proposed") {
    c.variant = empc::Variant::proposed;
    c.ref.mode = c.mpc.mode;
    c.ref.nominal_length_steps =
        parts.size() > 4 ? hours_to_steps(parts[4]) : c.mpc.nominal_length_steps;
  } else {
    fail("variant must be trad | proposed | empc_star");
  }
  return c;
}

std::vector<empc::ControllerConfig> case_matrix(const std::string& cases_spec,
                                                const empc::TimeGrid& g) {
  std::vector<empc::ControllerConfig> out;
  if (cases_spec == "matrix") {
    for (const char* mode : {"shrinking", "rolling"}) {
      for (const char* tr : {"nt", "wt"}) {
        for (std::string tail : {std::string(":24"), std::string(":48")}) {
          out.push_back(parse_case("trad:" + std::string(tr) + ":" + mode + tail, g));
        }
        for (std::string tail : {std::string(":24:24"), std::string(":24:48"),
                                 std::string(":48:48")}) {
          out.push_back(parse_case("proposed:" + std::string(tr) + ":" + mode + tail, g));
        }
      }
    }
    return out;
  }
  std::stringstream ss(cases_spec);
  std::string entry;
  while (std::getline(ss, entry, ',')) {
    if (!entry.empty()) out.push_back(parse_case(entry, g));
  }
  if (out.empty()) throw empc::ConfigError("--cases matched no case entries");
  return out;
}

int cmd_run(const std::string& config_path, std::string out_dir) {
  empc::ScenarioConfig cfg = empc::parse_config(config_path);
  empc::TimeGrid g = empc::make_scenario_grid(cfg);
  empc::SeriesData series = load_series(cfg, g, config_path);
  if (out_dir.empty()) out_dir = (fs::path("out") / cfg.name).string();

  auto t0 = std::chrono::steady_clock::now();
  empc::SimResult res =
      empc::run_closed_loop(cfg, series.view(), progress_observer(g, cfg.name));
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::vector<std::string> files =
      empc::emit_outputs(res, cfg, out_dir, slurp(config_path), wall);
  std::cout << "scenario " << cfg.name << ": " << g.n_steps << " steps in " << wall << " s ("
            << res.report.total_solve_time_s << " s solving)\n\n";
  std::cout << empc::report_table(res.report) << '\n';
  for (const std::string& f : files) std::cout << "wrote " << f << '\n';
  return 0;
}

int cmd_compare(const std::string& config_path, const std::string& cases_spec,
                std::string out_dir) {
  empc::ScenarioConfig base = empc::parse_config(config_path);
  empc::TimeGrid g = empc::make_scenario_grid(base);
  empc::SeriesData series = load_series(base, g, config_path);
  std::vector<empc::ControllerConfig> cases = case_matrix(cases_spec, g);
  if (out_dir.empty()) out_dir = "out/compare";
  fs::create_directories(out_dir);

  struct Row {
    std::string name;
    empc::CostReport rep;
    double wall = 0.0;
  };
  std::vector<Row> rows;
  for (const empc::ControllerConfig& cc : cases) {
    empc::ScenarioConfig cfg = base;
    cfg.controller = cc;
    cfg.name = case_name(cc, g);
    auto t0 = std::chrono::steady_clock::now();
    empc::SimResult res =
        empc::run_closed_loop(cfg, series.view(), progress_observer(g, cfg.name));
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (log_level() >= 1) {
      std::fprintf(stderr, "[compare] %-22s total $%.2f  (%.2f s)\n", cfg.name.c_str(),
                   res.report.annual_cost, wall);
    }
    rows.push_back({cfg.name, res.report, wall});
  }

  std::string csv_path = (fs::path(out_dir) / "compare.csv").string();
  {
    std::ofstream out(csv_path);
    if (!out) throw empc::DataError("cannot open '" + csv_path + "' for writing");
    out << "case,ncdc,opdc,energy_cost,bess_loss,total,total_solve_s,max_solve_s,wall_s\n";
    char line[256];
    for (const Row& r : rows) {
      std::snprintf(line, sizeof line, "%s,%.10g,%.10g,%.10g,%.10g,%.10g,%.6g,%.6g,%.6g\n",
                    r.name.c_str(), r.rep.ncdc, r.rep.opdc, r.rep.energy_cost, r.rep.bess_loss,
                    r.rep.annual_cost, r.rep.total_solve_time_s, r.rep.max_solve_time_s,
                    r.wall);
      out << line;
    }
  }

  char line[256];
  std::snprintf(line, sizeof line, "%-22s %14s %14s %14s %12s %14s\n", "case", "NCDC($)",
                "OPDC($)", "energy($)", "loss($)", "total($)");
  std::cout << line;
  for (const Row& r : rows) {
    std::snprintf(line, sizeof line, "%-22s %14.10g %14.10g %14.10g %12.10g %14.10g\n",
                  r.name.c_str(), r.rep.ncdc, r.rep.opdc, r.rep.energy_cost, r.rep.bess_loss,
                  r.rep.annual_cost);
    std::cout << line;
  }
  std::cout << "\nwrote " << csv_path << '\n';
  return 0;
}

int cmd_gen_data(int days, unsigned long long seed, const std::string& out_path,
                 const std::string& start, int step_minutes) {
  empc::TimeGrid g = empc::build_grid(empc::parse_date(start), days, step_minutes);
  empc::SeriesData s = empc::make_synthetic_series(g, seed);
  std::filesystem::path parent = std::filesystem::path(out_path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  empc::write_timeseries(out_path, g, s);
  std::cout << "wrote " << out_path << " (" << g.n_steps << " rows at " << step_minutes
            << "-min steps from " << start << ", seed " << seed << ")\n";
  return 0;
}

int cmd_dump_lp(const std::string& config_path, long long step, const std::string& stage) {
  empc::ScenarioConfig cfg = empc::parse_config(config_path);
  empc::TimeGrid g = empc::make_scenario_grid(cfg);
  empc::SeriesData series = load_series(cfg, g, config_path);
  if (step < 0 || step >= g.n_steps) throw empc::ConfigError("--step outside the grid");
  empc::Controller ctrl = empc::make_controller(cfg.controller, cfg.tariff, cfg.bess, g);

  // Replay the closed loop up to the requested step to obtain its state.
  double x = cfg.bess.soc_init;
  empc::PeakState peaks = cfg.initial_peaks;
  empc::SeriesView data = series.view();
  for (long long t = 0; t < step; ++t) {
    empc::Decision d = ctrl.step(t, x, peaks, data);
    x = empc::plant_step(x, d.u2, cfg.bess, g.step_hours());
    peaks = empc::update_peak_state(peaks, d.u1, t, g);
  }

  empc::HorizonWindow w = empc::mpc_window(g, cfg.controller.mpc, step);
  empc::PwlModel model;
  if (cfg.controller.variant == empc::Variant::trad) {
    if (stage == "ref") throw empc::ConfigError("trad scenarios have no reference stage");
    model = empc::trad_empc_program(step, x, data.slice(w), w, peaks, cfg.controller.tracking,
                                    cfg.tariff, cfg.bess, g);
  } else {
    empc::HorizonWindow rw = empc::ref_window(g, cfg.controller.ref, step);
    if (stage == "ref") {
      model = empc::trad_empc_program(step, x, data.slice(rw), rw, peaks,
                                      cfg.controller.tracking, cfg.tariff, cfg.bess, g);
    } else {
      empc::ReferenceTrajectory ref =
          empc::build_reference(step, x, data.slice(rw), rw, peaks, cfg.controller.tracking,
                                cfg.tariff, cfg.bess, g);
      model = empc::proposed_empc_program(step, x, peaks, ref, data.slice(w), w, cfg.tariff,
                                          cfg.bess, g);
    }
  }
  empc::LoweredModel low = empc::lower(model);
  std::cout << "# " << stage << " program at step " << step << " (" << g.timestamp(step)
            << "), x = " << x << ", peaks = (" << peaks.nc_kw << ", " << peaks.op_kw << ") kW\n"
            << "# model vars: " << low.n_model_vars << ", lp vars: " << low.lp.n << ", rows: "
            << low.lp.rows.size() << "\n";
  low.lp.debug_dump(std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Battery dispatch simulation under monthly demand charges"};
  app.require_subcommand(1);

  std::string config_path, out_dir, cases_spec = "matrix", start_date = "2019-01-01";
  std::string stage = "mpc", data_out;
  int days = 365, step_minutes = 15;
  long long step = 0;
  unsigned long long seed = 1;

  CLI::App* run = app.add_subcommand("run", "Run one scenario and write its outputs");
  run->add_option("--config", config_path, "Scenario config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (default out/<name>)");

  CLI::App* cmp = app.add_subcommand("compare", "Run a case matrix and emit a comparison grid");
  cmp->add_option("--config", config_path, "Base scenario config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmp->add_option("--cases", cases_spec,
                  "\"matrix\" (the 20 standard cases) or comma-separated "
                  "variant:tracking:mode:t_mpc_hours[:t_r_hours] entries");
  cmp->add_option("--out", out_dir, "Output directory (default out/compare)");

  CLI::App* gen = app.add_subcommand("gen-data", "Write a synthetic load/PV series");
  gen->add_option("--days", days, "Number of days")->required();
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("--out", data_out, "Output CSV path")->required();
  gen->add_option("--start", start_date, "Start date (YYYY-MM-DD)");
  gen->add_option("--step", step_minutes, "Step size in minutes");

  CLI::App* dump = app.add_subcommand("dump-lp", "Print one subproblem LP");
  dump->add_option("--config", config_path, "Scenario config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  dump->add_option("--step", step, "Simulation step to dump");
  dump->add_option("--stage", stage, "Which stage to dump")
      ->check(CLI::IsMember({"mpc", "ref"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir);
    if (cmp->parsed()) return cmd_compare(config_path, cases_spec, out_dir);
    if (gen->parsed()) return cmd_gen_data(days, seed, data_out, start_date, step_minutes);
    if (dump->parsed()) return cmd_dump_lp(config_path, step, stage);
  } catch (const empc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const empc::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const empc::SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
