#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "empc/io.hpp"
#include "empc/synth.hpp"

using namespace empc;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
  static fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "empc_io_tests";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  REQUIRE(out);
  out << text;
}

const char* kConfigTemplate = R"({
  "name": "demo",
  "tariff": {"r_ec": 0.1, "r_nc": 24.48, "r_op": 19.19},
  "bess": {"energy_kwh": 2500, "power_kw": 700, "eta": 0.8,
           "soc_min": 0.2, "soc_max": 0.8},
  "controller": {"variant": "proposed", "tracking": "wt",
                 "mode": "rolling", "t_mpc_hours": 24, "t_r_hours": 48},
  "data": {"series_path": "series.csv"},
  "sim": {"start_date": "2019-01-01", "n_days": 7, "step_minutes": 60}
})";

}  // namespace

TEST_CASE("series files round-trip exactly", "[io]") {
  TimeGrid g = build_grid(parse_date("2019-02-27"), 3, 15);
  SeriesData s = make_synthetic_series(g, 17);
  fs::path p = test_dir() / "roundtrip.csv";
  write_timeseries(p.string(), g, s);
  SeriesData back = load_timeseries(p.string(), g);
  REQUIRE(back.load_kw.size() == s.load_kw.size());
  for (size_t i = 0; i < s.load_kw.size(); ++i) {
    REQUIRE(back.load_kw[i] == s.load_kw[i]);
    REQUIRE(back.pv_kw[i] == s.pv_kw[i]);
  }
}

TEST_CASE("series validation rejects structural defects", "[io]") {
  TimeGrid g = build_grid(parse_date("2019-01-01"), 1, 15);  // 96 steps
  SeriesData s = make_synthetic_series(g, 3);
  fs::path good = test_dir() / "good.csv";
  write_timeseries(good.string(), g, s);

  auto lines = [&] {
    std::vector<std::string> v;
    std::istringstream in(slurp(good));
    std::string l;
    while (std::getline(in, l)) v.push_back(l);
    return v;
  }();
  REQUIRE(lines.size() == 97);

  auto join = [](const std::vector<std::string>& v) {
    std::string out;
    for (const auto& l : v) {
      out += l;
      out += '\n';
    }
    return out;
  };

  SECTION("accepted as written") { CHECK_NOTHROW(load_timeseries(good.string(), g)); }
  SECTION("missing file") {
    CHECK_THROWS_AS(load_timeseries((test_dir() / "nope.csv").string(), g), DataError);
  }
  SECTION("wrong header") {
    auto v = lines;
    v[0] = "time,load,pv";
    fs::path p = test_dir() / "hdr.csv";
    spit(p, join(v));
    CHECK_THROWS_WITH(load_timeseries(p.string(), g),
                      Catch::Matchers::ContainsSubstring("header"));
  }
  SECTION("gap names the missing timestamp") {
    auto v = lines;
    v.erase(v.begin() + 54);  // drop the 13:15 row (rows start at index 1)
    fs::path p = test_dir() / "gap.csv";
    spit(p, join(v));
    CHECK_THROWS_WITH(load_timeseries(p.string(), g),
                      Catch::Matchers::ContainsSubstring("missing row for 2019-01-01T13:15"));
  }
  SECTION("wrong resolution is a spacing error") {
    std::vector<std::string> v{lines[0]};
    for (size_t i = 1; i < lines.size(); i += 2) v.push_back(lines[i]);  // 30-min file
    fs::path p = test_dir() / "spacing.csv";
    spit(p, join(v));
    CHECK_THROWS_WITH(load_timeseries(p.string(), g),
                      Catch::Matchers::ContainsSubstring("spacing mismatch"));
  }
  SECTION("short file is a length error") {
    auto v = lines;
    v.resize(50);
    fs::path p = test_dir() / "short.csv";
    spit(p, join(v));
    CHECK_THROWS_WITH(load_timeseries(p.string(), g),
                      Catch::Matchers::ContainsSubstring("length mismatch"));
  }
  SECTION("extra rows are a length error") {
    TimeGrid g2 = build_grid(parse_date("2019-01-01"), 2, 15);
    SeriesData s2 = make_synthetic_series(g2, 3);
    fs::path p = test_dir() / "long.csv";
    write_timeseries(p.string(), g2, s2);
    CHECK_THROWS_WITH(load_timeseries(p.string(), g),
                      Catch::Matchers::ContainsSubstring("length mismatch"));
  }
  SECTION("wrong start timestamp") {
    TimeGrid g2 = build_grid(parse_date("2019-01-02"), 1, 15);
    CHECK_THROWS_WITH(load_timeseries(good.string(), g2),
                      Catch::Matchers::ContainsSubstring("must start at"));
  }
  SECTION("malformed and out-of-domain values") {
    auto bad_row = [&](const std::string& row, const char* needle) {
      auto v = lines;
      v[10] = v[10].substr(0, v[10].find(',') + 1) + row;
      fs::path p = test_dir() / "badval.csv";
      spit(p, join(v));
      CHECK_THROWS_WITH(load_timeseries(p.string(), g),
                        Catch::Matchers::ContainsSubstring(needle));
    };
    bad_row("abc,0", "malformed load_kw");
    bad_row("nan,0", "not finite");
    bad_row("-5,0", "negative load_kw");
    bad_row("100,-1", "negative pv_kw");
    bad_row("100", "3 comma-separated fields");
  }
}

TEST_CASE("config parsing applies defaults and validates", "[io]") {
  SECTION("valid config") {
    ScenarioConfig cfg = parse_config_text(kConfigTemplate);
    CHECK(cfg.name == "demo");
    CHECK(cfg.tariff.r_nc == 24.48);
    CHECK(cfg.bess.soc_init == 0.5);  // default
    CHECK(cfg.controller.variant == Variant::proposed);
    CHECK(cfg.controller.mpc.mode == HorizonMode::rolling);
    CHECK(cfg.controller.mpc.nominal_length_steps == 24);  // 24 h at 60 min
    CHECK(cfg.controller.ref.nominal_length_steps == 48);
    CHECK(cfg.step_minutes == 60);
    CHECK(cfg.series_path == "series.csv");
  }
  SECTION("default step is 15 minutes") {
    std::string text = kConfigTemplate;
    const std::string key = ", \"step_minutes\": 60";
    text.replace(text.find(key), key.size(), "");
    ScenarioConfig cfg = parse_config_text(text);
    CHECK(cfg.step_minutes == 15);
    CHECK(cfg.controller.mpc.nominal_length_steps == 96);  // 24 h at 15 min
  }
  auto mutated = [](const std::string& from, const std::string& to) {
    std::string text = kConfigTemplate;
    auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, from.size(), to);
    return text;
  };
  SECTION("missing key is named") {
    CHECK_THROWS_WITH(parse_config_text(mutated("\"r_nc\": 24.48", "\"r_x\": 1")),
                      Catch::Matchers::ContainsSubstring("tariff.r_nc"));
  }
  SECTION("range errors surface") {
    CHECK_THROWS_AS(parse_config_text(mutated("\"eta\": 0.8", "\"eta\": 1.2")), ConfigError);
    CHECK_THROWS_AS(parse_config_text(mutated("\"soc_min\": 0.2", "\"soc_min\": 0.9")),
                    ConfigError);
  }
  SECTION("invalid enum strings") {
    CHECK_THROWS_AS(parse_config_text(mutated("\"variant\": \"proposed\"",
                                              "\"variant\": \"magic\"")),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_text(mutated("\"tracking\": \"wt\"", "\"tracking\": \"x\"")),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_text(mutated("\"mode\": \"rolling\"", "\"mode\": \"daily\"")),
                    ConfigError);
  }
  SECTION("reference shorter than prediction is rejected") {
    CHECK_THROWS_AS(parse_config_text(mutated("\"t_r_hours\": 48", "\"t_r_hours\": 12")),
                    ConfigError);
  }
  SECTION("fractional step counts are rejected") {
    CHECK_THROWS_AS(parse_config_text(mutated("\"t_mpc_hours\": 24", "\"t_mpc_hours\": 24.3")),
                    ConfigError);
  }
  SECTION("not JSON at all") {
    CHECK_THROWS_WITH(parse_config_text("variant: proposed"),
                      Catch::Matchers::ContainsSubstring("not valid JSON"));
  }
  SECTION("initial peaks are optional") {
    std::string text = kConfigTemplate;
    text.insert(text.rfind('}'), ", \"initial_peaks\": {\"nc_kw\": 500, \"op_kw\": 200}");
    ScenarioConfig cfg = parse_config_text(text);
    CHECK(cfg.initial_peaks.nc_kw == 500.0);
    CHECK(cfg.initial_peaks.op_kw == 200.0);
  }
}

TEST_CASE("run outputs are complete and deterministic", "[io]") {
  ScenarioConfig cfg = parse_config_text(kConfigTemplate);
  cfg.n_days = 4;
  TimeGrid g = make_scenario_grid(cfg);
  SeriesData s = make_synthetic_series(g, 11);

  auto run_and_emit = [&](const std::string& subdir) {
    SimResult res = run_closed_loop(cfg, s.view());
    return emit_outputs(res, cfg, (test_dir() / subdir).string(), kConfigTemplate, 1.0);
  };
  std::vector<std::string> files = run_and_emit("out_a");
  REQUIRE(files.size() == 4);
  for (const std::string& f : files) {
    CAPTURE(f);
    CHECK(fs::exists(f));
  }

  // The partial month is flagged in both report forms.
  std::string report_json = slurp(test_dir() / "out_a" / "report.json");
  CHECK(report_json.find("\"partial\": true") != std::string::npos);
  std::string table = slurp(test_dir() / "out_a" / "report.txt");
  CHECK(table.find("2019-01") != std::string::npos);
  CHECK(table.find("partial") != std::string::npos);
  CHECK(table.find("TOTAL") != std::string::npos);

  // Manifest embeds the config snapshot and lists the outputs.
  auto manifest = nlohmann::json::parse(slurp(test_dir() / "out_a" / "manifest.json"));
  CHECK(manifest.at("scenario") == "demo");
  CHECK(manifest.at("config").at("tariff").at("r_nc") == 24.48);
  CHECK(manifest.at("outputs").size() == 3);

  // Rerunning the identical scenario yields byte-identical reports and traces
  // (modulo the solve-time column, which lives only in the trace).
  run_and_emit("out_b");
  CHECK(slurp(test_dir() / "out_a" / "report.json") ==
        slurp(test_dir() / "out_b" / "report.json"));
  CHECK(slurp(test_dir() / "out_a" / "report.txt") ==
        slurp(test_dir() / "out_b" / "report.txt"));

  // The emitted trace re-derives the report's demand charges exactly.
  {
    std::istringstream in(slurp(test_dir() / "out_a" / "trace.csv"));
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> u1;
    while (std::getline(in, line)) {
      size_t p1 = line.find(',');
      size_t p2 = line.find(',', p1 + 1);
      size_t p3 = line.find(',', p2 + 1);
      u1.push_back(std::strtod(line.substr(p2 + 1, p3 - p2 - 1).c_str(), nullptr));
    }
    REQUIRE(u1.size() == static_cast<size_t>(g.n_steps));
    SimResult res = run_closed_loop(cfg, s.view());
    WindowPeaks peaks = window_peaks(u1, g, 0, g.n_steps - 1);
    CHECK(res.report.months[0].ncdc == cfg.tariff.r_nc * peaks.nc_kw);
    CHECK(res.report.months[0].opdc == cfg.tariff.r_op * peaks.op_kw);
  }

  // An empty trace cannot be emitted.
  SimResult empty;
  empty.grid = g;
  CHECK_THROWS_AS(emit_outputs(empty, cfg, (test_dir() / "out_c").string()), DataError);
}
