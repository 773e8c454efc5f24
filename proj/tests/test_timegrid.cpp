#include <catch2/catch_amalgamated.hpp>

#include "empc/timegrid.hpp"

using namespace empc;

TEST_CASE("parse_date accepts ISO dates and rejects junk", "[timegrid]") {
  CivilDate d = parse_date("2019-01-01");
  CHECK(d.year == 2019);
  CHECK(d.month == 1);
  CHECK(d.day == 1);
  CHECK(format_date(parse_date("2020-02-29")) == "2020-02-29");

  CHECK_THROWS_AS(parse_date("2019-02-29"), ConfigError);  // not a leap year
  CHECK_THROWS_AS(parse_date("2019-13-01"), ConfigError);
  CHECK_THROWS_AS(parse_date("2019-00-10"), ConfigError);
  CHECK_THROWS_AS(parse_date("2019/01/01"), ConfigError);
  CHECK_THROWS_AS(parse_date("garbage"), ConfigError);
  CHECK_THROWS_AS(parse_date("2019-01-01x"), ConfigError);
}

TEST_CASE("build_grid dimensions and month map for a calendar year", "[timegrid]") {
  TimeGrid g = build_grid(parse_date("2019-01-01"), 365, 15);
  CHECK(g.steps_per_day == 96);
  CHECK(g.n_steps == 35040);
  CHECK(g.n_months == 12);

  CHECK(g.month_of(0) == 0);
  CHECK(g.month_of(2975) == 0);   // 23:45 Jan 31
  CHECK(g.month_of(2976) == 1);   // 00:00 Feb 1
  CHECK(g.month_of(35039) == 11);

  // Month boundaries land where the calendar says they should.
  CHECK(month_start_step(g, 0) == 0);
  CHECK(month_end_step(g, 0) == 2975);
  CHECK(month_start_step(g, 1) == 2976);
  CHECK(month_end_step(g, 1) == 5663);     // Feb 2019 has 28 days
  CHECK(month_start_step(g, 11) == 32064); // Dec 1
  CHECK(month_end_step(g, 11) == 35039);

  CHECK(g.timestamp(0) == "2019-01-01T00:00");
  CHECK(g.timestamp(95) == "2019-01-01T23:45");
  CHECK(g.timestamp(2976) == "2019-02-01T00:00");
  CHECK(g.timestamp(35039) == "2019-12-31T23:45");

  for (int m = 0; m < 12; ++m) CHECK_FALSE(month_is_partial(g, m));
}

TEST_CASE("build_grid handles coarse steps and short spans", "[timegrid]") {
  TimeGrid g = build_grid(parse_date("2019-02-01"), 28, 60);
  CHECK(g.steps_per_day == 24);
  CHECK(g.n_steps == 672);
  CHECK(g.n_months == 1);
  CHECK_FALSE(month_is_partial(g, 0));

  TimeGrid h = build_grid(parse_date("2019-01-15"), 20, 15);
  CHECK(h.n_months == 2);
  CHECK(month_is_partial(h, 0));  // starts mid-January
  CHECK(month_is_partial(h, 1));  // ends Feb 3
  CHECK(month_start_step(h, 1) == 17 * 96);

  CHECK_THROWS_AS(build_grid(parse_date("2019-01-01"), 0, 15), ConfigError);
  CHECK_THROWS_AS(build_grid(parse_date("2019-01-01"), 10, 7), ConfigError);
  CHECK_THROWS_AS(build_grid(parse_date("2019-01-01"), 10, 0), ConfigError);
}

TEST_CASE("on-peak window is 16:00 to 21:00 half-open", "[timegrid]") {
  TimeGrid g = build_grid(parse_date("2019-01-01"), 2, 15);
  CHECK_FALSE(is_op_period(g, 63));  // 15:45
  CHECK(is_op_period(g, 64));        // 16:00
  CHECK(is_op_period(g, 83));        // 20:45
  CHECK_FALSE(is_op_period(g, 84));  // 21:00
  CHECK_FALSE(is_op_period(g, 13));  // 03:15

  int count = 0;
  for (int t = 0; t < g.steps_per_day; ++t) count += is_op_period(g, t) ? 1 : 0;
  CHECK(count == 20);

  TimeGrid h = build_grid(parse_date("2019-01-01"), 1, 60);
  int hcount = 0;
  for (int t = 0; t < h.steps_per_day; ++t) hcount += is_op_period(h, t) ? 1 : 0;
  CHECK(hcount == 5);  // 16,17,18,19,20
}

TEST_CASE("sigma marks the first step and month starts", "[timegrid]") {
  TimeGrid g = build_grid(parse_date("2019-01-01"), 365, 15);
  CHECK(sigma(g, 0));
  CHECK_FALSE(sigma(g, 17));
  CHECK_FALSE(sigma(g, 2975));
  CHECK(sigma(g, 2976));  // Feb 1 00:00
  CHECK(sigma(g, 35040)); // one past the end: next month begins

  int count = 0;
  for (long long t = 0; t < g.n_steps; ++t) count += sigma(g, t) ? 1 : 0;
  CHECK(count == 12);
}

TEST_CASE("horizon spec validation requires whole days", "[timegrid]") {
  TimeGrid g = build_grid(parse_date("2019-01-01"), 10, 15);
  CHECK_NOTHROW(validate_horizon_spec(g, {HorizonMode::shrinking, 96}));
  CHECK_NOTHROW(validate_horizon_spec(g, {HorizonMode::rolling, 192}));
  CHECK_NOTHROW(validate_horizon_spec(g, {HorizonMode::full_month, 0}));
  CHECK_THROWS_AS(validate_horizon_spec(g, {HorizonMode::shrinking, 95}), ConfigError);
  CHECK_THROWS_AS(validate_horizon_spec(g, {HorizonMode::rolling, 0}), ConfigError);
  CHECK_THROWS_AS(validate_horizon_spec(g, {HorizonMode::rolling, -96}), ConfigError);
}

TEST_CASE("shrinking windows restart each day and keep a frozen end", "[timegrid]") {
  TimeGrid g = build_grid(parse_date("2019-01-01"), 365, 15);

  HorizonWindow w = mpc_window(g, {HorizonMode::shrinking, 96}, 10);
  CHECK(w.start == 10);
  CHECK(w.end == 95);
  CHECK(w.threshold_step == 96);

  w = mpc_window(g, {HorizonMode::shrinking, 192}, 10);
  CHECK(w.end == 191);
  CHECK(w.threshold_step == 192);

  w = mpc_window(g, {HorizonMode::shrinking, 96}, 95);
  CHECK(w.end == 95);
  CHECK(w.length() == 1);

  w = mpc_window(g, {HorizonMode::shrinking, 96}, 96);  // next day: fresh window
  CHECK(w.end == 191);
  CHECK(w.threshold_step == 192);

  w = mpc_window(g, {HorizonMode::shrinking, 96}, 35000);
  CHECK(w.end == 35039);
  CHECK(w.threshold_step == 35040);
}

TEST_CASE("rolling windows keep nominal length and clip at the end", "[timegrid]") {
  TimeGrid g = build_grid(parse_date("2019-01-01"), 365, 15);

  HorizonWindow w = mpc_window(g, {HorizonMode::rolling, 192}, 10);
  CHECK(w.start == 10);
  CHECK(w.end == 201);
  CHECK(w.threshold_step == 192);  // last midnight at or before end+1

  w = mpc_window(g, {HorizonMode::rolling, 96}, 50);
  CHECK(w.end == 145);
  CHECK(w.threshold_step == 96);

  w = mpc_window(g, {HorizonMode::rolling, 96}, 96);
  CHECK(w.end == 191);
  CHECK(w.threshold_step == 192);

  w = mpc_window(g, {HorizonMode::rolling, 96}, 35039);
  CHECK(w.end == 35039);
  CHECK(w.threshold_step == 35040);

  CHECK_THROWS_AS(mpc_window(g, {HorizonMode::full_month, 0}, 10), ConfigError);
}

TEST_CASE("full-month reference windows span the rest of the month", "[timegrid]") {
  TimeGrid g = build_grid(parse_date("2019-01-01"), 365, 15);

  HorizonWindow w = ref_window(g, {HorizonMode::full_month, 0}, 2976);
  CHECK(w.start == 2976);
  CHECK(w.end == 5663);
  CHECK(w.threshold_step == 5664);

  w = ref_window(g, {HorizonMode::full_month, 0}, 5664);  // first step of March
  CHECK(w.end == 8639);
  CHECK(w.threshold_step == 8640);

  w = ref_window(g, {HorizonMode::full_month, 0}, 3000);  // mid-February
  CHECK(w.start == 3000);
  CHECK(w.end == 5663);

  // Non-full-month specs delegate to the MPC window rules.
  HorizonWindow r = ref_window(g, {HorizonMode::shrinking, 192}, 10);
  HorizonWindow m = mpc_window(g, {HorizonMode::shrinking, 192}, 10);
  CHECK(r.start == m.start);
  CHECK(r.end == m.end);
  CHECK(r.threshold_step == m.threshold_step);
}

TEST_CASE("window invariants hold across the whole year", "[timegrid]") {
  TimeGrid g = build_grid(parse_date("2019-01-01"), 365, 15);
  const HorizonSpec specs[] = {
      {HorizonMode::shrinking, 96},
      {HorizonMode::shrinking, 192},
      {HorizonMode::rolling, 96},
      {HorizonMode::rolling, 192},
  };
  for (const HorizonSpec& spec : specs) {
    for (long long t = 0; t < g.n_steps; t += 7) {
      HorizonWindow w = mpc_window(g, spec, t);
      REQUIRE(w.start == t);
      REQUIRE(w.end >= t);
      REQUIRE(w.end < g.n_steps);
      REQUIRE(w.length() <= spec.nominal_length_steps);
      REQUIRE(w.threshold_step > w.start);
      REQUIRE(w.threshold_step <= w.end + 1);
      REQUIRE(w.threshold_step % g.steps_per_day == 0);  // always a midnight
      if (spec.mode == HorizonMode::rolling) {
        REQUIRE(w.end == std::min(t + spec.nominal_length_steps - 1, g.n_steps - 1));
      } else {
        REQUIRE((w.end + 1) % g.steps_per_day == 0);
        // Window always covers the remainder of the current day.
        REQUIRE(w.end >= static_cast<long long>(g.day_of(t) + 1) * g.steps_per_day - 1);
      }
    }
  }

  // Full-month windows always end exactly at the month boundary.
  for (long long t = 0; t < g.n_steps; t += 13) {
    HorizonWindow w = ref_window(g, {HorizonMode::full_month, 0}, t);
    REQUIRE(w.start == t);
    REQUIRE(w.end == month_end_step(g, g.month_of(t)));
    REQUIRE(w.threshold_step == w.end + 1);
  }
}
