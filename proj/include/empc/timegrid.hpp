#pragma once

// Simulation time grid: uniform steps over whole calendar days, with
// month boundaries (billing periods), the daily on-peak window, and the
// horizon-window rules used by the receding-horizon controllers.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "empc/errors.hpp"

namespace empc {

struct CivilDate {
  int year = 1970;
  unsigned month = 1;  // 1..12
  unsigned day = 1;    // 1..31

  bool ok() const {
    std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                    std::chrono::day{day}};
    return ymd.ok();
  }
};

// Parses "YYYY-MM-DD". Throws ConfigError on malformed or non-existent dates.
inline CivilDate parse_date(const std::string& text) {
  int y = 0, m = 0, d = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d-%d-%d%c", &y, &m, &d, &tail) != 3 || m < 1 || d < 1) {
    throw ConfigError("invalid date '" + text + "': expected YYYY-MM-DD");
  }
  CivilDate date{y, static_cast<unsigned>(m), static_cast<unsigned>(d)};
  if (!date.ok()) {
    throw ConfigError("invalid date '" + text + "': no such calendar day");
  }
  return date;
}

inline std::string format_date(const CivilDate& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

// Daily on-peak window, half-open [16:00, 21:00).
inline constexpr int kOnPeakStartMinute = 16 * 60;
inline constexpr int kOnPeakEndMinute = 21 * 60;

// Uniform step grid covering whole days from a calendar start date.
// Month indices are 0-based from the simulation start; a partial first
// or last calendar month still gets its own index.
struct TimeGrid {
  CivilDate start;
  int n_days = 0;
  int step_minutes = 0;
  int steps_per_day = 0;
  long long n_steps = 0;

  // month index per day, length n_days + 1: the extra entry is the
  // (virtual) day after the simulation so month lookups work at t == n_steps.
  std::vector<int> day_month;
  int n_months = 0;

  int day_of(long long t) const { return static_cast<int>(t / steps_per_day); }
  int minute_of_day(long long t) const {
    return static_cast<int>(t % steps_per_day) * step_minutes;
  }
  // Valid for t in [0, n_steps].
  int month_of(long long t) const { return day_month[static_cast<size_t>(t / steps_per_day)]; }

  double step_hours() const { return step_minutes / 60.0; }

  CivilDate date_of_day(int day) const {
    using namespace std::chrono;
    year_month_day start_ymd{year{start.year}, month{start.month}, std::chrono::day{start.day}};
    year_month_day ymd{sys_days{start_ymd} + days{day}};
    return CivilDate{static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day())};
  }

  // ISO-8601 local timestamp of step t, minute resolution.
  std::string timestamp(long long t) const {
    CivilDate d = date_of_day(day_of(t));
    int minute = minute_of_day(t);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d", d.year, d.month, d.day,
                  minute / 60, minute % 60);
    return buf;
  }
};

inline TimeGrid build_grid(const CivilDate& start, int n_days, int step_minutes) {
  if (!start.ok()) throw ConfigError("build_grid: invalid start date");
  if (n_days < 1) throw ConfigError("build_grid: n_days must be >= 1");
  if (step_minutes < 1 || 1440 % step_minutes != 0) {
    throw ConfigError("build_grid: step_minutes must divide 1440");
  }
  TimeGrid g;
  g.start = start;
  g.n_days = n_days;
  g.step_minutes = step_minutes;
  g.steps_per_day = 1440 / step_minutes;
  g.n_steps = static_cast<long long>(n_days) * g.steps_per_day;

  using namespace std::chrono;
  year_month_day start_ymd{year{start.year}, month{start.month}, day{start.day}};
  sys_days cursor{start_ymd};
  g.day_month.resize(static_cast<size_t>(n_days) + 1);
  int month_index = 0;
  year_month prev{start_ymd.year(), start_ymd.month()};
  for (int d = 0; d <= n_days; ++d, cursor += days{1}) {
    year_month_day ymd{cursor};
    year_month cur{ymd.year(), ymd.month()};
    if (cur != prev) {
      ++month_index;
      prev = cur;
    }
    g.day_month[static_cast<size_t>(d)] = month_index;
  }
  g.n_months = g.day_month[static_cast<size_t>(n_days) - 1] + 1;
  return g;
}

// True when step t lies in the daily on-peak window.
inline bool is_op_period(const TimeGrid& g, long long t) {
  int m = g.minute_of_day(t);
  return m >= kOnPeakStartMinute && m < kOnPeakEndMinute;
}

// Billing-period reset flag: 1 at t = 0 and at the first step of each
// calendar month, 0 otherwise. The non-coincident and on-peak charges
// share calendar-month periods, so one flag serves both. Valid for
// t in [0, n_steps] (the step after the last is a valid lookahead).
inline bool sigma(const TimeGrid& g, long long t) {
  if (t == 0) return true;
  return g.month_of(t) != g.month_of(t - 1);
}

// First step of month m (0-based month index).
inline long long month_start_step(const TimeGrid& g, int m) {
  for (int d = 0; d < g.n_days; ++d) {
    if (g.day_month[static_cast<size_t>(d)] == m) {
      return static_cast<long long>(d) * g.steps_per_day;
    }
  }
  throw ConfigError("month_start_step: month index out of range");
}

// Last step of month m, clipped to the simulation end.
inline long long month_end_step(const TimeGrid& g, int m) {
  long long last = -1;
  for (int d = 0; d < g.n_days; ++d) {
    if (g.day_month[static_cast<size_t>(d)] == m) {
      last = static_cast<long long>(d + 1) * g.steps_per_day - 1;
    }
  }
  if (last < 0) throw ConfigError("month_end_step: month index out of range");
  return last;
}

// True when the simulation covers month m only partially (the calendar
// month extends before the first simulated day or after the last one).
inline bool month_is_partial(const TimeGrid& g, int m) {
  using namespace std::chrono;
  CivilDate first = g.date_of_day(g.day_of(month_start_step(g, m)));
  if (first.day != 1) return true;
  CivilDate last = g.date_of_day(g.day_of(month_end_step(g, m)));
  year_month_day last_ymd{year{last.year}, month{last.month}, day{last.day}};
  return last_ymd != year_month_day{year_month_day_last{last_ymd.year(),
                                                        month_day_last{last_ymd.month()}}};
}

enum class HorizonMode {
  shrinking,   // window pinned to the end of a daily block; restarts daily
  rolling,     // fixed-length window sliding one step at a time
  full_month,  // window covers the remainder of the current month (reference only)
};

struct HorizonSpec {
  HorizonMode mode = HorizonMode::shrinking;
  int nominal_length_steps = 0;  // ignored for full_month
};

// A controller subproblem window. Steps start..end inclusive; the
// 50%-SOC threshold (when the program uses one) applies to the state
// after step threshold_step - 1, i.e. x(threshold_step).
struct HorizonWindow {
  long long start = 0;
  long long end = 0;  // inclusive
  long long threshold_step = 0;

  long long length() const { return end - start + 1; }
};

inline void validate_horizon_spec(const TimeGrid& g, const HorizonSpec& spec) {
  if (spec.mode == HorizonMode::full_month) return;
  if (spec.nominal_length_steps < g.steps_per_day ||
      spec.nominal_length_steps % g.steps_per_day != 0) {
    throw ConfigError("horizon length must be a whole positive number of days");
  }
}

// Prediction window at step t. Shrinking mode pins the window end to the
// last step of day(t) + nominal_days - 1 (so it shrinks within each day
// and restarts at the next); rolling mode keeps nominal length. Windows
// are clipped at the simulation end. Threshold placement: shrinking puts
// it one past the window end; rolling uses the last midnight step at or
// before end + 1 (always > start for whole-day lengths).
inline HorizonWindow mpc_window(const TimeGrid& g, const HorizonSpec& spec, long long t) {
  if (t < 0 || t >= g.n_steps) throw ConfigError("mpc_window: step out of range");
  if (spec.mode == HorizonMode::full_month) {
    throw ConfigError("mpc_window: full_month is only valid for reference horizons");
  }
  validate_horizon_spec(g, spec);
  HorizonWindow w;
  w.start = t;
  if (spec.mode == HorizonMode::shrinking) {
    int nominal_days = spec.nominal_length_steps / g.steps_per_day;
    long long end = static_cast<long long>(g.day_of(t) + nominal_days) * g.steps_per_day - 1;
    w.end = std::min(end, g.n_steps - 1);
    w.threshold_step = w.end + 1;
  } else {
    w.end = std::min(t + spec.nominal_length_steps - 1, g.n_steps - 1);
    w.threshold_step = ((w.end + 1) / g.steps_per_day) * g.steps_per_day;
  }
  return w;
}

// Reference window at step t: same rules as mpc_window, plus the
// full-month mode that spans the remainder of the current month.
inline HorizonWindow ref_window(const TimeGrid& g, const HorizonSpec& spec, long long t) {
  if (t < 0 || t >= g.n_steps) throw ConfigError("ref_window: step out of range");
  if (spec.mode == HorizonMode::full_month) {
    HorizonWindow w;
    w.start = t;
    w.end = month_end_step(g, g.month_of(t));
    w.threshold_step = w.end + 1;
    return w;
  }
  return mpc_window(g, spec, t);
}

}  // namespace empc
