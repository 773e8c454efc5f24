#pragma once

// Load/PV series types shared by the controllers, the synthetic
// generator, and the file I/O layer.

#include <span>
#include <vector>

#include "empc/errors.hpp"
#include "empc/timegrid.hpp"

namespace empc {

// Load / PV forecast over one window. Entries are window-relative:
// load_kw[i] belongs to step window.start + i.
struct ForecastSlice {
  HorizonWindow window;
  std::vector<double> load_kw;
  std::vector<double> pv_kw;

  double net_kw(long long i) const {
    return load_kw[static_cast<size_t>(i)] - pv_kw[static_cast<size_t>(i)];
  }
};

// Whole-simulation series the controllers slice perfect forecasts from.
struct SeriesView {
  std::span<const double> load_kw;
  std::span<const double> pv_kw;

  ForecastSlice slice(const HorizonWindow& w) const {
    if (w.start < 0 || w.end < w.start ||
        static_cast<size_t>(w.end) >= load_kw.size() ||
        load_kw.size() != pv_kw.size()) {
      throw DataError("forecast slice: window outside the data series");
    }
    ForecastSlice f;
    f.window = w;
    auto n = static_cast<size_t>(w.length());
    f.load_kw.assign(load_kw.begin() + w.start, load_kw.begin() + w.start + n);
    f.pv_kw.assign(pv_kw.begin() + w.start, pv_kw.begin() + w.start + n);
    return f;
  }
};

// Owning series, one value per grid step.
struct SeriesData {
  std::vector<double> load_kw;
  std::vector<double> pv_kw;

  SeriesView view() const { return SeriesView{load_kw, pv_kw}; }
};

}  // namespace empc
