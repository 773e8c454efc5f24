#pragma once

// Umbrella header: the whole battery-dispatch simulation engine.

#include "empc/controllers.hpp"
#include "empc/errors.hpp"
#include "empc/io.hpp"
#include "empc/pwl.hpp"
#include "empc/series.hpp"
#include "empc/sim.hpp"
#include "empc/simplex.hpp"
#include "empc/synth.hpp"
#include "empc/tariff.hpp"
#include "empc/timegrid.hpp"
