#pragma once

#include <random>

#include "merge/traffic_core.hpp"
#include "merge/units.hpp"

namespace merge::test {

// I-80 style diagram: 19 km/h waves, 113 veh/km jam density, 48 km/h cruise.
inline FundamentalDiagram ngsim_diagram() {
  return FundamentalDiagram::from_wave(units::kmh_to_mps(19.0), units::per_km_to_per_m(113.0),
                                       units::kmh_to_mps(48.0));
}

// Freeway case with 16 km/h waves and 105 km/h cruise.
inline FundamentalDiagram freeway_diagram() {
  return FundamentalDiagram::from_wave(units::kmh_to_mps(16.0), units::per_km_to_per_m(113.0),
                                       units::kmh_to_mps(105.0));
}

inline double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace merge::test
