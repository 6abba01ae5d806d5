#pragma once

// The only place where non-SI units are converted. Everything inside the
// library is m, s, veh/s and veh/m.

namespace merge::units {

inline constexpr double kSecondsPerHour = 3600.0;
inline constexpr double kMetersPerKm = 1000.0;
inline constexpr double kMetersPerFoot = 0.3048;

constexpr double kmh_to_mps(double kmh) { return kmh * kMetersPerKm / kSecondsPerHour; }
constexpr double mps_to_kmh(double mps) { return mps * kSecondsPerHour / kMetersPerKm; }

constexpr double vph_to_vps(double vph) { return vph / kSecondsPerHour; }
constexpr double vps_to_vph(double vps) { return vps * kSecondsPerHour; }

constexpr double per_km_to_per_m(double per_km) { return per_km / kMetersPerKm; }
constexpr double per_m_to_per_km(double per_m) { return per_m * kMetersPerKm; }

constexpr double feet_to_m(double ft) { return ft * kMetersPerFoot; }
constexpr double m_to_feet(double m) { return m / kMetersPerFoot; }

}  // namespace merge::units
