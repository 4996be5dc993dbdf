#pragma once

// Physical constants shared by every module. All lengths are kilometers,
// times are seconds, angles are radians unless a name says otherwise.

namespace satnet::constants {

inline constexpr double kEarthRadiusKm = 6371.0;

// Standard gravitational parameter of Earth, km^3/s^2.
inline constexpr double kMuEarth = 398600.4418;

// Earth rotation rate, rad/s (sidereal).
inline constexpr double kEarthRotationRadPerSec = 7.2921159e-5;

// Speed of light, km/s.
inline constexpr double kSpeedOfLightKmPerSec = 299792.458;

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Propagation delay in milliseconds for a path of the given length.
inline constexpr double delay_ms_for_distance(double distance_km) {
  return distance_km / kSpeedOfLightKmPerSec * 1000.0;
}

}  // namespace satnet::constants
