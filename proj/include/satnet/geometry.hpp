#pragma once

// Constellation geometry: Walker shell generation, circular-orbit
// propagation, ground-site positions, ranges, delays and visibility.
//
// Model assumptions:
// - Two-body circular orbits, no J2 or drag.
// - One Earth-centered frame for everything. Satellites follow their
//   orbital planes; ground sites rotate about +z at the sidereal rate,
//   with longitude 0 aligned with +x at t = 0.
// - All functions here are pure; callers may invoke them from any
//   number of threads.

#include <cmath>
#include <string>
#include <vector>

#include "satnet/constants.hpp"
#include "satnet/error.hpp"

namespace satnet {

// One Walker shell: `num_orbits` evenly spaced planes at a common
// altitude and inclination, `sats_per_orbit` satellites per plane.
struct ShellSpec {
  std::string name;
  double altitude_km = 0.0;
  int num_orbits = 0;
  int sats_per_orbit = 0;
  double inclination_deg = 0.0;
  int phasing_factor = 0;
  // Spread of ascending nodes. <= 0 means "apply the default rule":
  // 360 deg for Walker-Delta shells, 180 deg for near-polar Walker-Star
  // shells (inclination >= 80 deg).
  double raan_span_deg = 0.0;

  int total_satellites() const { return num_orbits * sats_per_orbit; }

  double effective_raan_span_deg() const {
    if (raan_span_deg > 0.0) return raan_span_deg;
    return inclination_deg < 80.0 ? 360.0 : 180.0;
  }

  // A shell is Walker-Star when its planes span a half circle; the
  // counter-rotating seam is then left unwired by the ISL grid.
  bool is_walker_star() const { return effective_raan_span_deg() <= 180.0; }
};

struct GroundSiteSpec {
  std::string name;
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
  double altitude_km = 0.0;
  double min_elevation_deg = 25.0;
};

// One satellite's fixed orbital parameters within a shell.
struct SatelliteElement {
  std::string shell_name;
  int orbit_index = 0;
  int slot_index = 0;
  double raan_rad = 0.0;
  double phase_rad = 0.0;
  double inclination_rad = 0.0;
  double semi_major_axis_km = 0.0;
};

// Position in the shared Earth-centered frame at time t.
struct EcefPosition {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double t = 0.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline void validate_shell(const ShellSpec& spec) {
  if (spec.name.empty())
    throw ValidationError("shell: name must be non-empty");
  if (spec.altitude_km <= 0.0)
    throw ValidationError("shell '" + spec.name + "': altitude_km must be > 0");
  if (spec.num_orbits < 1)
    throw ValidationError("shell '" + spec.name + "': num_orbits must be >= 1");
  if (spec.sats_per_orbit < 1)
    throw ValidationError("shell '" + spec.name + "': sats_per_orbit must be >= 1");
  if (spec.inclination_deg <= 0.0 || spec.inclination_deg > 180.0)
    throw ValidationError("shell '" + spec.name +
                          "': inclination_deg must be in (0, 180]");
  if (spec.phasing_factor < 0)
    throw ValidationError("shell '" + spec.name + "': phasing_factor must be >= 0");
}

inline void validate_ground_site(const GroundSiteSpec& site) {
  if (site.name.empty())
    throw ValidationError("ground site: name must be non-empty");
  if (site.latitude_deg < -90.0 || site.latitude_deg > 90.0)
    throw ValidationError("ground site '" + site.name +
                          "': latitude_deg must be in [-90, 90]");
  if (site.longitude_deg <= -180.0 || site.longitude_deg > 180.0)
    throw ValidationError("ground site '" + site.name +
                          "': longitude_deg must be in (-180, 180]");
  if (site.min_elevation_deg < 0.0 || site.min_elevation_deg >= 90.0)
    throw ValidationError("ground site '" + site.name +
                          "': min_elevation_deg must be in [0, 90)");
  if (site.altitude_km < 0.0)
    throw ValidationError("ground site '" + site.name +
                          "': altitude_km must be >= 0");
}

// Lays out a full shell. Orbit o gets raan = o * span / num_orbits;
// slot k of orbit o sits at phase
//   2*pi*k / sats_per_orbit + 2*pi*phasing_factor*o / (num_orbits*sats_per_orbit).
inline std::vector<SatelliteElement> generate_shell(const ShellSpec& spec) {
  validate_shell(spec);
  const double span_rad = constants::deg_to_rad(spec.effective_raan_span_deg());
  const double incl_rad = constants::deg_to_rad(spec.inclination_deg);
  const double a_km = constants::kEarthRadiusKm + spec.altitude_km;
  const int p = spec.num_orbits;
  const int s = spec.sats_per_orbit;

  std::vector<SatelliteElement> elements;
  elements.reserve(static_cast<size_t>(p) * static_cast<size_t>(s));
  for (int o = 0; o < p; ++o) {
    const double raan = span_rad * o / p;
    const double inter_plane_shift =
        2.0 * constants::kPi * spec.phasing_factor * o / (static_cast<double>(p) * s);
    for (int k = 0; k < s; ++k) {
      SatelliteElement e;
      e.shell_name = spec.name;
      e.orbit_index = o;
      e.slot_index = k;
      e.raan_rad = raan;
      e.phase_rad = 2.0 * constants::kPi * k / s + inter_plane_shift;
      e.inclination_rad = incl_rad;
      e.semi_major_axis_km = a_km;
      elements.push_back(std::move(e));
    }
  }
  return elements;
}

// Orbital period from the semi-major axis, T = 2*pi*sqrt(a^3 / mu).
inline double orbital_period_s(double semi_major_axis_km) {
  const double a3 = semi_major_axis_km * semi_major_axis_km * semi_major_axis_km;
  return 2.0 * constants::kPi * std::sqrt(a3 / constants::kMuEarth);
}

// Position at time t: advance the argument of latitude at the mean
// motion, then rotate the in-plane point by inclination about the
// ascending-node axis and by RAAN about +z.
inline EcefPosition propagate_satellite(const SatelliteElement& elem, double t) {
  const double a = elem.semi_major_axis_km;
  const double mean_motion = 2.0 * constants::kPi / orbital_period_s(a);
  const double u = elem.phase_rad + mean_motion * t;

  const double cos_u = std::cos(u);
  const double sin_u = std::sin(u);
  const double cos_i = std::cos(elem.inclination_rad);
  const double sin_i = std::sin(elem.inclination_rad);
  const double cos_raan = std::cos(elem.raan_rad);
  const double sin_raan = std::sin(elem.raan_rad);

  EcefPosition pos;
  pos.x = a * (cos_u * cos_raan - sin_u * cos_i * sin_raan);
  pos.y = a * (cos_u * sin_raan + sin_u * cos_i * cos_raan);
  pos.z = a * (sin_u * sin_i);
  pos.t = t;
  return pos;
}

// Ground sites ride the rotating Earth: the site's meridian advances
// about +z at the sidereal rate.
inline EcefPosition ground_site_position(const GroundSiteSpec& site, double t) {
  validate_ground_site(site);
  const double r = constants::kEarthRadiusKm + site.altitude_km;
  const double lat = constants::deg_to_rad(site.latitude_deg);
  const double lon = constants::deg_to_rad(site.longitude_deg) +
                     constants::kEarthRotationRadPerSec * t;

  EcefPosition pos;
  pos.x = r * std::cos(lat) * std::cos(lon);
  pos.y = r * std::cos(lat) * std::sin(lon);
  pos.z = r * std::sin(lat);
  pos.t = t;
  return pos;
}

struct RangeAndDelay {
  double distance_km = 0.0;
  double delay_ms = 0.0;
};

inline RangeAndDelay slant_range_and_delay(const EcefPosition& p, const EcefPosition& q) {
  if (p.t != q.t)
    throw ContractViolation("slant_range_and_delay: positions have different timestamps");
  const double dx = p.x - q.x;
  const double dy = p.y - q.y;
  const double dz = p.z - q.z;
  RangeAndDelay out;
  out.distance_km = std::sqrt(dx * dx + dy * dy + dz * dz);
  out.delay_ms = constants::delay_ms_for_distance(out.distance_km);
  return out;
}

struct ElevationResult {
  double elevation_deg = 0.0;
  bool visible = false;
};

// Elevation of the satellite above the site's local horizon:
// sin(el) = ((sat - site) . site_hat) / |sat - site|.
inline ElevationResult elevation_and_visibility(const EcefPosition& site_pos,
                                                const EcefPosition& sat_pos,
                                                double min_elevation_deg) {
  if (site_pos.t != sat_pos.t)
    throw ContractViolation("elevation_and_visibility: positions have different timestamps");
  const double site_norm = site_pos.norm();
  if (site_norm == 0.0)
    throw ContractViolation("elevation_and_visibility: site at the origin has no horizon");

  const double dx = sat_pos.x - site_pos.x;
  const double dy = sat_pos.y - site_pos.y;
  const double dz = sat_pos.z - site_pos.z;
  const double d = std::sqrt(dx * dx + dy * dy + dz * dz);

  ElevationResult out;
  if (d == 0.0) {
    // Coincident points: treat as zenith.
    out.elevation_deg = 90.0;
    out.visible = 90.0 >= min_elevation_deg;
    return out;
  }
  const double sin_el =
      (dx * site_pos.x + dy * site_pos.y + dz * site_pos.z) / (d * site_norm);
  const double clamped = std::fmax(-1.0, std::fmin(1.0, sin_el));
  out.elevation_deg = constants::rad_to_deg(std::asin(clamped));
  out.visible = out.elevation_deg >= min_elevation_deg;
  return out;
}

}  // namespace satnet
