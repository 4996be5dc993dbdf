#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "satnet/geometry.hpp"

using namespace satnet;
namespace consts = satnet::constants;

namespace {

// Independent period oracle: T = 2*pi*sqrt(a^3/mu).
double period_oracle(double a_km) {
  return 2.0 * consts::kPi * std::sqrt(a_km * a_km * a_km / consts::kMuEarth);
}

// Closed-form elevation from the spherical triangle (central angle psi,
// site radius R, satellite radius r): sin(el) = (r cos psi - R) / slant.
double elevation_oracle_deg(double central_angle_rad, double site_radius_km,
                            double sat_radius_km) {
  const double r = sat_radius_km;
  const double R = site_radius_km;
  const double d = std::sqrt(R * R + r * r - 2.0 * R * r * std::cos(central_angle_rad));
  return consts::rad_to_deg(std::asin((r * std::cos(central_angle_rad) - R) / d));
}

ShellSpec starlink_shell_1() {
  ShellSpec s;
  s.name = "starlink1";
  s.altitude_km = 550.0;
  s.num_orbits = 72;
  s.sats_per_orbit = 22;
  s.inclination_deg = 53.0;
  return s;
}

double distance(const EcefPosition& a, const EcefPosition& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                   (a.z - b.z) * (a.z - b.z));
}

}  // namespace

TEST_CASE("generate_shell produces num_orbits x sats_per_orbit elements",
          "[geometry][shell]") {
  const auto elems = generate_shell(starlink_shell_1());
  REQUIRE(elems.size() == 1584);

  // raan = o * span/P, phase = 2 pi k / S (+ phasing shift, zero here)
  for (const auto& e : elems) {
    REQUIRE(e.raan_rad == Catch::Approx(consts::deg_to_rad(360.0) * e.orbit_index / 72.0));
    REQUIRE(e.phase_rad ==
            Catch::Approx(2.0 * consts::kPi * e.slot_index / 22.0).margin(1e-12));
    REQUIRE(e.semi_major_axis_km == Catch::Approx(6921.0));
  }
}

TEST_CASE("generate_shell minimal case", "[geometry][shell]") {
  ShellSpec s;
  s.name = "mini";
  s.altitude_km = 500.0;
  s.num_orbits = 1;
  s.sats_per_orbit = 1;
  s.inclination_deg = 53.0;
  const auto elems = generate_shell(s);
  REQUIRE(elems.size() == 1);
  REQUIRE(elems[0].raan_rad == 0.0);
  REQUIRE(elems[0].phase_rad == 0.0);
}

TEST_CASE("generate_shell applies the phasing factor across planes", "[geometry][shell]") {
  ShellSpec s;
  s.name = "phased";
  s.altitude_km = 600.0;
  s.num_orbits = 4;
  s.sats_per_orbit = 8;
  s.inclination_deg = 53.0;
  s.phasing_factor = 1;
  const auto elems = generate_shell(s);
  for (const auto& e : elems) {
    const double expected = 2.0 * consts::kPi * e.slot_index / 8.0 +
                            2.0 * consts::kPi * 1.0 * e.orbit_index / (4.0 * 8.0);
    REQUIRE(e.phase_rad == Catch::Approx(expected).margin(1e-12));
  }
}

TEST_CASE("five Starlink shells total 4408 satellites", "[geometry][shell]") {
  struct Row {
    double alt;
    int orbits, per_orbit;
    double incl;
  };
  const Row rows[] = {
      {550.0, 72, 22, 53.0},  {540.0, 72, 22, 53.2}, {570.0, 36, 20, 70.0},
      {560.0, 6, 58, 97.6},   {560.0, 4, 43, 97.6},
  };
  size_t total = 0;
  for (const auto& r : rows) {
    ShellSpec s;
    s.name = "shell";
    s.altitude_km = r.alt;
    s.num_orbits = r.orbits;
    s.sats_per_orbit = r.per_orbit;
    s.inclination_deg = r.incl;
    total += generate_shell(s).size();
  }
  REQUIRE(total == 4408);
}

TEST_CASE("generate_shell validation names the offending field", "[geometry][shell]") {
  ShellSpec s = starlink_shell_1();
  s.altitude_km = -1.0;
  REQUIRE_THROWS_WITH(generate_shell(s), Catch::Matchers::ContainsSubstring("altitude_km"));
  s = starlink_shell_1();
  s.num_orbits = 0;
  REQUIRE_THROWS_WITH(generate_shell(s), Catch::Matchers::ContainsSubstring("num_orbits"));
  s = starlink_shell_1();
  s.inclination_deg = 0.0;
  REQUIRE_THROWS_WITH(generate_shell(s),
                      Catch::Matchers::ContainsSubstring("inclination_deg"));
}

TEST_CASE("raan span default: delta shells 360, near-polar star shells 180",
          "[geometry][shell]") {
  ShellSpec delta = starlink_shell_1();
  REQUIRE(delta.effective_raan_span_deg() == 360.0);
  REQUIRE_FALSE(delta.is_walker_star());

  ShellSpec star = starlink_shell_1();
  star.inclination_deg = 97.6;
  REQUIRE(star.effective_raan_span_deg() == 180.0);
  REQUIRE(star.is_walker_star());

  star.raan_span_deg = 360.0;  // explicit override wins
  REQUIRE(star.effective_raan_span_deg() == 360.0);
}

TEST_CASE("propagation returns to the start after one period", "[geometry][orbit]") {
  SatelliteElement e;
  e.shell_name = "x";
  e.raan_rad = 0.7;
  e.phase_rad = 1.1;
  e.inclination_rad = consts::deg_to_rad(53.0);
  e.semi_major_axis_km = 6921.0;

  const double period = period_oracle(6921.0);
  REQUIRE(period == Catch::Approx(5730.127089334606).epsilon(1e-12));

  const auto p0 = propagate_satellite(e, 0.0);
  REQUIRE(p0.norm() == Catch::Approx(6921.0).epsilon(1e-12));

  auto p1 = propagate_satellite(e, period);
  p1.t = p0.t;
  REQUIRE(distance(p0, p1) < 1e-6);
}

TEST_CASE("half a period reaches the antipodal point of the orbit plane",
          "[geometry][orbit]") {
  SatelliteElement e;
  e.shell_name = "x";
  e.raan_rad = 2.0;
  e.phase_rad = 0.3;
  e.inclination_rad = consts::deg_to_rad(86.4);
  e.semi_major_axis_km = 6921.0;

  const auto p0 = propagate_satellite(e, 0.0);
  const auto ph = propagate_satellite(e, period_oracle(6921.0) / 2.0);
  const double dot =
      (p0.x * ph.x + p0.y * ph.y + p0.z * ph.z) / (p0.norm() * ph.norm());
  REQUIRE(dot == Catch::Approx(-1.0).margin(1e-9));
}

TEST_CASE("orbit radius is constant", "[geometry][orbit]") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> alt(300.0, 2000.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * consts::kPi);
  std::uniform_real_distribution<double> time(0.0, 100000.0);
  for (int i = 0; i < 200; ++i) {
    SatelliteElement e;
    e.shell_name = "r";
    e.raan_rad = angle(rng);
    e.phase_rad = angle(rng);
    e.inclination_rad = angle(rng) / 2.0;
    e.semi_major_axis_km = consts::kEarthRadiusKm + alt(rng);
    const auto p = propagate_satellite(e, time(rng));
    REQUIRE(p.norm() == Catch::Approx(e.semi_major_axis_km).epsilon(1e-6));
  }
}

TEST_CASE("ground site epoch and rotation", "[geometry][ground]") {
  GroundSiteSpec g;
  g.name = "origin";
  g.latitude_deg = 0.0;
  g.longitude_deg = 0.0;

  const auto p0 = ground_site_position(g, 0.0);
  REQUIRE(p0.x == Catch::Approx(consts::kEarthRadiusKm));
  REQUIRE(p0.y == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(p0.z == Catch::Approx(0.0).margin(1e-12));

  // Quarter sidereal day swings the site to +y. The rotation oracle
  // R*(cos wt, sin wt, 0) leaves a ~10 m residual along x because
  // 86164/4 s is not exactly a quarter turn at this rotation rate.
  const double tq = 86164.0 / 4.0;
  const auto pq = ground_site_position(g, tq);
  const double wt = consts::kEarthRotationRadPerSec * tq;
  REQUIRE(pq.x == Catch::Approx(consts::kEarthRadiusKm * std::cos(wt)).margin(1e-9));
  REQUIRE(pq.y == Catch::Approx(consts::kEarthRadiusKm * std::sin(wt)).margin(1e-9));
  REQUIRE(std::abs(pq.x) < 0.02);
  REQUIRE(pq.y == Catch::Approx(consts::kEarthRadiusKm).margin(1e-3));

  GroundSiteSpec pole;
  pole.name = "north";
  pole.latitude_deg = 90.0;
  pole.longitude_deg = 10.0;
  for (double t : {0.0, 1000.0, 50000.0}) {
    const auto pp = ground_site_position(pole, t);
    REQUIRE(pp.x == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(pp.y == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(pp.z == Catch::Approx(consts::kEarthRadiusKm));
  }
}

TEST_CASE("slant range and delay", "[geometry][range]") {
  EcefPosition p{1000.0, 2000.0, 3000.0, 5.0};
  SECTION("coincident points") {
    const auto rd = slant_range_and_delay(p, p);
    REQUIRE(rd.distance_km == 0.0);
    REQUIRE(rd.delay_ms == 0.0);
  }
  SECTION("one light-millisecond") {
    EcefPosition q = p;
    q.x += 299.792458;
    const auto rd = slant_range_and_delay(p, q);
    REQUIRE(rd.delay_ms == Catch::Approx(1.0).epsilon(1e-12));
  }
  SECTION("mismatched timestamps are rejected") {
    EcefPosition q = p;
    q.t = 6.0;
    REQUIRE_THROWS_AS(slant_range_and_delay(p, q), ContractViolation);
  }
  SECTION("delay is symmetric") {
    EcefPosition q{-500.0, 42.0, 7000.0, 5.0};
    REQUIRE(slant_range_and_delay(p, q).delay_ms == slant_range_and_delay(q, p).delay_ms);
  }
}

TEST_CASE("adjacent intra-orbit satellites sit one chord apart", "[geometry][range]") {
  const auto elems = generate_shell(starlink_shell_1());
  const auto p0 = propagate_satellite(elems[0], 0.0);
  const auto p1 = propagate_satellite(elems[1], 0.0);
  const auto rd = slant_range_and_delay(p0, p1);
  // chord = 2 (R + h) sin(pi / S)
  REQUIRE(rd.distance_km == Catch::Approx(1969.921991378813).epsilon(1e-9));
  REQUIRE(rd.delay_ms == Catch::Approx(6.570952466652157).epsilon(1e-9));
}

TEST_CASE("elevation and visibility", "[geometry][elevation]") {
  GroundSiteSpec g;
  g.name = "site";
  g.latitude_deg = 0.0;
  g.longitude_deg = 0.0;
  const auto site = ground_site_position(g, 0.0);

  SECTION("zenith satellite") {
    EcefPosition sat{consts::kEarthRadiusKm + 550.0, 0.0, 0.0, 0.0};
    const auto el = elevation_and_visibility(site, sat, 25.0);
    REQUIRE(el.elevation_deg == Catch::Approx(90.0));
    REQUIRE(el.visible);
  }
  SECTION("antipodal satellite is below the horizon") {
    EcefPosition sat{-(consts::kEarthRadiusKm + 550.0), 0.0, 0.0, 0.0};
    const auto el = elevation_and_visibility(site, sat, 25.0);
    REQUIRE(el.elevation_deg < 0.0);
    REQUIRE_FALSE(el.visible);
  }
  SECTION("matches the spherical-triangle oracle at 30 degrees separation") {
    const double r = consts::kEarthRadiusKm + 550.0;
    const double psi = consts::deg_to_rad(30.0);
    EcefPosition sat{r * std::cos(psi), r * std::sin(psi), 0.0, 0.0};
    const auto el = elevation_and_visibility(site, sat, 25.0);
    const double expected = elevation_oracle_deg(psi, consts::kEarthRadiusKm, r);
    REQUIRE(expected == Catch::Approx(-6.221396293052339).epsilon(1e-12));
    REQUIRE(el.elevation_deg == Catch::Approx(expected).margin(1e-9));
    REQUIRE_FALSE(el.visible);
  }
  SECTION("site at origin is rejected") {
    EcefPosition origin{0.0, 0.0, 0.0, 0.0};
    EcefPosition sat{7000.0, 0.0, 0.0, 0.0};
    REQUIRE_THROWS_AS(elevation_and_visibility(origin, sat, 25.0), ContractViolation);
  }
}

TEST_CASE("elevation is antisymmetric under horizon reflection", "[geometry][elevation]") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> coord(-8000.0, 8000.0);
  GroundSiteSpec g;
  g.name = "site";
  g.latitude_deg = 37.0;
  g.longitude_deg = 12.0;
  const auto site = ground_site_position(g, 0.0);
  const double sn = site.norm();

  for (int i = 0; i < 100; ++i) {
    EcefPosition sat{coord(rng), coord(rng), coord(rng), 0.0};
    // Reflect across the site's horizon plane.
    const double along =
        ((sat.x - site.x) * site.x + (sat.y - site.y) * site.y + (sat.z - site.z) * site.z) /
        (sn * sn);
    EcefPosition mirror{sat.x - 2.0 * along * site.x, sat.y - 2.0 * along * site.y,
                        sat.z - 2.0 * along * site.z, 0.0};
    const auto a = elevation_and_visibility(site, sat, 0.0);
    const auto b = elevation_and_visibility(site, mirror, 0.0);
    REQUIRE(a.elevation_deg == Catch::Approx(-b.elevation_deg).margin(1e-9));
  }
}

TEST_CASE("visibility is monotone in the elevation mask", "[geometry][elevation]") {
  GroundSiteSpec g;
  g.name = "site";
  g.latitude_deg = 10.0;
  g.longitude_deg = 100.0;
  const auto site = ground_site_position(g, 0.0);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> coord(-8000.0, 8000.0);
  for (int i = 0; i < 50; ++i) {
    EcefPosition sat{coord(rng), coord(rng), coord(rng), 0.0};
    bool prev = true;
    for (double mask : {0.0, 10.0, 25.0, 45.0, 80.0}) {
      const bool vis = elevation_and_visibility(site, sat, mask).visible;
      if (!prev) REQUIRE_FALSE(vis);
      prev = vis;
    }
  }
}
