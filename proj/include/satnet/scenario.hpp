#pragma once

// Scenario files: the single JSON input describing a whole emulation
// run. Parsing is strict (unknown fields are rejected with their JSON
// path) and collects every violation instead of stopping at the first.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "satnet/dataplane.hpp"
#include "satnet/records.hpp"
#include "satnet/topology.hpp"

namespace satnet {

struct EmulationConfig {
  bool is_leader = true;
  std::string interface_name = "eth0";
  int instance_capacity = 64;
  int parallel_num = 0;  // 0 means "number of processor cores"
  double epoch_step_s = 10.0;
  double duration_s = 0.0;
  LinkMode link_mode = LinkMode::ebpf;
  double epsilon_ms = 0.001;        // delay-update suppression threshold
  int gsls_per_site_per_shell = 1;  // GSL policy knob
  int node_task_cost = 10;          // simulated ticks per node task
  int link_task_cost = 1;           // simulated ticks per link task

  int effective_parallel_num() const {
    if (parallel_num > 0) return parallel_num;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }
};

struct NodeTypeProfile {
  std::string image;
  std::map<std::string, std::string> container_envs;
  std::string resource_limit;
};

struct ScenarioFile {
  std::vector<ShellSpec> shells;
  std::vector<GroundSiteSpec> ground_sites;
  std::vector<MachineRecord> machines;
  std::vector<ApplicationRecord> apps;
  EmulationConfig config;
  std::map<std::string, NodeTypeProfile> node_type_profiles;
};

// ---- serialization ----------------------------------------------------

inline Json to_json(const EmulationConfig& c) {
  return Json{{"is_leader", c.is_leader},
              {"interface_name", c.interface_name},
              {"instance_capacity", c.instance_capacity},
              {"parallel_num", c.parallel_num},
              {"epoch_step_s", c.epoch_step_s},
              {"duration_s", c.duration_s},
              {"link_mode", to_string(c.link_mode)},
              {"epsilon_ms", c.epsilon_ms},
              {"gsls_per_site_per_shell", c.gsls_per_site_per_shell},
              {"node_task_cost", c.node_task_cost},
              {"link_task_cost", c.link_task_cost}};
}

inline Json to_json(const NodeTypeProfile& p) {
  return Json{{"image", p.image},
              {"container_envs", p.container_envs},
              {"resource_limit", p.resource_limit}};
}

inline Json to_json(const ShellSpec& s) {
  return Json{{"name", s.name},
              {"altitude_km", s.altitude_km},
              {"num_orbits", s.num_orbits},
              {"sats_per_orbit", s.sats_per_orbit},
              {"inclination_deg", s.inclination_deg},
              {"phasing_factor", s.phasing_factor},
              {"raan_span_deg", s.raan_span_deg}};
}

inline Json to_json(const ScenarioFile& sc) {
  Json shells = Json::array();
  for (const auto& s : sc.shells) shells.push_back(to_json(s));
  Json sites = Json::array();
  for (const auto& g : sc.ground_sites) sites.push_back(to_json(g));
  Json machines = Json::array();
  for (const auto& m : sc.machines) machines.push_back(to_json(m));
  Json apps = Json::array();
  for (const auto& a : sc.apps) apps.push_back(to_json(a));
  Json profiles = Json::object();
  for (const auto& [k, v] : sc.node_type_profiles) profiles[k] = to_json(v);
  return Json{{"shells", shells},         {"ground_sites", sites},
              {"machines", machines},     {"apps", apps},
              {"config", to_json(sc.config)}, {"node_type_profiles", profiles}};
}

// ---- strict parsing ----------------------------------------------------

namespace detail {

// Accumulates violations with JSON-path context.
struct ParseContext {
  std::vector<std::string>* violations;

  void fail(const std::string& path, const std::string& what) const {
    violations->push_back(path + ": " + what);
  }

  void check_fields(const Json& obj, const std::string& path,
                    const std::vector<std::string>& allowed) const {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool ok = false;
      for (const auto& a : allowed) ok = ok || a == it.key();
      if (!ok) fail(path + "." + it.key(), "unknown field");
    }
  }

  template <typename T>
  bool read(const Json& obj, const std::string& path, const std::string& key, T& out,
            bool required) const {
    if (!obj.contains(key)) {
      if (required) fail(path + "." + key, "missing required field");
      return false;
    }
    try {
      out = obj.at(key).get<T>();
      return true;
    } catch (const Json::exception&) {
      fail(path + "." + key, "wrong type");
      return false;
    }
  }
};

inline bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

}  // namespace detail

// Parses and validates a scenario object, collecting every violation.
inline ScenarioFile scenario_from_json(const Json& j) {
  std::vector<std::string> violations;
  detail::ParseContext ctx{&violations};
  ScenarioFile sc;

  if (!j.is_object()) {
    throw ScenarioError("scenario: top level must be a JSON object",
                        {"$: not an object"});
  }
  ctx.check_fields(j, "$",
                   {"shells", "ground_sites", "machines", "apps", "config",
                    "node_type_profiles"});

  // config
  if (j.contains("config")) {
    const Json& c = j.at("config");
    const std::string path = "config";
    ctx.check_fields(c, path,
                     {"is_leader", "interface_name", "instance_capacity", "parallel_num",
                      "epoch_step_s", "duration_s", "link_mode", "epsilon_ms",
                      "gsls_per_site_per_shell", "node_task_cost", "link_task_cost"});
    ctx.read(c, path, "is_leader", sc.config.is_leader, false);
    ctx.read(c, path, "interface_name", sc.config.interface_name, false);
    ctx.read(c, path, "instance_capacity", sc.config.instance_capacity, false);
    ctx.read(c, path, "parallel_num", sc.config.parallel_num, false);
    ctx.read(c, path, "epoch_step_s", sc.config.epoch_step_s, false);
    ctx.read(c, path, "duration_s", sc.config.duration_s, false);
    std::string mode;
    if (ctx.read(c, path, "link_mode", mode, false)) {
      try {
        sc.config.link_mode = link_mode_from_string(mode);
      } catch (const ValidationError& e) {
        ctx.fail(path + ".link_mode", e.what());
      }
    }
    ctx.read(c, path, "epsilon_ms", sc.config.epsilon_ms, false);
    ctx.read(c, path, "gsls_per_site_per_shell", sc.config.gsls_per_site_per_shell, false);
    ctx.read(c, path, "node_task_cost", sc.config.node_task_cost, false);
    ctx.read(c, path, "link_task_cost", sc.config.link_task_cost, false);

    if (sc.config.instance_capacity < 1)
      ctx.fail(path + ".instance_capacity", "must be >= 1");
    if (sc.config.parallel_num < 0) ctx.fail(path + ".parallel_num", "must be >= 0");
    if (sc.config.epoch_step_s <= 0.0) ctx.fail(path + ".epoch_step_s", "must be > 0");
    if (sc.config.duration_s < 0.0) ctx.fail(path + ".duration_s", "must be >= 0");
    if (sc.config.epsilon_ms < 0.0) ctx.fail(path + ".epsilon_ms", "must be >= 0");
    if (sc.config.gsls_per_site_per_shell < 1)
      ctx.fail(path + ".gsls_per_site_per_shell", "must be >= 1");
    if (sc.config.node_task_cost < 1) ctx.fail(path + ".node_task_cost", "must be >= 1");
    if (sc.config.link_task_cost < 1) ctx.fail(path + ".link_task_cost", "must be >= 1");
  }

  // shells
  if (j.contains("shells")) {
    if (!j.at("shells").is_array()) {
      ctx.fail("shells", "must be an array");
    } else {
      int idx = 0;
      for (const Json& s : j.at("shells")) {
        const std::string path = "shells[" + std::to_string(idx) + "]";
        ShellSpec shell;
        ctx.check_fields(s, path,
                         {"name", "altitude_km", "num_orbits", "sats_per_orbit",
                          "inclination_deg", "phasing_factor", "raan_span_deg"});
        ctx.read(s, path, "name", shell.name, true);
        ctx.read(s, path, "altitude_km", shell.altitude_km, true);
        ctx.read(s, path, "num_orbits", shell.num_orbits, true);
        ctx.read(s, path, "sats_per_orbit", shell.sats_per_orbit, true);
        ctx.read(s, path, "inclination_deg", shell.inclination_deg, true);
        ctx.read(s, path, "phasing_factor", shell.phasing_factor, false);
        ctx.read(s, path, "raan_span_deg", shell.raan_span_deg, false);

        if (!shell.name.empty() && !detail::valid_name(shell.name))
          ctx.fail(path + ".name", "must contain only [A-Za-z0-9._-]");
        if (shell.altitude_km <= 0.0) ctx.fail(path + ".altitude_km", "must be > 0");
        if (shell.num_orbits < 1) ctx.fail(path + ".num_orbits", "must be >= 1");
        if (shell.sats_per_orbit < 1) ctx.fail(path + ".sats_per_orbit", "must be >= 1");
        if (shell.inclination_deg <= 0.0 || shell.inclination_deg > 180.0)
          ctx.fail(path + ".inclination_deg", "must be in (0, 180]");
        if (shell.phasing_factor < 0) ctx.fail(path + ".phasing_factor", "must be >= 0");
        if (shell.raan_span_deg < 0.0) ctx.fail(path + ".raan_span_deg", "must be >= 0");
        for (const auto& other : sc.shells)
          if (other.name == shell.name) ctx.fail(path + ".name", "duplicate shell name");
        sc.shells.push_back(std::move(shell));
        ++idx;
      }
    }
  }

  // ground sites
  if (j.contains("ground_sites")) {
    if (!j.at("ground_sites").is_array()) {
      ctx.fail("ground_sites", "must be an array");
    } else {
      int idx = 0;
      for (const Json& g : j.at("ground_sites")) {
        const std::string path = "ground_sites[" + std::to_string(idx) + "]";
        GroundSiteSpec site;
        ctx.check_fields(g, path,
                         {"name", "latitude_deg", "longitude_deg", "altitude_km",
                          "min_elevation_deg"});
        ctx.read(g, path, "name", site.name, true);
        ctx.read(g, path, "latitude_deg", site.latitude_deg, true);
        ctx.read(g, path, "longitude_deg", site.longitude_deg, true);
        ctx.read(g, path, "altitude_km", site.altitude_km, false);
        ctx.read(g, path, "min_elevation_deg", site.min_elevation_deg, false);

        if (!site.name.empty() && !detail::valid_name(site.name))
          ctx.fail(path + ".name", "must contain only [A-Za-z0-9._-]");
        if (site.latitude_deg < -90.0 || site.latitude_deg > 90.0)
          ctx.fail(path + ".latitude_deg", "must be in [-90, 90]");
        if (site.longitude_deg <= -180.0 || site.longitude_deg > 180.0)
          ctx.fail(path + ".longitude_deg", "must be in (-180, 180]");
        if (site.min_elevation_deg < 0.0 || site.min_elevation_deg >= 90.0)
          ctx.fail(path + ".min_elevation_deg", "must be in [0, 90)");
        if (site.altitude_km < 0.0) ctx.fail(path + ".altitude_km", "must be >= 0");
        for (const auto& other : sc.ground_sites)
          if (other.name == site.name) ctx.fail(path + ".name", "duplicate site name");
        sc.ground_sites.push_back(std::move(site));
        ++idx;
      }
    }
  }

  // machines
  if (j.contains("machines")) {
    if (!j.at("machines").is_array()) {
      ctx.fail("machines", "must be an array");
    } else {
      int idx = 0;
      for (const Json& m : j.at("machines")) {
        const std::string path = "machines[" + std::to_string(idx) + "]";
        MachineRecord rec;
        ctx.check_fields(m, path, {"machine_index", "weight", "nic_ip", "nic_mac"});
        rec.machine_index = idx;
        ctx.read(m, path, "machine_index", rec.machine_index, false);
        rec.weight = 0;
        ctx.read(m, path, "weight", rec.weight, false);
        if (rec.weight == 0) rec.weight = sc.config.instance_capacity;
        ctx.read(m, path, "nic_ip", rec.nic_ip, false);
        ctx.read(m, path, "nic_mac", rec.nic_mac, false);
        if (rec.nic_ip.empty()) rec.nic_ip = "192.168.0." + std::to_string(10 + idx);
        if (rec.nic_mac.empty()) {
          char buf[24];
          std::snprintf(buf, sizeof(buf), "02:00:00:00:00:%02x", (10 + idx) & 0xFF);
          rec.nic_mac = buf;
        }

        if (rec.machine_index != idx)
          ctx.fail(path + ".machine_index", "indices must be dense from 0");
        if (rec.weight < 1) ctx.fail(path + ".weight", "must be >= 1");
        sc.machines.push_back(std::move(rec));
        ++idx;
      }
    }
  }
  if (sc.machines.empty()) ctx.fail("machines", "at least one machine is required");

  // apps
  if (j.contains("apps")) {
    if (!j.at("apps").is_array()) {
      ctx.fail("apps", "must be an array");
    } else {
      int idx = 0;
      for (const Json& a : j.at("apps")) {
        const std::string path = "apps[" + std::to_string(idx) + "]";
        ApplicationRecord rec;
        ctx.check_fields(a, path,
                         {"app_id", "node_id", "launch_timestamp", "as_index",
                          "user_defined"});
        ctx.read(a, path, "app_id", rec.app_id, true);
        ctx.read(a, path, "node_id", rec.node_id, true);
        ctx.read(a, path, "launch_timestamp", rec.launch_timestamp, true);
        int as_index = 0;
        if (ctx.read(a, path, "as_index", as_index, false)) rec.as_index = as_index;
        ctx.read(a, path, "user_defined", rec.user_defined, false);

        if (rec.launch_timestamp < 0.0)
          ctx.fail(path + ".launch_timestamp", "must be >= 0");
        for (const auto& other : sc.apps)
          if (other.app_id == rec.app_id) ctx.fail(path + ".app_id", "duplicate app id");
        sc.apps.push_back(std::move(rec));
        ++idx;
      }
    }
  }

  // node type profiles
  if (j.contains("node_type_profiles")) {
    const Json& p = j.at("node_type_profiles");
    if (!p.is_object()) {
      ctx.fail("node_type_profiles", "must be an object");
    } else {
      for (auto it = p.begin(); it != p.end(); ++it) {
        const std::string path = "node_type_profiles." + it.key();
        try {
          node_type_from_string(it.key());
        } catch (const ValidationError&) {
          ctx.fail(path, "unknown node type");
        }
        NodeTypeProfile profile;
        ctx.check_fields(it.value(), path, {"image", "container_envs", "resource_limit"});
        ctx.read(it.value(), path, "image", profile.image, false);
        ctx.read(it.value(), path, "container_envs", profile.container_envs, false);
        ctx.read(it.value(), path, "resource_limit", profile.resource_limit, false);
        sc.node_type_profiles[it.key()] = std::move(profile);
      }
    }
  }

  // Cross references: app node ids must exist in the generated universe.
  if (violations.empty()) {
    std::set<std::string> node_ids;
    for (const auto& shell : sc.shells) {
      for (int o = 0; o < shell.num_orbits; ++o)
        for (int k = 0; k < shell.sats_per_orbit; ++k) {
          SatelliteElement e;
          e.shell_name = shell.name;
          e.orbit_index = o;
          e.slot_index = k;
          node_ids.insert(satellite_node_id(e));
        }
    }
    for (const auto& site : sc.ground_sites) node_ids.insert(ground_site_node_id(site));
    for (size_t i = 0; i < sc.apps.size(); ++i) {
      if (!node_ids.count(sc.apps[i].node_id))
        ctx.fail("apps[" + std::to_string(i) + "].node_id",
                 "references unknown node '" + sc.apps[i].node_id + "'");
    }
  }

  if (!violations.empty())
    throw ScenarioError("scenario has " + std::to_string(violations.size()) +
                            " validation error(s)",
                        violations);
  return sc;
}

inline ScenarioFile parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot read scenario file '" + path + "'",
                               {path + ": file not readable"});
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ScenarioError("scenario file '" + path + "' is not valid JSON",
                        {path + ": " + e.what()});
  }
  return scenario_from_json(j);
}

// ---- built-in constellations -------------------------------------------

// name, altitude km, orbits, sats per orbit, inclination deg
struct ConstellationPreset {
  const char* key;
  const char* shell_name;
  double altitude_km;
  int num_orbits;
  int sats_per_orbit;
  double inclination_deg;
};

inline const std::vector<ConstellationPreset>& constellation_presets() {
  static const std::vector<ConstellationPreset> presets = {
      {"iridium", "iridium", 780.0, 6, 11, 86.4},
      {"oneweb", "oneweb", 1200.0, 18, 40, 87.9},
      {"kuiper", "kuiper", 630.0, 34, 34, 51.9},
      {"starlink-shell-1", "starlink1", 550.0, 72, 22, 53.0},
      {"starlink-shell-2", "starlink2", 540.0, 72, 22, 53.2},
      {"starlink-shell-3", "starlink3", 570.0, 36, 20, 70.0},
      {"starlink-shell-4", "starlink4", 560.0, 6, 58, 97.6},
      {"starlink-shell-5", "starlink5", 560.0, 4, 43, 97.6},
  };
  return presets;
}

inline ShellSpec shell_from_preset(const ConstellationPreset& p) {
  ShellSpec s;
  s.name = p.shell_name;
  s.altitude_km = p.altitude_km;
  s.num_orbits = p.num_orbits;
  s.sats_per_orbit = p.sats_per_orbit;
  s.inclination_deg = p.inclination_deg;
  return s;
}

// Builds a ready-to-run example scenario. `constellation` is one of the
// preset keys or "starlink-5shell" for the five-shell stack.
inline ScenarioFile generate_scenario(const std::string& constellation) {
  ScenarioFile sc;
  if (constellation == "starlink-5shell") {
    for (const auto& p : constellation_presets())
      if (std::string(p.key).rfind("starlink-", 0) == 0) sc.shells.push_back(shell_from_preset(p));
  } else {
    bool found = false;
    for (const auto& p : constellation_presets()) {
      if (constellation == p.key) {
        sc.shells.push_back(shell_from_preset(p));
        found = true;
        break;
      }
    }
    if (!found) {
      std::string known;
      for (const auto& p : constellation_presets()) known += std::string(" ") + p.key;
      throw ValidationError("unknown constellation '" + constellation + "'; known:" + known +
                            " starlink-5shell");
    }
  }

  GroundSiteSpec site_a;
  site_a.name = "beijing";
  site_a.latitude_deg = 39.9;
  site_a.longitude_deg = 116.4;
  site_a.min_elevation_deg = 10.0;
  GroundSiteSpec site_b;
  site_b.name = "nairobi";
  site_b.latitude_deg = -1.3;
  site_b.longitude_deg = 36.8;
  site_b.min_elevation_deg = 10.0;
  sc.ground_sites = {site_a, site_b};

  for (int i = 0; i < 3; ++i) {
    MachineRecord m;
    m.machine_index = i;
    m.weight = 64;
    m.nic_ip = "192.168.0." + std::to_string(10 + i);
    char buf[18];
    std::snprintf(buf, sizeof(buf), "02:00:00:00:00:%02x", 10 + i);
    m.nic_mac = buf;
    sc.machines.push_back(m);
  }

  ApplicationRecord probe;
  probe.app_id = "probe-beijing";
  probe.node_id = "gs-beijing";
  probe.launch_timestamp = 0.0;
  probe.user_defined["request_timestamps"] = "0,60,120";
  sc.apps.push_back(probe);

  sc.config.instance_capacity = 64;
  sc.config.parallel_num = 4;
  sc.config.epoch_step_s = 10.0;
  sc.config.duration_s = 600.0;

  NodeTypeProfile sat_profile;
  sat_profile.image = "satnode:latest";
  sat_profile.container_envs["TZ"] = "UTC";
  sat_profile.resource_limit = "1c2g";
  sc.node_type_profiles["satellite"] = sat_profile;
  NodeTypeProfile gs_profile;
  gs_profile.image = "gsnode:latest";
  gs_profile.resource_limit = "1c2g";
  sc.node_type_profiles["ground_station"] = gs_profile;
  return sc;
}

}  // namespace satnet
