#pragma once

// Record types stored in the key-value database, one struct per key
// namespace: machines/, nodes/, links/, apps/. JSON encoding is
// canonical: nlohmann::json keeps object keys sorted, so two equal
// records always serialize to identical bytes.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "satnet/geometry.hpp"

namespace satnet {

using Json = nlohmann::json;

enum class NodeType { satellite, ground_station, terminal_user, router, content_provider };

inline std::string to_string(NodeType t) {
  switch (t) {
    case NodeType::satellite: return "satellite";
    case NodeType::ground_station: return "ground_station";
    case NodeType::terminal_user: return "terminal_user";
    case NodeType::router: return "router";
    case NodeType::content_provider: return "content_provider";
  }
  return "unknown";
}

inline NodeType node_type_from_string(const std::string& s) {
  if (s == "satellite") return NodeType::satellite;
  if (s == "ground_station") return NodeType::ground_station;
  if (s == "terminal_user") return NodeType::terminal_user;
  if (s == "router") return NodeType::router;
  if (s == "content_provider") return NodeType::content_provider;
  throw ValidationError("unknown node type '" + s + "'");
}

enum class LinkType { gsl, intra_orbit_isl, inter_orbit_isl, terrestrial };

inline std::string to_string(LinkType t) {
  switch (t) {
    case LinkType::gsl: return "gsl";
    case LinkType::intra_orbit_isl: return "intra_orbit_isl";
    case LinkType::inter_orbit_isl: return "inter_orbit_isl";
    case LinkType::terrestrial: return "terrestrial";
  }
  return "unknown";
}

inline LinkType link_type_from_string(const std::string& s) {
  if (s == "gsl") return LinkType::gsl;
  if (s == "intra_orbit_isl") return LinkType::intra_orbit_isl;
  if (s == "inter_orbit_isl") return LinkType::inter_orbit_isl;
  if (s == "terrestrial") return LinkType::terrestrial;
  throw ValidationError("unknown link type '" + s + "'");
}

enum class LinkState { connected, disconnected };

inline std::string to_string(LinkState s) {
  return s == LinkState::connected ? "connected" : "disconnected";
}

struct MachineRecord {
  int machine_index = 0;
  int weight = 1;  // capacity signal for placement
  std::string nic_ip;
  std::string nic_mac;
};

struct NodeRecord {
  std::string node_id;
  NodeType node_type = NodeType::satellite;
  std::vector<std::string> link_ids;
  int machine_index = -1;  // -1 until placement assigns one
  // Geometry: exactly one of these is set, matching node_type.
  std::optional<SatelliteElement> satellite;
  std::optional<GroundSiteSpec> ground_site;
  std::optional<int> orbit_index;
  std::map<std::string, std::string> user_defined;
};

struct LinkRecord {
  std::string link_id;
  std::string endpoint_a;
  std::string endpoint_b;
  LinkType link_type = LinkType::gsl;
  std::string address;
  double distance_km = 0.0;
  double delay_ms = 0.0;
  double bandwidth_mbps = 0.0;  // carried as metadata only
  LinkState state = LinkState::connected;
  std::map<std::string, std::string> user_defined;
};

struct ApplicationRecord {
  std::string app_id;
  std::string node_id;
  double launch_timestamp = 0.0;
  std::optional<int> as_index;
  std::map<std::string, std::string> user_defined;
};

// ---- JSON encoding ---------------------------------------------------

inline Json to_json(const MachineRecord& m) {
  return Json{{"machine_index", m.machine_index},
              {"weight", m.weight},
              {"nic_ip", m.nic_ip},
              {"nic_mac", m.nic_mac}};
}

inline MachineRecord machine_from_json(const Json& j) {
  MachineRecord m;
  m.machine_index = j.at("machine_index").get<int>();
  m.weight = j.at("weight").get<int>();
  m.nic_ip = j.at("nic_ip").get<std::string>();
  m.nic_mac = j.at("nic_mac").get<std::string>();
  return m;
}

inline Json to_json(const SatelliteElement& e) {
  return Json{{"shell_name", e.shell_name},
              {"orbit_index", e.orbit_index},
              {"slot_index", e.slot_index},
              {"raan_rad", e.raan_rad},
              {"phase_rad", e.phase_rad},
              {"inclination_rad", e.inclination_rad},
              {"semi_major_axis_km", e.semi_major_axis_km}};
}

inline SatelliteElement satellite_element_from_json(const Json& j) {
  SatelliteElement e;
  e.shell_name = j.at("shell_name").get<std::string>();
  e.orbit_index = j.at("orbit_index").get<int>();
  e.slot_index = j.at("slot_index").get<int>();
  e.raan_rad = j.at("raan_rad").get<double>();
  e.phase_rad = j.at("phase_rad").get<double>();
  e.inclination_rad = j.at("inclination_rad").get<double>();
  e.semi_major_axis_km = j.at("semi_major_axis_km").get<double>();
  return e;
}

inline Json to_json(const GroundSiteSpec& g) {
  return Json{{"name", g.name},
              {"latitude_deg", g.latitude_deg},
              {"longitude_deg", g.longitude_deg},
              {"altitude_km", g.altitude_km},
              {"min_elevation_deg", g.min_elevation_deg}};
}

inline GroundSiteSpec ground_site_from_json(const Json& j) {
  GroundSiteSpec g;
  g.name = j.at("name").get<std::string>();
  g.latitude_deg = j.at("latitude_deg").get<double>();
  g.longitude_deg = j.at("longitude_deg").get<double>();
  g.altitude_km = j.at("altitude_km").get<double>();
  g.min_elevation_deg = j.at("min_elevation_deg").get<double>();
  return g;
}

inline Json to_json(const NodeRecord& n) {
  Json j{{"node_id", n.node_id},
         {"node_type", to_string(n.node_type)},
         {"link_ids", n.link_ids},
         {"machine_index", n.machine_index},
         {"user_defined", n.user_defined}};
  if (n.satellite) j["satellite"] = to_json(*n.satellite);
  if (n.ground_site) j["ground_site"] = to_json(*n.ground_site);
  if (n.orbit_index) j["orbit_index"] = *n.orbit_index;
  return j;
}

inline NodeRecord node_from_json(const Json& j) {
  NodeRecord n;
  n.node_id = j.at("node_id").get<std::string>();
  n.node_type = node_type_from_string(j.at("node_type").get<std::string>());
  n.link_ids = j.at("link_ids").get<std::vector<std::string>>();
  n.machine_index = j.at("machine_index").get<int>();
  n.user_defined = j.at("user_defined").get<std::map<std::string, std::string>>();
  if (j.contains("satellite")) n.satellite = satellite_element_from_json(j.at("satellite"));
  if (j.contains("ground_site")) n.ground_site = ground_site_from_json(j.at("ground_site"));
  if (j.contains("orbit_index")) n.orbit_index = j.at("orbit_index").get<int>();
  return n;
}

inline Json to_json(const LinkRecord& l) {
  return Json{{"link_id", l.link_id},
              {"endpoint_a", l.endpoint_a},
              {"endpoint_b", l.endpoint_b},
              {"link_type", to_string(l.link_type)},
              {"address", l.address},
              {"distance_km", l.distance_km},
              {"delay_ms", l.delay_ms},
              {"bandwidth_mbps", l.bandwidth_mbps},
              {"state", to_string(l.state)},
              {"user_defined", l.user_defined}};
}

inline LinkRecord link_from_json(const Json& j) {
  LinkRecord l;
  l.link_id = j.at("link_id").get<std::string>();
  l.endpoint_a = j.at("endpoint_a").get<std::string>();
  l.endpoint_b = j.at("endpoint_b").get<std::string>();
  l.link_type = link_type_from_string(j.at("link_type").get<std::string>());
  l.address = j.at("address").get<std::string>();
  l.distance_km = j.at("distance_km").get<double>();
  l.delay_ms = j.at("delay_ms").get<double>();
  l.bandwidth_mbps = j.at("bandwidth_mbps").get<double>();
  l.state = j.at("state").get<std::string>() == "connected" ? LinkState::connected
                                                            : LinkState::disconnected;
  l.user_defined = j.at("user_defined").get<std::map<std::string, std::string>>();
  return l;
}

inline Json to_json(const ApplicationRecord& a) {
  Json j{{"app_id", a.app_id},
         {"node_id", a.node_id},
         {"launch_timestamp", a.launch_timestamp},
         {"user_defined", a.user_defined}};
  if (a.as_index) j["as_index"] = *a.as_index;
  return j;
}

inline ApplicationRecord application_from_json(const Json& j) {
  ApplicationRecord a;
  a.app_id = j.at("app_id").get<std::string>();
  a.node_id = j.at("node_id").get<std::string>();
  a.launch_timestamp = j.at("launch_timestamp").get<double>();
  a.user_defined = j.at("user_defined").get<std::map<std::string, std::string>>();
  if (j.contains("as_index")) a.as_index = j.at("as_index").get<int>();
  return a;
}

template <typename Record>
std::string canonical_dump(const Record& r) {
  return to_json(r).dump();
}

}  // namespace satnet
