#pragma once

// Time-varying network graph. A TopologySnapshot is an immutable value:
// every mutation goes through a list of LinkEvents so that snapshots can
// be diffed, published, replayed and compared byte-for-byte.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "satnet/records.hpp"

namespace satnet {

// ---- identifiers -----------------------------------------------------

inline std::string pad_index(int v, int width = 3) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%0*d", width, v);
  return buf;
}

inline std::string satellite_node_id(const SatelliteElement& e) {
  return "sat-" + e.shell_name + "-" + pad_index(e.orbit_index) + "-" +
         pad_index(e.slot_index);
}

inline std::string ground_site_node_id(const GroundSiteSpec& g) { return "gs-" + g.name; }

inline std::string intra_orbit_link_id(const std::string& shell, int orbit, int slot) {
  return "isl-" + shell + "-intra-" + pad_index(orbit) + "-" + pad_index(slot);
}

inline std::string inter_orbit_link_id(const std::string& shell, int orbit, int slot) {
  return "isl-" + shell + "-inter-" + pad_index(orbit) + "-" + pad_index(slot);
}

inline std::string gsl_link_id(const std::string& site, const std::string& shell,
                               int slot = 0) {
  std::string id = "gsl-" + site + "-" + shell;
  if (slot > 0) id += "-s" + pad_index(slot, 2);
  return id;
}

// Deterministic /30 address derived from the link id (FNV-1a, 22 bits).
inline std::string link_address(const std::string& link_id) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : link_id) {
    h ^= c;
    h *= 1099511628211ull;
  }
  const uint32_t sub = static_cast<uint32_t>(h & 0x3FFFFF) << 2;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "10.%u.%u.%u/30", (sub >> 16) & 0xFF, (sub >> 8) & 0xFF,
                sub & 0xFF);
  return buf;
}

// ---- snapshot and events ----------------------------------------------

struct TopologySnapshot {
  double t = 0.0;
  std::map<std::string, NodeRecord> nodes;
  std::map<std::string, LinkRecord> links;
};

struct LinkEvent {
  // Replay order within an epoch: destroy < handover < create < update_delay.
  enum class Kind { destroy = 0, handover = 1, create = 2, update_delay = 3 };

  Kind kind = Kind::create;
  std::string link_id;
  std::optional<LinkRecord> record;   // create / handover payload
  std::optional<double> distance_km;  // update_delay payload
  std::optional<double> delay_ms;     // update_delay payload
};

inline std::string to_string(LinkEvent::Kind k) {
  switch (k) {
    case LinkEvent::Kind::destroy: return "destroy";
    case LinkEvent::Kind::handover: return "handover";
    case LinkEvent::Kind::create: return "create";
    case LinkEvent::Kind::update_delay: return "update_delay";
  }
  return "unknown";
}

inline LinkEvent::Kind link_event_kind_from_string(const std::string& s) {
  if (s == "destroy") return LinkEvent::Kind::destroy;
  if (s == "handover") return LinkEvent::Kind::handover;
  if (s == "create") return LinkEvent::Kind::create;
  if (s == "update_delay") return LinkEvent::Kind::update_delay;
  throw ValidationError("unknown link event kind '" + s + "'");
}

inline Json to_json(const LinkEvent& ev) {
  Json j{{"kind", to_string(ev.kind)}, {"link_id", ev.link_id}};
  if (ev.record) j["record"] = to_json(*ev.record);
  if (ev.distance_km) j["distance_km"] = *ev.distance_km;
  if (ev.delay_ms) j["delay_ms"] = *ev.delay_ms;
  return j;
}

inline LinkEvent link_event_from_json(const Json& j) {
  LinkEvent ev;
  ev.kind = link_event_kind_from_string(j.at("kind").get<std::string>());
  ev.link_id = j.at("link_id").get<std::string>();
  if (j.contains("record")) ev.record = link_from_json(j.at("record"));
  if (j.contains("distance_km")) ev.distance_km = j.at("distance_km").get<double>();
  if (j.contains("delay_ms")) ev.delay_ms = j.at("delay_ms").get<double>();
  return ev;
}

inline Json to_json(const TopologySnapshot& s) {
  Json nodes = Json::object();
  for (const auto& [id, n] : s.nodes) nodes[id] = to_json(n);
  Json links = Json::object();
  for (const auto& [id, l] : s.links) links[id] = to_json(l);
  return Json{{"t", s.t}, {"nodes", nodes}, {"links", links}};
}

// One JSON object per line: nodes first, then links, key order fixed.
inline std::string snapshot_to_jsonl(const TopologySnapshot& s) {
  std::string out;
  for (const auto& [id, n] : s.nodes)
    out += Json{{"kind", "node"}, {"record", to_json(n)}}.dump() + "\n";
  for (const auto& [id, l] : s.links)
    out += Json{{"kind", "link"}, {"record", to_json(l)}}.dump() + "\n";
  return out;
}

inline std::string events_to_jsonl(const std::vector<LinkEvent>& events) {
  std::string out;
  for (const auto& ev : events) out += to_json(ev).dump() + "\n";
  return out;
}

// ---- positions ---------------------------------------------------------

inline EcefPosition node_position(const NodeRecord& n, double t) {
  if (n.satellite) return propagate_satellite(*n.satellite, t);
  if (n.ground_site) return ground_site_position(*n.ground_site, t);
  throw ContractViolation("node '" + n.node_id + "' has no geometry");
}

// ---- graph construction -------------------------------------------------

// +grid wiring for one shell: every satellite links to its intra-orbit
// successor and to the same slot in the next orbit. Walker-Delta wraps
// the last orbit back to the first; Walker-Star leaves the seam open.
// Distances stay zero here; update_link_delays fills them per epoch.
inline std::vector<LinkRecord> build_isl_grid(const std::vector<SatelliteElement>& shell,
                                              bool star) {
  if (shell.empty()) throw ContractViolation("build_isl_grid: empty shell");

  int num_orbits = 0;
  int sats_per_orbit = 0;
  for (const auto& e : shell) {
    num_orbits = std::max(num_orbits, e.orbit_index + 1);
    sats_per_orbit = std::max(sats_per_orbit, e.slot_index + 1);
  }
  const std::string& shell_name = shell.front().shell_name;

  std::vector<LinkRecord> links;
  std::set<std::pair<std::string, std::string>> seen;
  auto add = [&](const std::string& id, LinkType type, int oa, int ka, int ob, int kb) {
    SatelliteElement a, b;
    a.shell_name = b.shell_name = shell_name;
    a.orbit_index = oa;
    a.slot_index = ka;
    b.orbit_index = ob;
    b.slot_index = kb;
    std::string na = satellite_node_id(a);
    std::string nb = satellite_node_id(b);
    auto key = na < nb ? std::make_pair(na, nb) : std::make_pair(nb, na);
    if (!seen.insert(key).second) return;  // degenerate ring of two
    LinkRecord l;
    l.link_id = id;
    l.endpoint_a = na;
    l.endpoint_b = nb;
    l.link_type = type;
    l.address = link_address(id);
    l.state = LinkState::connected;
    links.push_back(std::move(l));
  };

  for (int o = 0; o < num_orbits; ++o) {
    if (sats_per_orbit >= 2) {
      for (int k = 0; k < sats_per_orbit; ++k)
        add(intra_orbit_link_id(shell_name, o, k), LinkType::intra_orbit_isl, o, k, o,
            (k + 1) % sats_per_orbit);
    }
    const bool last = o == num_orbits - 1;
    if (num_orbits >= 2 && (!last || !star)) {
      for (int k = 0; k < sats_per_orbit; ++k)
        add(inter_orbit_link_id(shell_name, o, k), LinkType::inter_orbit_isl, o, k,
            (o + 1) % num_orbits, k);
    }
  }
  return links;
}

// ---- GSL policy ---------------------------------------------------------

struct GslPolicy {
  // How many simultaneous GSLs a ground site may hold per shell.
  int gsls_per_site_per_shell = 1;
};

namespace detail {

inline LinkRecord make_gsl_record(const std::string& link_id, const std::string& site_id,
                                  const std::string& sat_id, double distance_km,
                                  double delay_ms) {
  LinkRecord l;
  l.link_id = link_id;
  l.endpoint_a = site_id;
  l.endpoint_b = sat_id;
  l.link_type = LinkType::gsl;
  l.address = link_address(link_id);
  l.distance_km = distance_km;
  l.delay_ms = delay_ms;
  l.state = LinkState::connected;
  return l;
}

}  // namespace detail

// Default policy: nearest visible satellite above the site's elevation
// mask, with hysteresis (a still-visible attachment is kept even when a
// closer satellite appears). Range ties break on the smaller node id.
// Emits events only for changes; losing all candidates destroys the GSL.
inline std::vector<LinkEvent> assign_gsls(const TopologySnapshot& snapshot, double t,
                                          const GslPolicy& policy = {}) {
  // Shell name -> satellites with positions at t.
  struct Candidate {
    const NodeRecord* node;
    EcefPosition pos;
  };
  std::map<std::string, std::vector<Candidate>> by_shell;
  for (const auto& [id, n] : snapshot.nodes) {
    if (n.node_type != NodeType::satellite || !n.satellite) continue;
    by_shell[n.satellite->shell_name].push_back({&n, propagate_satellite(*n.satellite, t)});
  }

  std::vector<LinkEvent> events;
  for (const auto& [site_id, site_node] : snapshot.nodes) {
    if (site_node.node_type != NodeType::ground_station || !site_node.ground_site) continue;
    const auto& site = *site_node.ground_site;
    const EcefPosition site_pos = ground_site_position(site, t);

    for (const auto& [shell_name, sats] : by_shell) {
      // Visible candidates for this site/shell, nearest first.
      struct Ranked {
        double distance_km;
        std::string node_id;
        double delay_ms;
      };
      std::vector<Ranked> visible;
      for (const auto& c : sats) {
        const auto el = elevation_and_visibility(site_pos, c.pos, site.min_elevation_deg);
        if (!el.visible) continue;
        const auto rd = slant_range_and_delay(site_pos, c.pos);
        visible.push_back({rd.distance_km, c.node->node_id, rd.delay_ms});
      }
      std::sort(visible.begin(), visible.end(), [](const Ranked& a, const Ranked& b) {
        if (a.distance_km != b.distance_km) return a.distance_km < b.distance_km;
        return a.node_id < b.node_id;
      });

      const int slots = std::max(1, policy.gsls_per_site_per_shell);
      std::set<std::string> taken;  // satellites already kept by a slot
      // First pass: hysteresis, keep still-visible attachments.
      std::vector<bool> keep(slots, false);
      std::vector<std::string> current(slots);
      for (int j = 0; j < slots; ++j) {
        const std::string id = gsl_link_id(site.name, shell_name, j);
        auto it = snapshot.links.find(id);
        if (it == snapshot.links.end()) continue;
        current[j] = it->second.endpoint_b;
        const bool still_visible =
            std::any_of(visible.begin(), visible.end(),
                        [&](const Ranked& r) { return r.node_id == current[j]; });
        if (still_visible) {
          keep[j] = true;
          taken.insert(current[j]);
        }
      }
      // Second pass: point the remaining slots at the nearest unused
      // satellite, or tear them down when none is left.
      for (int j = 0; j < slots; ++j) {
        if (keep[j]) continue;
        const std::string id = gsl_link_id(site.name, shell_name, j);
        const Ranked* pick = nullptr;
        for (const auto& r : visible) {
          if (taken.count(r.node_id)) continue;
          pick = &r;
          break;
        }
        if (pick == nullptr) {
          if (!current[j].empty()) {
            LinkEvent ev;
            ev.kind = LinkEvent::Kind::destroy;
            ev.link_id = id;
            events.push_back(std::move(ev));
          }
          continue;
        }
        taken.insert(pick->node_id);
        LinkEvent ev;
        ev.kind = current[j].empty() ? LinkEvent::Kind::create : LinkEvent::Kind::handover;
        ev.link_id = id;
        ev.record = detail::make_gsl_record(id, site_id, pick->node_id, pick->distance_km,
                                            pick->delay_ms);
        events.push_back(std::move(ev));
      }
    }
  }

  std::stable_sort(events.begin(), events.end(), [](const LinkEvent& a, const LinkEvent& b) {
    if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    return a.link_id < b.link_id;
  });
  return events;
}

// Recompute distance and delay of every connected link at time t.
// Emits update_delay only when the delay moved by more than epsilon_ms,
// so constant-range links (intra-orbit rings) stay quiet.
inline std::vector<LinkEvent> update_link_delays(const TopologySnapshot& snapshot, double t,
                                                 double epsilon_ms = 0.001) {
  std::vector<LinkEvent> events;
  for (const auto& [id, link] : snapshot.links) {
    if (link.state != LinkState::connected) continue;
    const auto a = snapshot.nodes.find(link.endpoint_a);
    const auto b = snapshot.nodes.find(link.endpoint_b);
    if (a == snapshot.nodes.end() || b == snapshot.nodes.end())
      throw ContractViolation("link '" + id + "' references a missing node");
    const auto rd =
        slant_range_and_delay(node_position(a->second, t), node_position(b->second, t));
    if (std::abs(rd.delay_ms - link.delay_ms) > epsilon_ms) {
      LinkEvent ev;
      ev.kind = LinkEvent::Kind::update_delay;
      ev.link_id = id;
      ev.distance_km = rd.distance_km;
      ev.delay_ms = rd.delay_ms;
      events.push_back(std::move(ev));
    }
  }
  return events;
}

// ---- event application and diffing ---------------------------------------

namespace detail {

inline void rebuild_link_ids(TopologySnapshot& s) {
  for (auto& [id, n] : s.nodes) n.link_ids.clear();
  for (const auto& [id, l] : s.links) {
    auto a = s.nodes.find(l.endpoint_a);
    if (a != s.nodes.end()) a->second.link_ids.push_back(id);
    auto b = s.nodes.find(l.endpoint_b);
    if (b != s.nodes.end()) b->second.link_ids.push_back(id);
  }
  for (auto& [id, n] : s.nodes) std::sort(n.link_ids.begin(), n.link_ids.end());
}

}  // namespace detail

// Applies an ordered event batch, returning the successor snapshot.
inline TopologySnapshot apply_events(const TopologySnapshot& snapshot,
                                     const std::vector<LinkEvent>& events, double new_t) {
  TopologySnapshot next = snapshot;
  next.t = new_t;
  for (const auto& ev : events) {
    switch (ev.kind) {
      case LinkEvent::Kind::destroy:
        next.links.erase(ev.link_id);
        break;
      case LinkEvent::Kind::create:
        if (!ev.record) throw ContractViolation("create event without record payload");
        next.links[ev.link_id] = *ev.record;
        break;
      case LinkEvent::Kind::handover: {
        if (!ev.record) throw ContractViolation("handover event without record payload");
        if (next.links.find(ev.link_id) == next.links.end())
          throw ContractViolation("handover for unknown link '" + ev.link_id + "'");
        next.links[ev.link_id] = *ev.record;
        break;
      }
      case LinkEvent::Kind::update_delay: {
        auto it = next.links.find(ev.link_id);
        if (it == next.links.end())
          throw ContractViolation("update_delay for unknown link '" + ev.link_id + "'");
        if (ev.distance_km) it->second.distance_km = *ev.distance_km;
        if (ev.delay_ms) it->second.delay_ms = *ev.delay_ms;
        break;
      }
    }
  }
  detail::rebuild_link_ids(next);
  return next;
}

// Minimal event set transforming prev's link table into next's.
// Ordering: destroy < handover < create < update_delay, link id within.
inline std::vector<LinkEvent> diff_snapshots(const TopologySnapshot& prev,
                                             const TopologySnapshot& next) {
  {
    auto pi = prev.nodes.begin();
    auto ni = next.nodes.begin();
    for (; pi != prev.nodes.end() && ni != next.nodes.end(); ++pi, ++ni)
      if (pi->first != ni->first) break;
    if (pi != prev.nodes.end() || ni != next.nodes.end())
      throw ContractViolation("diff_snapshots: node universes differ");
  }

  std::vector<LinkEvent> events;
  for (const auto& [id, l] : prev.links) {
    if (next.links.find(id) == next.links.end()) {
      LinkEvent ev;
      ev.kind = LinkEvent::Kind::destroy;
      ev.link_id = id;
      events.push_back(std::move(ev));
    }
  }
  for (const auto& [id, nl] : next.links) {
    auto it = prev.links.find(id);
    if (it == prev.links.end()) {
      LinkEvent ev;
      ev.kind = LinkEvent::Kind::create;
      ev.link_id = id;
      ev.record = nl;
      events.push_back(std::move(ev));
      continue;
    }
    const LinkRecord& pl = it->second;
    if (to_json(pl) == to_json(nl)) continue;
    const bool endpoint_change = pl.endpoint_a != nl.endpoint_a || pl.endpoint_b != nl.endpoint_b;
    const bool delay_only = !endpoint_change && pl.link_type == nl.link_type &&
                            pl.state == nl.state && pl.address == nl.address &&
                            pl.bandwidth_mbps == nl.bandwidth_mbps &&
                            pl.user_defined == nl.user_defined;
    LinkEvent ev;
    ev.link_id = id;
    if (nl.link_type == LinkType::gsl && endpoint_change) {
      ev.kind = LinkEvent::Kind::handover;
      ev.record = nl;
    } else if (delay_only) {
      ev.kind = LinkEvent::Kind::update_delay;
      ev.distance_km = nl.distance_km;
      ev.delay_ms = nl.delay_ms;
    } else {
      // Structural change outside the handover vocabulary: replace.
      ev.kind = LinkEvent::Kind::create;
      ev.record = nl;
    }
    events.push_back(std::move(ev));
  }

  std::stable_sort(events.begin(), events.end(), [](const LinkEvent& a, const LinkEvent& b) {
    if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    return a.link_id < b.link_id;
  });
  return events;
}

// ---- shortest path --------------------------------------------------------

struct PathResult {
  std::vector<std::string> node_ids;
  std::vector<std::string> link_ids;
  double total_delay_ms = 0.0;
};

// Minimal-delay route over connected links (Dijkstra). Absent result
// means dst is unreachable from src.
inline std::optional<PathResult> shortest_delay_path(const TopologySnapshot& snapshot,
                                                     const std::string& src,
                                                     const std::string& dst) {
  if (snapshot.nodes.find(src) == snapshot.nodes.end())
    throw ContractViolation("shortest_delay_path: unknown src '" + src + "'");
  if (snapshot.nodes.find(dst) == snapshot.nodes.end())
    throw ContractViolation("shortest_delay_path: unknown dst '" + dst + "'");

  if (src == dst) return PathResult{{src}, {}, 0.0};

  struct Edge {
    std::string to;
    std::string link_id;
    double delay_ms;
  };
  std::map<std::string, std::vector<Edge>> adj;
  for (const auto& [id, l] : snapshot.links) {
    if (l.state != LinkState::connected) continue;
    adj[l.endpoint_a].push_back({l.endpoint_b, id, l.delay_ms});
    adj[l.endpoint_b].push_back({l.endpoint_a, id, l.delay_ms});
  }

  using QueueItem = std::pair<double, std::string>;
  std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>> queue;
  std::map<std::string, double> dist;
  std::map<std::string, std::pair<std::string, std::string>> parent;  // node -> (prev, link)
  dist[src] = 0.0;
  queue.push({0.0, src});
  while (!queue.empty()) {
    auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    if (u == dst) break;
    auto it = adj.find(u);
    if (it == adj.end()) continue;
    for (const auto& e : it->second) {
      const double nd = d + e.delay_ms;
      auto di = dist.find(e.to);
      if (di == dist.end() || nd < di->second) {
        dist[e.to] = nd;
        parent[e.to] = {u, e.link_id};
        queue.push({nd, e.to});
      }
    }
  }
  if (dist.find(dst) == dist.end()) return std::nullopt;

  PathResult res;
  res.total_delay_ms = dist[dst];
  std::string cur = dst;
  while (cur != src) {
    res.node_ids.push_back(cur);
    auto& [prev, link] = parent[cur];
    res.link_ids.push_back(link);
    cur = prev;
  }
  res.node_ids.push_back(src);
  std::reverse(res.node_ids.begin(), res.node_ids.end());
  std::reverse(res.link_ids.begin(), res.link_ids.end());
  return res;
}

}  // namespace satnet
