#pragma once

// Assignment of node instances and links to emulation machines. The
// scheduler walks the instance list once, charging each placement
// against the machine's remaining weight; when a machine's budget runs
// out it is refreshed and the cursor moves on, wrapping around the
// machine list. A link is placed on the machine of whichever endpoint
// is assigned first and is never assigned twice.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "satnet/records.hpp"

namespace satnet {

struct PlacementResult {
  std::map<int, std::vector<std::string>> instances_by_machine;
  std::map<int, std::vector<std::string>> links_by_machine;
  std::vector<int> weight_list;
  std::vector<int> weight_left_list;
  int cursor = 0;

  // Reverse view: node id -> machine index.
  std::map<std::string, int> machine_of_instance() const {
    std::map<std::string, int> out;
    for (const auto& [machine, instances] : instances_by_machine)
      for (const auto& id : instances) out[id] = machine;
    return out;
  }
};

inline void validate_machines(const std::vector<MachineRecord>& machines) {
  if (machines.empty()) throw ValidationError("placement: machine list is empty");
  for (size_t i = 0; i < machines.size(); ++i) {
    if (machines[i].machine_index != static_cast<int>(i))
      throw ValidationError("placement: machine indices must be dense from 0");
    if (machines[i].weight < 1)
      throw ValidationError("placement: machine " + std::to_string(i) +
                            " has weight < 1");
  }
}

// `instances` must already be in deterministic order (sorted node ids).
inline PlacementResult weighted_round_robin(const std::vector<MachineRecord>& machines,
                                            const std::vector<std::string>& instances,
                                            const std::vector<LinkRecord>& links) {
  validate_machines(machines);

  // Incident links per node, in input order.
  std::map<std::string, std::vector<const LinkRecord*>> incident;
  for (const auto& l : links) {
    incident[l.endpoint_a].push_back(&l);
    incident[l.endpoint_b].push_back(&l);
  }

  PlacementResult result;
  for (const auto& m : machines) {
    result.weight_list.push_back(m.weight);
    result.weight_left_list.push_back(m.weight);
    result.instances_by_machine[m.machine_index];
    result.links_by_machine[m.machine_index];
  }

  std::set<std::string> unassigned_links;
  for (const auto& l : links) unassigned_links.insert(l.link_id);

  int i = 0;
  for (const auto& instance : instances) {
    result.instances_by_machine[i].push_back(instance);
    auto it = incident.find(instance);
    if (it != incident.end()) {
      for (const LinkRecord* l : it->second) {
        // Consume-on-assignment: the first endpoint's machine wins.
        if (unassigned_links.erase(l->link_id) > 0)
          result.links_by_machine[i].push_back(l->link_id);
      }
    }
    if (--result.weight_left_list[i] <= 0) {
      result.weight_left_list[i] = result.weight_list[i];
      i = (i + 1) % static_cast<int>(machines.size());
    }
  }
  result.cursor = i;
  return result;
}

enum class LinkLocality { intra_machine, inter_machine };

// A link crosses machines exactly when its endpoints were placed apart.
inline std::map<std::string, LinkLocality> classify_links(
    const PlacementResult& placement, const std::vector<LinkRecord>& links) {
  const auto machine_of = placement.machine_of_instance();
  std::map<std::string, LinkLocality> out;
  for (const auto& l : links) {
    const auto a = machine_of.find(l.endpoint_a);
    const auto b = machine_of.find(l.endpoint_b);
    if (a == machine_of.end())
      throw ContractViolation("classify_links: endpoint '" + l.endpoint_a +
                              "' of link '" + l.link_id + "' is not placed");
    if (b == machine_of.end())
      throw ContractViolation("classify_links: endpoint '" + l.endpoint_b +
                              "' of link '" + l.link_id + "' is not placed");
    out[l.link_id] = a->second == b->second ? LinkLocality::intra_machine
                                            : LinkLocality::inter_machine;
  }
  return out;
}

}  // namespace satnet
