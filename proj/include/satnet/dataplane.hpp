#pragma once

// Executable model of the two virtual-link implementations.
//
// Legacy links are built from modeled Linux devices: a bridge per link,
// veth attachments, and VXLAN devices for inter-machine spans. eBPF
// links keep the devices fixed and wire everything through per-machine
// redirect maps keyed by source MAC; point-to-point traffic means each
// source maps to exactly one destination.
//
// Nothing here sleeps or talks to a kernel. Costs are counted, not
// timed: every modeled device operation, map write, encapsulation and
// MAC rewrite increments a per-machine counter, which gives the
// efficiency proxies their deterministic signal.
//
// Lock order: the interface directory lock is never taken while a
// machine lock is held; remote MACs are resolved before locking.

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "satnet/records.hpp"

namespace satnet {

// 48-bit hardware address kept in the low bits of a uint64.
using MacAddress = uint64_t;

inline std::string mac_to_string(MacAddress mac) {
  char buf[18];
  std::snprintf(buf, sizeof(buf), "%02x:%02x:%02x:%02x:%02x:%02x",
                static_cast<unsigned>((mac >> 40) & 0xFF),
                static_cast<unsigned>((mac >> 32) & 0xFF),
                static_cast<unsigned>((mac >> 24) & 0xFF),
                static_cast<unsigned>((mac >> 16) & 0xFF),
                static_cast<unsigned>((mac >> 8) & 0xFF),
                static_cast<unsigned>(mac & 0xFF));
  return buf;
}

enum class Direction { ingress, egress };

enum class LinkMode { legacy, ebpf };

inline std::string to_string(LinkMode m) { return m == LinkMode::legacy ? "legacy" : "ebpf"; }

inline LinkMode link_mode_from_string(const std::string& s) {
  if (s == "legacy") return LinkMode::legacy;
  if (s == "ebpf") return LinkMode::ebpf;
  throw ValidationError("unknown link mode '" + s + "'");
}

struct Encapsulation {
  uint32_t vni = 0;
  std::string outer_src;
  std::string outer_dst;

  bool operator==(const Encapsulation&) const = default;
};

struct Frame {
  MacAddress src_mac = 0;
  MacAddress dst_mac = 0;
  Direction direction = Direction::egress;
  std::vector<uint8_t> payload;
  std::optional<Encapsulation> encapsulation;  // present only in tunnel transit

  bool operator==(const Frame&) const = default;
};

// Per-machine forwarding state of the redirect program.
struct RedirectState {
  std::map<MacAddress, MacAddress> map_dst;   // src mac -> rewritten dst mac
  std::map<MacAddress, std::string> map_fwd;  // src mac -> local interface
  std::string intf_egress;                    // gateway NIC identifier
};

struct VirtualInterface {
  std::string interface_id;
  std::string owner_node;
  MacAddress mac = 0;
  std::optional<std::string> peer;  // legacy mode bridge peer
};

// Monotone operation counters, snapshot for reporting and comparison.
struct CounterSnapshot {
  uint64_t device_creates = 0;
  uint64_t device_deletes = 0;
  uint64_t map_updates = 0;
  uint64_t encapsulations = 0;
  uint64_t decapsulations = 0;
  uint64_t mac_rewrites = 0;

  uint64_t device_ops() const { return device_creates + device_deletes; }

  CounterSnapshot operator-(const CounterSnapshot& o) const {
    return {device_creates - o.device_creates, device_deletes - o.device_deletes,
            map_updates - o.map_updates,       encapsulations - o.encapsulations,
            decapsulations - o.decapsulations, mac_rewrites - o.mac_rewrites};
  }
  CounterSnapshot& operator+=(const CounterSnapshot& o) {
    device_creates += o.device_creates;
    device_deletes += o.device_deletes;
    map_updates += o.map_updates;
    encapsulations += o.encapsulations;
    decapsulations += o.decapsulations;
    mac_rewrites += o.mac_rewrites;
    return *this;
  }
  bool operator==(const CounterSnapshot&) const = default;
};

inline Json to_json(const CounterSnapshot& c) {
  return Json{{"device_creates", c.device_creates},
              {"device_deletes", c.device_deletes},
              {"map_updates", c.map_updates},
              {"encapsulations", c.encapsulations},
              {"decapsulations", c.decapsulations},
              {"mac_rewrites", c.mac_rewrites}};
}

struct OpCounters {
  std::atomic<uint64_t> device_creates{0};
  std::atomic<uint64_t> device_deletes{0};
  // Counts redirect-entry installs and overwrites; removals ride along
  // with the operation that caused them.
  std::atomic<uint64_t> map_updates{0};
  std::atomic<uint64_t> encapsulations{0};
  std::atomic<uint64_t> decapsulations{0};
  std::atomic<uint64_t> mac_rewrites{0};

  CounterSnapshot snapshot() const {
    return {device_creates.load(), device_deletes.load(), map_updates.load(),
            encapsulations.load(), decapsulations.load(), mac_rewrites.load()};
  }
};

// Forwarding decision of the redirect program.
struct ForwardTarget {
  enum class Kind { redirect, egress_nic, up_layer_stack };
  Kind kind = Kind::up_layer_stack;
  std::string interface_id;  // set when kind == redirect

  bool operator==(const ForwardTarget&) const = default;
};

// The point-to-point redirect program. Rewrites the destination MAC
// first when the source has a map_dst entry, then picks the target:
// a map_fwd hit redirects to a local interface regardless of direction,
// otherwise egress frames leave via the gateway NIC and ingress frames
// go up the local stack.
inline ForwardTarget forward_frame(Direction direction, Frame& frame,
                                   const RedirectState& state,
                                   OpCounters* counters = nullptr) {
  auto dst = state.map_dst.find(frame.src_mac);
  if (dst != state.map_dst.end()) {
    frame.dst_mac = dst->second;
    if (counters) counters->mac_rewrites.fetch_add(1);
  }
  auto fwd = state.map_fwd.find(frame.src_mac);
  if (fwd != state.map_fwd.end()) return {ForwardTarget::Kind::redirect, fwd->second};
  if (direction == Direction::egress)
    return {ForwardTarget::Kind::egress_nic, state.intf_egress};
  return {ForwardTarget::Kind::up_layer_stack, ""};
}

// ---- machine and network models -------------------------------------------

struct LinkHandle {
  std::string link_id;
  LinkMode mode = LinkMode::ebpf;
  std::string iface_a;  // for GSLs this is the ground side
  std::string iface_b;
  bool inter_machine = false;
};

struct LinkView {
  std::string link_id;
  LinkMode mode = LinkMode::ebpf;
  std::string iface_a;
  std::string iface_b;
  int machine_a = -1;
  int machine_b = -1;
  std::string bridge_id;  // legacy links
  uint32_t vni = 0;       // inter-machine links
  int generation = 0;     // legacy handovers regenerate container ifaces
};

inline uint32_t vni_for_link(const std::string& link_id) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : link_id) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return static_cast<uint32_t>(h & 0xFFFFFF);
}

class MachineModel {
 public:
  MachineModel(int index, std::string nic_ip, std::string nic_mac)
      : index_(index), nic_ip_(std::move(nic_ip)), nic_mac_(std::move(nic_mac)) {
    redirect_.intf_egress = "nic-" + std::to_string(index);
  }

  int index() const { return index_; }
  const std::string& nic_ip() const { return nic_ip_; }
  CounterSnapshot counters() const { return counters_.snapshot(); }

  // Snapshot of the redirect maps, for assertions.
  RedirectState redirect_state() const {
    std::lock_guard<std::mutex> lock(m_);
    return redirect_;
  }

 private:
  friend class DataplaneNetwork;

  int index_;
  std::string nic_ip_;
  std::string nic_mac_;
  RedirectState redirect_;
  std::map<std::string, VirtualInterface> interfaces_;
  std::map<std::string, std::vector<std::string>> bridges_;  // bridge -> attached
  std::map<std::string, uint32_t> tunnels_;                  // link -> vni
  std::map<std::string, LinkView> links_;
  std::set<std::string> ifaces_in_use_;
  OpCounters counters_;
  mutable std::mutex m_;  // serializes mutations of this machine's state
};

// The multi-machine data plane. Link state changes act on one machine
// at a time ("halves"), so concurrent per-machine appliers touch
// disjoint state; the coordinated operations (create_link, handover,
// destroy_link, transit_inter_machine) configure every involved machine
// within a single call.
class DataplaneNetwork {
 public:
  int add_machine(const MachineRecord& m) {
    machines_.push_back(
        std::make_unique<MachineModel>(m.machine_index, m.nic_ip, m.nic_mac));
    return m.machine_index;
  }

  size_t machine_count() const { return machines_.size(); }

  MachineModel& machine(int index) {
    if (index < 0 || static_cast<size_t>(index) >= machines_.size())
      throw ContractViolation("unknown machine " + std::to_string(index));
    return *machines_[index];
  }
  const MachineModel& machine(int index) const {
    return const_cast<DataplaneNetwork*>(this)->machine(index);
  }

  CounterSnapshot total_counters() const {
    CounterSnapshot total;
    for (const auto& m : machines_) total += m->counters_.snapshot();
    return total;
  }

  // Registers a container-side interface. Interface ids are global;
  // creation is one modeled device operation on the hosting machine.
  VirtualInterface register_interface(int machine_index, const std::string& iface_id,
                                      const std::string& owner_node) {
    auto& m = machine(machine_index);
    VirtualInterface vi;
    vi.interface_id = iface_id;
    vi.owner_node = owner_node;
    {
      std::lock_guard<std::mutex> dlock(directory_m_);
      if (directory_.count(iface_id))
        throw ConflictError("interface '" + iface_id + "' already exists");
      vi.mac = next_mac_++;
      directory_[iface_id] = {machine_index, vi.mac};
      current_by_base_[base_iface(iface_id)] = iface_id;
    }
    std::lock_guard<std::mutex> mlock(m.m_);
    m.interfaces_[iface_id] = vi;
    m.counters_.device_creates.fetch_add(1);
    return vi;
  }

  void remove_interface(int machine_index, const std::string& iface_id) {
    auto& m = machine(machine_index);
    {
      std::lock_guard<std::mutex> dlock(directory_m_);
      if (directory_.erase(iface_id) == 0) return;
    }
    std::lock_guard<std::mutex> mlock(m.m_);
    m.interfaces_.erase(iface_id);
    m.ifaces_in_use_.erase(iface_id);
    m.counters_.device_deletes.fetch_add(1);
  }

  bool has_interface(const std::string& iface_id) const {
    std::lock_guard<std::mutex> lock(directory_m_);
    return directory_.count(iface_id) > 0;
  }

  int machine_of_interface(const std::string& iface_id) const {
    std::lock_guard<std::mutex> lock(directory_m_);
    auto it = directory_.find(iface_id);
    if (it == directory_.end())
      throw ContractViolation("interface '" + iface_id + "' is on no known machine");
    return it->second.first;
  }

  MacAddress mac_of_interface(const std::string& iface_id) const {
    std::lock_guard<std::mutex> lock(directory_m_);
    auto it = directory_.find(iface_id);
    if (it == directory_.end())
      throw ContractViolation("interface '" + iface_id + "' is on no known machine");
    return it->second.second;
  }

  std::optional<VirtualInterface> interface_info(const std::string& iface_id) const {
    int machine_index;
    {
      std::lock_guard<std::mutex> lock(directory_m_);
      auto it = directory_.find(iface_id);
      if (it == directory_.end()) return std::nullopt;
      machine_index = it->second.first;
    }
    const auto& m = machine(machine_index);
    std::lock_guard<std::mutex> mlock(m.m_);
    auto it = m.interfaces_.find(iface_id);
    if (it == m.interfaces_.end()) return std::nullopt;
    return it->second;
  }

  // ---- coordinated operations ---------------------------------------------

  // Establishes a virtual link between two registered, unconnected
  // interfaces in one call, configuring every involved machine.
  LinkHandle create_link(LinkMode mode, const std::string& iface_a,
                         const std::string& iface_b) {
    return create_link_with_id("link-" + iface_a + "-" + iface_b, mode, iface_a, iface_b);
  }

  LinkHandle create_link_with_id(const std::string& link_id, LinkMode mode,
                                 const std::string& iface_a, const std::string& iface_b) {
    LinkView view;
    view.link_id = link_id;
    view.mode = mode;
    view.iface_a = iface_a;
    view.iface_b = iface_b;
    view.machine_a = machine_of_interface(iface_a);
    view.machine_b = machine_of_interface(iface_b);
    view.vni = vni_for_link(link_id);
    check_unconnected(view.machine_a, iface_a);
    check_unconnected(view.machine_b, iface_b);

    install_half(view.machine_a, view);
    if (view.machine_b != view.machine_a) install_half(view.machine_b, view);

    LinkHandle h;
    h.link_id = link_id;
    h.mode = mode;
    h.iface_a = iface_a;
    h.iface_b = iface_b;
    h.inter_machine = view.machine_a != view.machine_b;
    return h;
  }

  void destroy_link(const std::string& link_id) {
    for (auto& m : machines_) remove_half(m->index_, link_id);
  }

  std::optional<LinkView> link_view(int machine_index, const std::string& link_id) const {
    const auto& m = machine(machine_index);
    std::lock_guard<std::mutex> lock(m.m_);
    auto it = m.links_.find(link_id);
    if (it == m.links_.end()) return std::nullopt;
    return it->second;
  }

  // Retargets a connected GSL at a new endpoint interface. In eBPF mode
  // only redirect maps change and the ground-side interface id survives;
  // in legacy mode devices are torn down and rebuilt and both container
  // sides get fresh interfaces.
  LinkHandle handover(const LinkHandle& gsl, const std::string& new_iface_b) {
    const int mg = machine_of_interface(gsl.iface_a);
    const int mb_new = machine_of_interface(new_iface_b);  // throws if unknown
    auto view = link_view(mg, gsl.link_id);
    if (!view)
      throw ContractViolation("handover: link '" + gsl.link_id + "' is not connected");
    if (new_iface_b != view->iface_b) check_unconnected(mb_new, new_iface_b);

    const int mb_old = view->machine_b;
    LinkView next = *view;
    next.iface_b = new_iface_b;
    next.machine_b = mb_new;
    next.generation = view->generation + 1;

    if (gsl.mode == LinkMode::ebpf) {
      retarget_half(mg, *view, next);
      if (mb_old != mg) remove_half(mb_old, gsl.link_id);
      if (mb_new != mg) install_half(mb_new, next);
    } else {
      next = legacy_handover(mg, mb_old, mb_new, *view, next);
    }

    LinkHandle h;
    h.link_id = next.link_id;
    h.mode = gsl.mode;
    h.iface_a = next.iface_a;
    h.iface_b = next.iface_b;
    h.inter_machine = mg != mb_new;
    return h;
  }

  // Moves a frame between machines. VXLAN mode encapsulates, transfers
  // and decapsulates; eBPF mode rewrites the destination MAC at egress
  // and redirects at ingress, with no repacking.
  Frame transit_inter_machine(LinkMode mode, Frame frame, int src_machine,
                              int dst_machine) {
    auto& src = machine(src_machine);
    auto& dst = machine(dst_machine);
    if (mode == LinkMode::legacy) {
      uint32_t vni = 0;
      {
        std::lock_guard<std::mutex> lock(src.m_);
        const LinkView* view = find_view_for_mac(src, frame.src_mac, dst_machine);
        if (view == nullptr || !src.tunnels_.count(view->link_id))
          throw DeliveryError("machine " + std::to_string(src_machine) +
                              " has no tunnel state for source mac " +
                              mac_to_string(frame.src_mac));
        vni = src.tunnels_.at(view->link_id);
        src.counters_.encapsulations.fetch_add(1);
      }
      frame.encapsulation = Encapsulation{vni, src.nic_ip_, dst.nic_ip_};
      {
        std::lock_guard<std::mutex> lock(dst.m_);
        bool known = false;
        for (const auto& [id, v] : dst.tunnels_) known = known || v == vni;
        if (!known)
          throw DeliveryError("machine " + std::to_string(dst_machine) +
                              " has no VXLAN device for VNI " + std::to_string(vni));
        dst.counters_.decapsulations.fetch_add(1);
      }
      frame.encapsulation.reset();
      return frame;
    }

    // eBPF path: two redirect program runs, one MAC rewrite at egress.
    {
      std::lock_guard<std::mutex> lock(src.m_);
      if (!src.redirect_.map_dst.count(frame.src_mac))
        throw DeliveryError("machine " + std::to_string(src_machine) +
                            " has no redirect entry for source mac " +
                            mac_to_string(frame.src_mac));
      frame.direction = Direction::egress;
      const auto target =
          forward_frame(Direction::egress, frame, src.redirect_, &src.counters_);
      if (target.kind != ForwardTarget::Kind::egress_nic)
        throw DeliveryError("machine " + std::to_string(src_machine) +
                            " redirect state does not route the frame off-machine");
    }
    {
      std::lock_guard<std::mutex> lock(dst.m_);
      frame.direction = Direction::ingress;
      const auto target =
          forward_frame(Direction::ingress, frame, dst.redirect_, &dst.counters_);
      if (target.kind != ForwardTarget::Kind::redirect)
        throw DeliveryError("machine " + std::to_string(dst_machine) +
                            " has no redirect entry for source mac " +
                            mac_to_string(frame.src_mac));
    }
    return frame;
  }

  // End-to-end delivery over one link: returns the receiving interface
  // id and the frame as it arrives.
  std::pair<std::string, Frame> deliver(const LinkHandle& link,
                                        const std::string& from_iface, Frame frame) {
    const std::string to_iface = from_iface == link.iface_a ? link.iface_b : link.iface_a;
    const int src_m = machine_of_interface(from_iface);
    const int dst_m = machine_of_interface(to_iface);
    frame.src_mac = mac_of_interface(from_iface);

    if (src_m == dst_m) {
      auto& m = machine(src_m);
      std::lock_guard<std::mutex> lock(m.m_);
      if (link.mode == LinkMode::ebpf) {
        const auto target =
            forward_frame(Direction::egress, frame, m.redirect_, &m.counters_);
        if (target.kind != ForwardTarget::Kind::redirect || target.interface_id != to_iface)
          throw DeliveryError("machine " + std::to_string(src_m) +
                              " redirect map does not reach '" + to_iface + "'");
        return {to_iface, frame};
      }
      auto it = m.links_.find(link.link_id);
      if (it == m.links_.end() || it->second.bridge_id.empty())
        throw DeliveryError("machine " + std::to_string(src_m) +
                            " has no bridge for link '" + link.link_id + "'");
      return {to_iface, frame};
    }
    frame = transit_inter_machine(link.mode, std::move(frame), src_m, dst_m);
    return {to_iface, frame};
  }

  // ---- per-machine halves (applier entry points) ---------------------------

  // Configures one machine's share of a link. No-op for machines that
  // host neither endpoint.
  void install_half(int machine_index, const LinkView& view) {
    const bool a_local = view.machine_a == machine_index;
    const bool b_local = view.machine_b == machine_index;
    if (!a_local && !b_local) return;

    // Only the redirect maps key by MAC; legacy bridges reference names.
    const bool needs_macs = view.mode == LinkMode::ebpf;
    const MacAddress mac_a = needs_macs ? mac_of_interface(view.iface_a) : 0;
    const MacAddress mac_b = needs_macs ? mac_of_interface(view.iface_b) : 0;

    auto& m = machine(machine_index);
    std::lock_guard<std::mutex> lock(m.m_);
    if (m.links_.count(view.link_id))
      throw ConflictError("link '" + view.link_id + "' already installed on machine " +
                          std::to_string(machine_index));

    LinkView local = view;
    if (view.mode == LinkMode::ebpf) {
      if (a_local && b_local) {
        m.redirect_.map_fwd[mac_a] = view.iface_b;
        m.redirect_.map_fwd[mac_b] = view.iface_a;
        m.counters_.map_updates.fetch_add(2);
      } else {
        const MacAddress local_mac = a_local ? mac_a : mac_b;
        const MacAddress remote_mac = a_local ? mac_b : mac_a;
        const std::string& local_if = a_local ? view.iface_a : view.iface_b;
        // Egress rewrite toward the remote container, ingress redirect
        // for frames arriving from it.
        m.redirect_.map_dst[local_mac] = remote_mac;
        m.redirect_.map_fwd[remote_mac] = local_if;
        m.counters_.map_updates.fetch_add(2);
      }
    } else {
      local.bridge_id = "br-" + view.link_id;
      if (a_local && b_local) {
        m.bridges_[local.bridge_id] = {view.iface_a, view.iface_b};
        m.counters_.device_creates.fetch_add(3);  // bridge + two attachments
        auto ia = m.interfaces_.find(view.iface_a);
        auto ib = m.interfaces_.find(view.iface_b);
        if (ia != m.interfaces_.end()) ia->second.peer = view.iface_b;
        if (ib != m.interfaces_.end()) ib->second.peer = view.iface_a;
      } else {
        const std::string& local_if = a_local ? view.iface_a : view.iface_b;
        m.bridges_[local.bridge_id] = {local_if, "vx-" + view.link_id};
        m.tunnels_[view.link_id] = view.vni;
        // bridge + vxlan device + two attachments
        m.counters_.device_creates.fetch_add(4);
      }
    }
    if (a_local) m.ifaces_in_use_.insert(view.iface_a);
    if (b_local) m.ifaces_in_use_.insert(view.iface_b);
    m.links_[view.link_id] = local;
  }

  // Tears down one machine's share of a link. Idempotent.
  void remove_half(int machine_index, const std::string& link_id) {
    auto& m = machine(machine_index);
    std::optional<LinkView> view = link_view(machine_index, link_id);
    if (!view) return;
    const bool a_local = view->machine_a == machine_index;
    const bool b_local = view->machine_b == machine_index;
    const MacAddress mac_a = lookup_mac(view->iface_a);
    const MacAddress mac_b = lookup_mac(view->iface_b);

    std::lock_guard<std::mutex> lock(m.m_);
    if (m.links_.erase(link_id) == 0) return;
    if (view->mode == LinkMode::ebpf) {
      // Map erasures are bookkeeping, not counted updates.
      if (a_local && b_local) {
        m.redirect_.map_fwd.erase(mac_a);
        m.redirect_.map_fwd.erase(mac_b);
      } else {
        const MacAddress local_mac = a_local ? mac_a : mac_b;
        const MacAddress remote_mac = a_local ? mac_b : mac_a;
        m.redirect_.map_dst.erase(local_mac);
        m.redirect_.map_fwd.erase(remote_mac);
      }
    } else {
      m.bridges_.erase(view->bridge_id);
      if (a_local && b_local) {
        m.counters_.device_deletes.fetch_add(1);  // bridge
        auto ia = m.interfaces_.find(view->iface_a);
        auto ib = m.interfaces_.find(view->iface_b);
        if (ia != m.interfaces_.end()) ia->second.peer.reset();
        if (ib != m.interfaces_.end()) ib->second.peer.reset();
      } else {
        m.tunnels_.erase(link_id);
        m.counters_.device_deletes.fetch_add(2);  // bridge + vxlan device
      }
    }
    if (a_local) m.ifaces_in_use_.erase(view->iface_a);
    if (b_local) m.ifaces_in_use_.erase(view->iface_b);
  }

  // eBPF retarget on the machine that keeps its interface: erase the
  // stale entries, then at most two fresh writes.
  void retarget_half(int machine_index, const LinkView& old_view, const LinkView& new_view) {
    const MacAddress ground_mac = lookup_mac(old_view.iface_a);
    const MacAddress old_sat_mac = lookup_mac(old_view.iface_b);
    const MacAddress new_sat_mac = lookup_mac(new_view.iface_b);
    if (new_sat_mac == 0)
      throw ContractViolation("retarget: interface '" + new_view.iface_b +
                              "' is on no known machine");

    auto& m = machine(machine_index);
    std::lock_guard<std::mutex> lock(m.m_);
    m.redirect_.map_fwd.erase(old_sat_mac);
    m.redirect_.map_dst.erase(ground_mac);
    m.redirect_.map_fwd.erase(ground_mac);
    m.ifaces_in_use_.erase(old_view.iface_b);

    if (new_view.machine_b == machine_index) {
      m.redirect_.map_fwd[ground_mac] = new_view.iface_b;
      m.redirect_.map_fwd[new_sat_mac] = old_view.iface_a;
      m.ifaces_in_use_.insert(new_view.iface_b);
    } else {
      m.redirect_.map_dst[ground_mac] = new_sat_mac;
      m.redirect_.map_fwd[new_sat_mac] = old_view.iface_a;
    }
    m.counters_.map_updates.fetch_add(2);
    m.links_[old_view.link_id] = new_view;
  }

  std::vector<std::string> interfaces_of(int machine_index) const {
    const auto& m = machine(machine_index);
    std::lock_guard<std::mutex> lock(m.m_);
    std::vector<std::string> out;
    for (const auto& [id, vi] : m.interfaces_) out.push_back(id);
    return out;
  }

  std::vector<std::string> links_of(int machine_index) const {
    const auto& m = machine(machine_index);
    std::lock_guard<std::mutex> lock(m.m_);
    std::vector<std::string> out;
    for (const auto& [id, v] : m.links_) out.push_back(id);
    return out;
  }

  // Current interface id for a base name; legacy handovers regenerate
  // container veths under generation-suffixed ids.
  std::string resolve_interface(const std::string& base_name) const {
    std::lock_guard<std::mutex> lock(directory_m_);
    auto it = current_by_base_.find(base_name);
    return it == current_by_base_.end() ? base_name : it->second;
  }

  // Legacy handover, ground-machine share: tear down the local devices,
  // regenerate the ground veth, rebuild the link half. Returns the view
  // with the fresh ground interface.
  LinkView legacy_ground_half(int machine_index, const LinkView& old_view, LinkView next) {
    remove_half(machine_index, old_view.link_id);
    const std::string old_ground = old_view.iface_a;
    const std::string ground_owner = owner_of(machine_index, old_ground);
    remove_interface(machine_index, old_ground);
    const std::string new_ground =
        base_iface(old_ground) + "#g" + std::to_string(next.generation);
    register_interface(machine_index, new_ground, ground_owner);
    next.iface_a = new_ground;
    install_half(machine_index, next);
    return next;
  }

 private:
  LinkView legacy_handover(int mg, int mb_old, int mb_new, const LinkView& old_view,
                           LinkView next) {
    if (mb_old != mg) remove_half(mb_old, old_view.link_id);
    next = legacy_ground_half(mg, old_view, std::move(next));
    if (mb_new != mg) install_half(mb_new, next);
    return next;
  }

  static std::string base_iface(const std::string& iface_id) {
    return iface_id.substr(0, iface_id.find('#'));
  }

  std::string owner_of(int machine_index, const std::string& iface_id) const {
    const auto& m = machine(machine_index);
    std::lock_guard<std::mutex> lock(m.m_);
    auto it = m.interfaces_.find(iface_id);
    return it == m.interfaces_.end() ? std::string() : it->second.owner_node;
  }

  void check_unconnected(int machine_index, const std::string& iface_id) {
    auto& m = machine(machine_index);
    std::lock_guard<std::mutex> lock(m.m_);
    if (m.ifaces_in_use_.count(iface_id))
      throw ConflictError("interface '" + iface_id + "' is already connected");
  }

  MacAddress lookup_mac(const std::string& iface_id) const {
    std::lock_guard<std::mutex> lock(directory_m_);
    auto it = directory_.find(iface_id);
    return it == directory_.end() ? 0 : it->second.second;
  }

  const LinkView* find_view_for_mac(MachineModel& m, MacAddress src_mac,
                                    int dst_machine) const {
    for (const auto& [id, view] : m.links_) {
      if (view.machine_a == view.machine_b) continue;
      const std::string& local_if =
          view.machine_a == m.index() ? view.iface_a : view.iface_b;
      const int remote_machine =
          view.machine_a == m.index() ? view.machine_b : view.machine_a;
      auto it = m.interfaces_.find(local_if);
      if (it != m.interfaces_.end() && it->second.mac == src_mac &&
          remote_machine == dst_machine)
        return &view;
    }
    return nullptr;
  }

  std::vector<std::unique_ptr<MachineModel>> machines_;
  mutable std::mutex directory_m_;
  std::map<std::string, std::pair<int, MacAddress>> directory_;  // iface -> (machine, mac)
  std::map<std::string, std::string> current_by_base_;
  MacAddress next_mac_ = 0x020000000001ull;
};

}  // namespace satnet
