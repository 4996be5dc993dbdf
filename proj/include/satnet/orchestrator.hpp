#pragma once

// Emulation lifecycle: dependency-aware construction on a simulated
// discrete clock, the epoch loop with instruction delivery through the
// state store, application launches, and deconstruction.
//
// Scheduling model. Node tasks are heavy (container creation) and are
// bounded by a per-machine pool of parallel_num workers. Link tasks are
// light: under the dependency-aware policy they run as waiting-pool
// coroutines the moment both endpoint tasks finish, without occupying a
// heavy worker; under the phase-separated baseline they are held until
// every node task is done and then pushed through the same worker pool.
// The two policies measured on one clock turn the construction-ordering
// claim into a checkable makespan comparison.

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "satnet/dataplane.hpp"
#include "satnet/placement.hpp"
#include "satnet/scenario.hpp"
#include "satnet/statestore.hpp"
#include "satnet/topology.hpp"
#include "satnet/log.hpp"

namespace satnet {

inline std::string iface_name(const std::string& node_id, const std::string& link_id) {
  return "if-" + node_id + "-" + link_id;
}

// ---- task graph -----------------------------------------------------------

struct TaskGraph {
  struct Task {
    std::string id;
    bool heavy = false;
    int machine = 0;
    int cost = 1;
    std::vector<std::string> deps;  // ids of prerequisite tasks
  };

  std::vector<Task> node_tasks;
  std::vector<Task> link_tasks;

  void validate() const {
    std::set<std::string> node_ids;
    for (const auto& t : node_tasks) node_ids.insert(t.id);
    for (const auto& t : link_tasks) {
      if (t.deps.size() != 2)
        throw ContractViolation("link task '" + t.id + "' must have exactly 2 dependencies");
      for (const auto& d : t.deps)
        if (!node_ids.count(d))
          throw ContractViolation("link task '" + t.id + "' depends on unknown task '" +
                                  d + "'");
    }
  }
};

enum class SchedulePolicy { dependency_aware, phase_separated };

struct LinkStateCommand {
  int arrival_tick = 0;
  int machine = 0;
  std::string command;
};

struct ScheduleOptions {
  int parallel_num = 1;
  SchedulePolicy policy = SchedulePolicy::dependency_aware;
  std::set<std::string> failing_tasks;
  std::vector<LinkStateCommand> commands;
};

struct TaskTrace {
  std::string id;
  bool heavy = false;
  int machine = 0;
  int start = -1;
  int finish = -1;
  std::string status;  // done | failed | blocked | unstarted
};

struct CommandTrace {
  int arrival = 0;
  int processed = 0;
  int machine = 0;
  std::string command;
};

struct ScheduleReport {
  std::vector<TaskTrace> tasks;
  std::vector<CommandTrace> commands;
  int makespan = 0;
  bool aborted = false;
  std::vector<std::string> failed;
  std::vector<std::string> blocked;

  const TaskTrace& trace(const std::string& id) const {
    for (const auto& t : tasks)
      if (t.id == id) return t;
    throw ContractViolation("no trace for task '" + id + "'");
  }

  // Highest number of heavy tasks that ever ran at one tick on any
  // single machine.
  int peak_heavy_concurrency() const {
    std::map<std::pair<int, int>, int> load;  // (machine, tick) -> count
    int peak = 0;
    for (const auto& t : tasks) {
      if (!t.heavy || t.start < 0) continue;
      for (int tick = t.start; tick < t.finish; ++tick)
        peak = std::max(peak, ++load[{t.machine, tick}]);
    }
    return peak;
  }
};

inline Json to_json(const ScheduleReport& r) {
  Json tasks = Json::array();
  for (const auto& t : r.tasks)
    tasks.push_back(Json{{"id", t.id},
                         {"heavy", t.heavy},
                         {"machine", t.machine},
                         {"start", t.start},
                         {"finish", t.finish},
                         {"status", t.status}});
  Json commands = Json::array();
  for (const auto& c : r.commands)
    commands.push_back(Json{{"arrival", c.arrival},
                            {"processed", c.processed},
                            {"machine", c.machine},
                            {"command", c.command}});
  return Json{{"tasks", tasks},     {"commands", commands}, {"makespan", r.makespan},
              {"aborted", r.aborted}, {"failed", r.failed},  {"blocked", r.blocked}};
}

// Discrete-clock execution of a task graph under either policy.
// Deterministic: ready tasks start in id order.
inline ScheduleReport simulate_schedule(const TaskGraph& graph, const ScheduleOptions& opt) {
  graph.validate();
  if (opt.parallel_num < 1) throw ValidationError("simulate_schedule: parallel_num must be >= 1");

  struct State {
    const TaskGraph::Task* task;
    int start = -1;
    int finish = -1;
    int status = 0;  // 0 pending, 1 running, 2 done, 3 failed
  };
  std::map<std::string, State> states;
  std::set<int> machines;
  for (const auto& t : graph.node_tasks) {
    states[t.id] = {&t};
    machines.insert(t.machine);
  }
  for (const auto& t : graph.link_tasks) {
    states[t.id] = {&t};
    machines.insert(t.machine);
  }

  std::map<int, int> busy;  // machine -> heavy workers in use
  for (int m : machines) busy[m] = 0;

  auto commands = opt.commands;
  std::sort(commands.begin(), commands.end(),
            [](const LinkStateCommand& a, const LinkStateCommand& b) {
              return a.arrival_tick < b.arrival_tick;
            });
  size_t next_command = 0;

  ScheduleReport report;
  size_t heavy_remaining = graph.node_tasks.size();
  size_t running = 0;
  bool aborted = false;
  int t = 0;
  int makespan = 0;

  auto deps_done = [&](const TaskGraph::Task& task) {
    for (const auto& d : task.deps)
      if (states.at(d).status != 2) return false;
    return true;
  };

  while (true) {
    // Link-state commands are handled ahead of anything queued: record
    // them at their arrival tick, before this tick's task starts.
    while (next_command < commands.size() && commands[next_command].arrival_tick <= t) {
      const auto& c = commands[next_command];
      report.commands.push_back({c.arrival_tick, t, c.machine, c.command});
      ++next_command;
    }

    // Completions at t.
    for (auto& [id, st] : states) {
      if (st.status == 1 && st.finish == t) {
        const bool fails = opt.failing_tasks.count(id) > 0;
        st.status = fails ? 3 : 2;
        if (fails) {
          aborted = true;
          report.failed.push_back(id);
        }
        if (st.task->heavy || opt.policy == SchedulePolicy::phase_separated)
          busy[st.task->machine] -= 1;
        if (st.task->heavy) heavy_remaining -= 1;
        running -= 1;
        makespan = std::max(makespan, t);
      }
    }

    // Starts at t.
    if (!aborted) {
      if (opt.policy == SchedulePolicy::dependency_aware) {
        for (const auto& task : graph.link_tasks) {
          auto& st = states.at(task.id);
          if (st.status == 0 && deps_done(task)) {
            st.status = 1;
            st.start = t;
            st.finish = t + task.cost;
            running += 1;
          }
        }
      } else if (heavy_remaining == 0) {
        for (const auto& task : graph.link_tasks) {
          auto& st = states.at(task.id);
          if (st.status == 0 && deps_done(task) && busy[task.machine] < opt.parallel_num) {
            st.status = 1;
            st.start = t;
            st.finish = t + task.cost;
            busy[task.machine] += 1;
            running += 1;
          }
        }
      }
      for (const auto& task : graph.node_tasks) {
        auto& st = states.at(task.id);
        if (st.status == 0 && busy[task.machine] < opt.parallel_num) {
          st.status = 1;
          st.start = t;
          st.finish = t + task.cost;
          busy[task.machine] += 1;
          running += 1;
        }
      }
    }

    const bool commands_left = next_command < commands.size();
    if (running == 0 && !commands_left) break;
    if (running == 0 && commands_left) {
      t = commands[next_command].arrival_tick;
      continue;
    }

    // Advance to the next event.
    int next_t = std::numeric_limits<int>::max();
    for (const auto& [id, st] : states)
      if (st.status == 1) next_t = std::min(next_t, st.finish);
    if (commands_left)
      next_t = std::min(next_t, std::max(commands[next_command].arrival_tick, t + 1));
    t = next_t;
  }

  report.makespan = makespan;
  report.aborted = aborted;
  for (const auto& [id, st] : states) {
    TaskTrace trace;
    trace.id = id;
    trace.heavy = st.task->heavy;
    trace.machine = st.task->machine;
    trace.start = st.start;
    trace.finish = st.status >= 2 ? st.finish : -1;
    switch (st.status) {
      case 2: trace.status = "done"; break;
      case 3: trace.status = "failed"; break;
      default: {
        bool dep_failed = false;
        for (const auto& d : st.task->deps) {
          const int ds = states.at(d).status;
          if (ds == 3 || ds == 0) dep_failed = true;
        }
        trace.status = dep_failed && !st.task->deps.empty() ? "blocked" : "unstarted";
        trace.start = -1;
        if (trace.status == "blocked") report.blocked.push_back(id);
        break;
      }
    }
    report.tasks.push_back(std::move(trace));
  }
  return report;
}

// ---- environment construction ----------------------------------------------

struct ConstructOptions {
  SchedulePolicy policy = SchedulePolicy::dependency_aware;
  std::set<std::string> failing_tasks;
  std::vector<LinkStateCommand> commands;
};

// Kernel settings that a real multi-machine deployment must apply
// before loading the environment; surfaced as text in build reports.
inline std::vector<std::string> preflight_checklist() {
  return {
      "raise net.ipv4.neigh.default.gc_thresh1/2/3 above the emulated interface count "
      "so the ARP cache is not garbage-collected mid-run",
      "enable bridge frame redirection so frames traverse the virtual links",
  };
}

struct EmulationEnvironment {
  EmulationConfig config;
  ScenarioFile scenario;
  TopologySnapshot snapshot;  // live topology, starts at t = 0
  PlacementResult placement;
  std::map<std::string, int> machine_of_node;
  std::map<std::string, LinkLocality> locality;
  TaskGraph graph;
  ScheduleReport construction;
  DataplaneNetwork dataplane;
  InMemoryStore store;
  bool constructed = false;
  std::set<std::string> built_nodes;
  std::set<std::string> built_links;
};

namespace detail {

// Nodes and the static ISL grid, no GSLs yet.
inline TopologySnapshot base_topology(const ScenarioFile& sc) {
  TopologySnapshot snap;
  snap.t = 0.0;
  for (const auto& shell : sc.shells) {
    const auto elems = generate_shell(shell);
    for (const auto& e : elems) {
      NodeRecord n;
      n.node_id = satellite_node_id(e);
      n.node_type = NodeType::satellite;
      n.satellite = e;
      n.orbit_index = e.orbit_index;
      snap.nodes[n.node_id] = std::move(n);
    }
    for (auto& l : build_isl_grid(elems, shell.is_walker_star()))
      snap.links[l.link_id] = std::move(l);
  }
  for (const auto& site : sc.ground_sites) {
    validate_ground_site(site);
    NodeRecord n;
    n.node_id = ground_site_node_id(site);
    n.node_type = NodeType::ground_station;
    n.ground_site = site;
    snap.nodes[n.node_id] = std::move(n);
  }
  return snap;
}

inline TopologySnapshot topology_at(const ScenarioFile& sc, const EmulationConfig& config,
                                    double t) {
  TopologySnapshot snap = base_topology(sc);
  GslPolicy policy;
  policy.gsls_per_site_per_shell = config.gsls_per_site_per_shell;
  snap = apply_events(snap, assign_gsls(snap, t, policy), t);
  snap = apply_events(snap, update_link_delays(snap, t, 0.0), t);
  return snap;
}

inline TopologySnapshot initial_topology(const ScenarioFile& sc,
                                         const EmulationConfig& config) {
  return topology_at(sc, config, 0.0);
}

}  // namespace detail

// Builds the full environment: initial topology, placement, store
// records, the construction schedule on the simulated clock, and the
// data-plane model for everything that finished. A task failure aborts
// construction and leaves a partial environment for cleanup.
inline std::unique_ptr<EmulationEnvironment> construct_network(
    const EmulationConfig& config, const ScenarioFile& scenario,
    const ConstructOptions& options = {}) {
  auto env = std::make_unique<EmulationEnvironment>();
  env->config = config;
  env->scenario = scenario;
  env->snapshot = detail::initial_topology(scenario, config);

  // Placement over sorted node ids; publish machine assignments.
  std::vector<std::string> instances;
  for (const auto& [id, n] : env->snapshot.nodes) instances.push_back(id);
  std::vector<LinkRecord> links;
  for (const auto& [id, l] : env->snapshot.links) links.push_back(l);
  env->placement = weighted_round_robin(scenario.machines, instances, links);
  env->machine_of_node = env->placement.machine_of_instance();
  for (auto& [id, n] : env->snapshot.nodes) n.machine_index = env->machine_of_node.at(id);
  env->locality = classify_links(env->placement, links);

  for (const auto& m : scenario.machines)
    env->store.put("machines/" + std::to_string(m.machine_index), canonical_dump(m));
  for (const auto& [id, n] : env->snapshot.nodes)
    env->store.put("nodes/" + id, canonical_dump(n));
  for (const auto& [id, l] : env->snapshot.links)
    env->store.put("links/" + id, canonical_dump(l));
  for (const auto& a : scenario.apps) env->store.put("apps/" + a.app_id, canonical_dump(a));

  // Task graph: heavy container tasks, light link tasks gated on both
  // endpoints.
  std::map<std::string, int> link_machine;
  for (const auto& [m, ids] : env->placement.links_by_machine)
    for (const auto& id : ids) link_machine[id] = m;
  for (const auto& id : instances) {
    TaskGraph::Task task;
    task.id = "node:" + id;
    task.heavy = true;
    task.machine = env->machine_of_node.at(id);
    task.cost = config.node_task_cost;
    env->graph.node_tasks.push_back(std::move(task));
  }
  for (const auto& l : links) {
    TaskGraph::Task task;
    task.id = "link:" + l.link_id;
    task.heavy = false;
    task.machine = link_machine.at(l.link_id);
    task.cost = config.link_task_cost;
    task.deps = {"node:" + l.endpoint_a, "node:" + l.endpoint_b};
    env->graph.link_tasks.push_back(std::move(task));
  }

  ScheduleOptions sched;
  sched.parallel_num = config.effective_parallel_num();
  sched.policy = options.policy;
  sched.failing_tasks = options.failing_tasks;
  sched.commands = options.commands;
  env->construction = simulate_schedule(env->graph, sched);

  // Build the data-plane model for what actually completed.
  for (const auto& m : scenario.machines) env->dataplane.add_machine(m);
  std::set<std::string> done_links;
  for (const auto& trace : env->construction.tasks) {
    if (trace.status != "done") continue;
    if (trace.heavy)
      env->built_nodes.insert(trace.id.substr(5));
    else
      done_links.insert(trace.id.substr(5));
  }
  for (const auto& l : links) {
    if (!done_links.count(l.link_id)) continue;
    const std::string ifa = iface_name(l.endpoint_a, l.link_id);
    const std::string ifb = iface_name(l.endpoint_b, l.link_id);
    env->dataplane.register_interface(env->machine_of_node.at(l.endpoint_a), ifa,
                                      l.endpoint_a);
    env->dataplane.register_interface(env->machine_of_node.at(l.endpoint_b), ifb,
                                      l.endpoint_b);
    env->dataplane.create_link_with_id(l.link_id, config.link_mode, ifa, ifb);
    env->built_links.insert(l.link_id);
  }

  // Pre-provision candidate GSL interfaces so that an eBPF handover can
  // retarget to any satellite of the shell without touching devices.
  for (const auto& site : scenario.ground_sites) {
    const std::string site_id = ground_site_node_id(site);
    if (!env->built_nodes.count(site_id)) continue;
    for (const auto& shell : scenario.shells) {
      for (int slot = 0; slot < config.gsls_per_site_per_shell; ++slot) {
        const std::string gsl_id = gsl_link_id(site.name, shell.name, slot);
        const std::string ground_if = iface_name(site_id, gsl_id);
        if (!env->dataplane.has_interface(ground_if))
          env->dataplane.register_interface(env->machine_of_node.at(site_id), ground_if,
                                            site_id);
        for (const auto& [nid, n] : env->snapshot.nodes) {
          if (n.node_type != NodeType::satellite || !n.satellite) continue;
          if (n.satellite->shell_name != shell.name) continue;
          if (!env->built_nodes.count(nid)) continue;
          const std::string sat_if = iface_name(nid, gsl_id);
          if (!env->dataplane.has_interface(sat_if))
            env->dataplane.register_interface(env->machine_of_node.at(nid), sat_if, nid);
        }
      }
    }
  }

  env->constructed = !env->construction.aborted;
  return env;
}

// ---- per-machine instruction applier ----------------------------------------

// Consumes the links/ watch stream in revision order and applies each
// change to this machine's slice of the data plane. A stale watch or a
// buffer overflow triggers a full resync from a prefix read.
class MachineApplier {
 public:
  MachineApplier(int machine_index, LinkMode mode, InMemoryStore& store,
                 DataplaneNetwork& dataplane, std::map<std::string, int> machine_of_node)
      : machine_(machine_index),
        mode_(mode),
        store_(store),
        dataplane_(dataplane),
        machine_of_node_(std::move(machine_of_node)) {}

  ~MachineApplier() { stop(); }

  void start(int64_t from_revision) {
    thread_ = std::thread([this, from_revision] { loop(from_revision); });
  }

  void stop() {
    {
      std::lock_guard<std::mutex> lock(m_);
      stopping_ = true;
      if (watch_.valid()) watch_.cancel();
      cv_.notify_all();
    }
    if (thread_.joinable()) thread_.join();
  }

  int64_t applied_revision() const { return applied_.load(); }
  int resync_count() const { return resyncs_.load(); }

  bool wait_applied(int64_t revision, std::chrono::milliseconds timeout) {
    std::unique_lock<std::mutex> lock(m_);
    return cv_.wait_for(lock, timeout, [&] {
      return applied_.load() >= revision || !error_.empty() || stopping_;
    });
  }

  std::string error() const {
    std::lock_guard<std::mutex> lock(m_);
    return error_;
  }

 private:
  void loop(int64_t from_revision) {
    int64_t next_rev = from_revision;
    try {
      for (;;) {
        try {
          {
            std::lock_guard<std::mutex> lock(m_);
            if (stopping_) return;
            watch_ = store_.watch("links/", next_rev);
          }
          for (;;) {
            auto ev = watch_.next();
            if (!ev) return;  // cancelled and drained
            if (ev->revision < applied_.load())
              throw Error("applier " + std::to_string(machine_) +
                          " received events out of revision order");
            handle(*ev);
            bump_applied(ev->revision);
            next_rev = ev->revision + 1;
          }
        } catch (const StaleWatchError&) {
          next_rev = resync();
        } catch (const WatchOverflowError&) {
          next_rev = resync();
        }
      }
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(m_);
      error_ = e.what();
      cv_.notify_all();
    }
  }

  // Full reconciliation from a snapshot read. Returns the next revision
  // to watch from.
  int64_t resync() {
    log::warn("applier " + std::to_string(machine_) + ": resync from full snapshot read");
    const int64_t rev = store_.current_revision();
    const auto records = store_.get_prefix("links/");
    std::set<std::string> desired_ids;
    for (const auto& rec : records) desired_ids.insert(rec.key.substr(6));
    for (const auto& id : dataplane_.links_of(machine_))
      if (!desired_ids.count(id)) dataplane_.remove_half(machine_, id);
    for (const auto& rec : records) apply_record(link_from_json(Json::parse(rec.value)));
    resyncs_.fetch_add(1);
    bump_applied(rev);
    return rev + 1;
  }

  // The waiter sleeps on m_: publish the new revision under that lock
  // so the wakeup cannot be lost between predicate check and wait.
  void bump_applied(int64_t rev) {
    std::lock_guard<std::mutex> lock(m_);
    applied_.store(rev);
    cv_.notify_all();
  }

  void handle(const WatchEvent& ev) {
    const std::string link_id = ev.key.substr(6);
    if (ev.kind == WatchEvent::Kind::del) {
      dataplane_.remove_half(machine_, link_id);
      return;
    }
    apply_record(link_from_json(Json::parse(ev.value)));
  }

  void apply_record(const LinkRecord& rec) {
    auto ma_it = machine_of_node_.find(rec.endpoint_a);
    auto mb_it = machine_of_node_.find(rec.endpoint_b);
    if (ma_it == machine_of_node_.end() || mb_it == machine_of_node_.end()) {
      log::warn("applier " + std::to_string(machine_) + ": link '" + rec.link_id +
                "' references an unplaced node, skipped");
      return;
    }
    const int ma = ma_it->second;
    const int mb = mb_it->second;
    const bool involved = machine_ == ma || machine_ == mb;
    auto cur = dataplane_.link_view(machine_, rec.link_id);

    if (!involved) {
      if (cur) dataplane_.remove_half(machine_, rec.link_id);
      return;
    }

    LinkView next;
    next.link_id = rec.link_id;
    next.mode = mode_;
    next.iface_a = dataplane_.resolve_interface(iface_name(rec.endpoint_a, rec.link_id));
    next.iface_b = dataplane_.resolve_interface(iface_name(rec.endpoint_b, rec.link_id));
    next.machine_a = ma;
    next.machine_b = mb;
    next.vni = vni_for_link(rec.link_id);

    if (!cur) {
      dataplane_.install_half(machine_, next);
      return;
    }
    // Same endpoints: metadata-only update, nothing to reconfigure.
    if (cur->machine_b == mb && base_of(cur->iface_b) == iface_name(rec.endpoint_b, rec.link_id) &&
        base_of(cur->iface_a) == iface_name(rec.endpoint_a, rec.link_id))
      return;

    next.generation = cur->generation + 1;
    if (mode_ == LinkMode::ebpf) {
      if (machine_ == ma) {
        next.iface_a = cur->iface_a;  // ground side keeps its interface
        dataplane_.retarget_half(machine_, *cur, next);
      } else {
        dataplane_.remove_half(machine_, rec.link_id);
        dataplane_.install_half(machine_, next);
      }
    } else {
      if (machine_ == ma) {
        dataplane_.legacy_ground_half(machine_, *cur, next);
      } else {
        dataplane_.remove_half(machine_, rec.link_id);
        dataplane_.install_half(machine_, next);
      }
    }
  }

  static std::string base_of(const std::string& iface) {
    return iface.substr(0, iface.find('#'));
  }

  int machine_;
  LinkMode mode_;
  InMemoryStore& store_;
  DataplaneNetwork& dataplane_;
  std::map<std::string, int> machine_of_node_;
  std::thread thread_;
  Watch watch_;
  std::atomic<int64_t> applied_{0};
  std::atomic<int> resyncs_{0};
  mutable std::mutex m_;
  std::condition_variable cv_;
  bool stopping_ = false;
  std::string error_;
};

// ---- application launches ----------------------------------------------------

struct LaunchEntry {
  std::string app_id;
  std::string node_id;
  double launch_timestamp = 0.0;
  std::optional<double> launched_at;  // empty: never launched within duration
};

// Launch plan on the epoch grid: each app launches at the first epoch
// >= its timestamp, exactly once, ordered by (timestamp, app_id).
inline std::vector<LaunchEntry> launch_applications(const std::vector<ApplicationRecord>& apps,
                                                    const std::set<std::string>& known_nodes,
                                                    double epoch_step_s, double duration_s) {
  if (epoch_step_s <= 0.0) throw ValidationError("launch_applications: epoch_step_s must be > 0");
  std::vector<LaunchEntry> entries;
  for (const auto& a : apps) {
    if (!known_nodes.count(a.node_id))
      throw ValidationError("app '" + a.app_id + "' references unknown node '" + a.node_id +
                            "'");
    LaunchEntry e;
    e.app_id = a.app_id;
    e.node_id = a.node_id;
    e.launch_timestamp = a.launch_timestamp;
    const double epoch =
        std::max(0.0, std::ceil(a.launch_timestamp / epoch_step_s - 1e-9) * epoch_step_s);
    if (epoch <= duration_s + 1e-9) e.launched_at = epoch;
    entries.push_back(std::move(e));
  }
  std::sort(entries.begin(), entries.end(), [](const LaunchEntry& x, const LaunchEntry& y) {
    if (x.launch_timestamp != y.launch_timestamp)
      return x.launch_timestamp < y.launch_timestamp;
    return x.app_id < y.app_id;
  });
  return entries;
}

// ---- epoch loop ----------------------------------------------------------------

struct RunResult {
  Json report;
  TopologySnapshot initial_snapshot;
  TopologySnapshot final_snapshot;
  // Every published epoch batch, replayable onto the initial snapshot.
  std::vector<std::pair<double, std::vector<LinkEvent>>> event_log;
};

struct RunOptions {
  uint64_t seed = 0;
  // Per-epoch failure hook: may emit destroy events for ISLs (and later
  // create events to recover them). Default: no failures.
  std::function<std::vector<LinkEvent>(const TopologySnapshot&, double)> isl_failure_hook;
};

// Steps the emulation clock from 0 to duration inclusive. Each epoch
// recomputes positions, applies the GSL policy, the failure hook and
// delay updates, publishes the resulting events through the store, and
// waits until every per-machine applier has consumed them.
inline RunResult run_epochs(EmulationEnvironment& env, const RunOptions& options) {
  if (!env.constructed)
    throw ContractViolation("run_epochs: environment is not fully constructed");

  const EmulationConfig& config = env.config;
  GslPolicy policy;
  policy.gsls_per_site_per_shell = config.gsls_per_site_per_shell;

  std::set<std::string> known_nodes;
  for (const auto& [id, n] : env.snapshot.nodes) known_nodes.insert(id);
  const auto launch_plan = launch_applications(env.scenario.apps, known_nodes,
                                               config.epoch_step_s, config.duration_s);

  std::vector<std::unique_ptr<MachineApplier>> appliers;
  const int64_t baseline = env.store.current_revision();
  for (const auto& m : env.scenario.machines) {
    appliers.push_back(std::make_unique<MachineApplier>(
        m.machine_index, config.link_mode, env.store, env.dataplane, env.machine_of_node));
    appliers.back()->start(baseline + 1);
  }

  RunResult result;
  result.initial_snapshot = env.snapshot;

  Json epochs = Json::array();
  Json handover_log = Json::array();
  Json launch_log = Json::array();
  size_t next_launch = 0;
  int64_t last_link_revision = 0;

  const int epoch_count =
      static_cast<int>(std::floor(config.duration_s / config.epoch_step_s + 1e-9)) + 1;
  for (int i = 0; i < epoch_count; ++i) {
    const double t = i * config.epoch_step_s;

    const auto gsl_events = assign_gsls(env.snapshot, t, policy);
    // Handover provenance against the pre-apply table.
    for (const auto& ev : gsl_events) {
      if (ev.kind != LinkEvent::Kind::handover) continue;
      handover_log.push_back(Json{{"t", t},
                                  {"link_id", ev.link_id},
                                  {"from", env.snapshot.links.at(ev.link_id).endpoint_b},
                                  {"to", ev.record->endpoint_b}});
    }
    auto snap = apply_events(env.snapshot, gsl_events, t);
    std::vector<LinkEvent> failure_events;
    if (options.isl_failure_hook) {
      failure_events = options.isl_failure_hook(snap, t);
      snap = apply_events(snap, failure_events, t);
    }
    const auto delay_events = update_link_delays(snap, t, config.epsilon_ms);
    snap = apply_events(snap, delay_events, t);

    // Every connected GSL must clear its site's elevation mask.
    for (const auto& [id, l] : snap.links) {
      if (l.link_type != LinkType::gsl || l.state != LinkState::connected) continue;
      const auto& site = snap.nodes.at(l.endpoint_a);
      const auto& sat = snap.nodes.at(l.endpoint_b);
      const auto el = elevation_and_visibility(node_position(site, t), node_position(sat, t),
                                               site.ground_site->min_elevation_deg);
      if (!el.visible)
        throw Error("elevation-mask invariant violated at t=" + std::to_string(t) +
                    " on link " + id);
    }

    std::vector<LinkEvent> all_events = gsl_events;
    all_events.insert(all_events.end(), failure_events.begin(), failure_events.end());
    all_events.insert(all_events.end(), delay_events.begin(), delay_events.end());

    int destroys = 0, handovers = 0, creates = 0, delay_updates = 0;
    for (const auto& ev : all_events) {
      switch (ev.kind) {
        case LinkEvent::Kind::destroy:
          last_link_revision = env.store.del("links/" + ev.link_id);
          ++destroys;
          break;
        case LinkEvent::Kind::handover:
          last_link_revision =
              env.store.put("links/" + ev.link_id, canonical_dump(*ev.record));
          ++handovers;
          break;
        case LinkEvent::Kind::create:
          last_link_revision =
              env.store.put("links/" + ev.link_id, canonical_dump(*ev.record));
          ++creates;
          break;
        case LinkEvent::Kind::update_delay:
          last_link_revision =
              env.store.put("links/" + ev.link_id, canonical_dump(snap.links.at(ev.link_id)));
          ++delay_updates;
          break;
      }
    }

    int launches = 0;
    while (next_launch < launch_plan.size() && launch_plan[next_launch].launched_at &&
           *launch_plan[next_launch].launched_at <= t + 1e-9) {
      const auto& e = launch_plan[next_launch];
      for (const auto& a : env.scenario.apps)
        if (a.app_id == e.app_id) env.store.put("apps/" + a.app_id, canonical_dump(a));
      launch_log.push_back(Json{{"app_id", e.app_id},
                                {"node_id", e.node_id},
                                {"launch_timestamp", e.launch_timestamp},
                                {"launched_at", *e.launched_at}});
      ++next_launch;
      ++launches;
    }

    // Delivery barrier: every applier reaches this epoch's last link
    // revision before the next epoch is computed.
    if (last_link_revision > 0) {
      for (auto& a : appliers) {
        if (!a->wait_applied(last_link_revision, std::chrono::seconds(30)))
          throw Error("applier stalled during epoch t=" + std::to_string(t));
        if (!a->error().empty()) throw Error("applier failed: " + a->error());
      }
    }

    env.snapshot = snap;
    result.event_log.push_back({t, all_events});
    epochs.push_back(Json{{"t", t},
                          {"creates", creates},
                          {"destroys", destroys},
                          {"handovers", handovers},
                          {"delay_updates", delay_updates},
                          {"launches", launches}});
  }

  int resyncs = 0;
  for (auto& a : appliers) {
    a->stop();
    resyncs += a->resync_count();
  }
  appliers.clear();

  // Unlaunched apps are reported, not dropped silently.
  for (size_t i = next_launch; i < launch_plan.size(); ++i) {
    launch_log.push_back(Json{{"app_id", launch_plan[i].app_id},
                              {"node_id", launch_plan[i].node_id},
                              {"launch_timestamp", launch_plan[i].launch_timestamp},
                              {"launched_at", nullptr}});
  }

  result.final_snapshot = env.snapshot;

  Json counters = Json::object();
  CounterSnapshot total;
  for (const auto& m : env.scenario.machines) {
    const auto snap_c = env.dataplane.machine(m.machine_index).counters();
    counters["machine." + std::to_string(m.machine_index)] = to_json(snap_c);
    total += snap_c;
  }
  counters["total"] = to_json(total);

  result.report = Json{{"seed", options.seed},
                       {"config", to_json(config)},
                       {"construction", to_json(env.construction)},
                       {"preflight_checklist", preflight_checklist()},
                       {"epochs", epochs},
                       {"handover_log", handover_log},
                       {"launch_log", launch_log},
                       {"counters", counters},
                       {"resyncs", resyncs},
                       {"store_revision", env.store.current_revision()}};
  return result;
}

inline RunResult run_epochs(EmulationEnvironment& env, uint64_t seed = 0) {
  RunOptions options;
  options.seed = seed;
  return run_epochs(env, options);
}

// ---- deconstruction -------------------------------------------------------------

// Tears the environment down: links first, then nodes, in bounded
// waves per machine on the simulated clock. Safe to call on partial
// environments and idempotent on re-run.
inline Json deconstruct_network(EmulationEnvironment& env) {
  const int parallel = env.config.effective_parallel_num();

  // Inventory: the build record plus anything created during the run.
  std::set<std::string> links_to_destroy = env.built_links;
  for (const auto& m : env.scenario.machines)
    for (const auto& id : env.dataplane.links_of(m.machine_index))
      links_to_destroy.insert(id);

  // Wave accounting per machine; links charged to their placement
  // owner, mid-run links to the first endpoint's machine.
  std::map<std::string, int> link_owner;
  for (const auto& [machine, ids] : env.placement.links_by_machine)
    for (const auto& lid : ids) link_owner[lid] = machine;
  std::map<int, int> machine_links, machine_nodes;
  for (const auto& id : links_to_destroy) {
    int m = 0;
    auto it = link_owner.find(id);
    if (it != link_owner.end()) {
      m = it->second;
    } else if (env.snapshot.links.count(id)) {
      m = env.machine_of_node.at(env.snapshot.links.at(id).endpoint_a);
    }
    machine_links[m] += 1;
  }
  for (const auto& id : env.built_nodes) machine_nodes[env.machine_of_node.at(id)] += 1;

  int link_phase = 0, node_phase = 0;
  for (const auto& [m, count] : machine_links)
    link_phase = std::max(link_phase,
                          (count + parallel - 1) / parallel * env.config.link_task_cost);
  for (const auto& [m, count] : machine_nodes)
    node_phase = std::max(node_phase,
                          (count + parallel - 1) / parallel * env.config.node_task_cost);

  // Actual teardown: every link before any node.
  size_t links_destroyed = 0;
  for (const auto& id : links_to_destroy) {
    env.dataplane.destroy_link(id);
    env.store.del("links/" + id);
    ++links_destroyed;
  }
  env.built_links.clear();

  size_t nodes_destroyed = 0;
  for (const auto& id : env.built_nodes) {
    const int m = env.machine_of_node.at(id);
    for (const auto& iface : env.dataplane.interfaces_of(m)) {
      const auto info = env.dataplane.interface_info(iface);
      if (info && info->owner_node == id) env.dataplane.remove_interface(m, iface);
    }
    env.store.del("nodes/" + id);
    ++nodes_destroyed;
  }
  env.built_nodes.clear();
  env.constructed = false;

  return Json{{"link_destroys", links_destroyed},
              {"node_destroys", nodes_destroyed},
              {"link_phase_ticks", link_phase},
              {"node_phase_ticks", node_phase},
              {"makespan", link_phase + node_phase},
              {"parallel_num", parallel}};
}

// Flat key -> integer map for the metrics file.
inline Json flat_metrics(const Json& run_report) {
  Json out = Json::object();
  const Json& counters = run_report.at("counters");
  for (auto it = counters.begin(); it != counters.end(); ++it)
    for (auto c = it.value().begin(); c != it.value().end(); ++c)
      out[it.key() + "." + c.key()] = c.value();
  int64_t handovers = 0, creates = 0, destroys = 0, delay_updates = 0;
  for (const auto& e : run_report.at("epochs")) {
    handovers += e.at("handovers").get<int64_t>();
    creates += e.at("creates").get<int64_t>();
    destroys += e.at("destroys").get<int64_t>();
    delay_updates += e.at("delay_updates").get<int64_t>();
  }
  out["epochs"] = run_report.at("epochs").size();
  out["events.handovers"] = handovers;
  out["events.creates"] = creates;
  out["events.destroys"] = destroys;
  out["events.delay_updates"] = delay_updates;
  out["resyncs"] = run_report.at("resyncs");
  out["store_revision"] = run_report.at("store_revision");
  return out;
}

}  // namespace satnet
