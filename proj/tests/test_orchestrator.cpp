#include <catch2/catch_amalgamated.hpp>

#include "satnet/orchestrator.hpp"

using namespace satnet;

namespace {

// N heavy node tasks of the given cost and N light link tasks in a ring
// (link i depends on nodes i and i+1 mod N), all on one machine.
TaskGraph ring_workload(int n, int node_cost = 10, int link_cost = 1) {
  TaskGraph g;
  for (int i = 0; i < n; ++i) {
    TaskGraph::Task t;
    t.id = "node:" + pad_index(i);
    t.heavy = true;
    t.cost = node_cost;
    g.node_tasks.push_back(t);
  }
  for (int i = 0; i < n; ++i) {
    TaskGraph::Task t;
    t.id = "link:" + pad_index(i);
    t.heavy = false;
    t.cost = link_cost;
    t.deps = {"node:" + pad_index(i), "node:" + pad_index((i + 1) % n)};
    g.link_tasks.push_back(t);
  }
  return g;
}

ScenarioFile tiny_scenario(int machines = 2, double duration_s = 0.0) {
  ScenarioFile sc;
  ShellSpec shell;
  shell.name = "ring";
  shell.altitude_km = 550.0;
  shell.num_orbits = 1;
  shell.sats_per_orbit = 6;
  shell.inclination_deg = 53.0;
  sc.shells.push_back(shell);
  for (int i = 0; i < machines; ++i) {
    MachineRecord m;
    m.machine_index = i;
    m.weight = 8;
    m.nic_ip = "192.168.9." + std::to_string(10 + i);
    m.nic_mac = "02:00:00:00:09:0" + std::to_string(i);
    sc.machines.push_back(m);
  }
  sc.config.parallel_num = 2;
  sc.config.epoch_step_s = 10.0;
  sc.config.duration_s = duration_s;
  return sc;
}

ScenarioFile iridium_scenario(double duration_s, LinkMode mode = LinkMode::ebpf) {
  ScenarioFile sc = generate_scenario("iridium");
  sc.apps.clear();
  sc.config.duration_s = duration_s;
  sc.config.epoch_step_s = 10.0;
  sc.config.parallel_num = 4;
  sc.config.link_mode = mode;
  return sc;
}

}  // namespace

TEST_CASE("dependency-aware schedule starts links as endpoints finish",
          "[orchestrator][schedule]") {
  // Two nodes and one link on a single worker: the link runs right
  // after the second node, not after some later unrelated node.
  TaskGraph g;
  for (int i = 0; i < 3; ++i) {
    TaskGraph::Task t;
    t.id = "node:" + pad_index(i);
    t.heavy = true;
    t.cost = 10;
    g.node_tasks.push_back(t);
  }
  TaskGraph::Task l;
  l.id = "link:0";
  l.heavy = false;
  l.cost = 1;
  l.deps = {"node:000", "node:001"};
  g.link_tasks.push_back(l);

  ScheduleOptions opt;
  opt.parallel_num = 1;
  const auto r = simulate_schedule(g, opt);
  REQUIRE(r.trace("link:0").start == 20);    // right when node:001 finishes
  REQUIRE(r.trace("node:002").start == 20);  // unrelated node runs alongside
  REQUIRE_FALSE(r.aborted);
}

TEST_CASE("dependency-aware beats phase-separated on the heavy/light workload",
          "[orchestrator][schedule]") {
  for (const auto& [n, p] : std::vector<std::pair<int, int>>{
           {8, 4}, {12, 4}, {20, 4}, {4, 4}, {3, 8}, {40, 4}}) {
    const auto g = ring_workload(n);
    ScheduleOptions dep;
    dep.parallel_num = p;
    dep.policy = SchedulePolicy::dependency_aware;
    ScheduleOptions phase;
    phase.parallel_num = p;
    phase.policy = SchedulePolicy::phase_separated;

    const int dep_makespan = simulate_schedule(g, dep).makespan;
    const int phase_makespan = simulate_schedule(g, phase).makespan;
    INFO("n=" << n << " parallel=" << p);
    REQUIRE(dep_makespan <= phase_makespan);
    if (p < n) REQUIRE(dep_makespan < phase_makespan);
  }
}

TEST_CASE("schedule respects dependencies and the worker bound",
          "[orchestrator][schedule]") {
  const auto g = ring_workload(17, 7, 2);
  ScheduleOptions opt;
  opt.parallel_num = 3;
  const auto r = simulate_schedule(g, opt);

  std::map<std::string, TaskTrace> by_id;
  for (const auto& t : r.tasks) by_id[t.id] = t;
  for (const auto& link : g.link_tasks) {
    const auto& lt = by_id.at(link.id);
    REQUIRE(lt.status == "done");
    for (const auto& dep : link.deps) REQUIRE(lt.start >= by_id.at(dep).finish);
  }
  REQUIRE(r.peak_heavy_concurrency() <= 3);
}

TEST_CASE("failed node task blocks its links and aborts construction",
          "[orchestrator][schedule]") {
  const auto g = ring_workload(6);
  ScheduleOptions opt;
  opt.parallel_num = 2;
  opt.failing_tasks = {"node:003"};
  const auto r = simulate_schedule(g, opt);
  REQUIRE(r.aborted);
  REQUIRE(std::find(r.failed.begin(), r.failed.end(), "node:003") != r.failed.end());
  // Both links touching the failed node never start.
  REQUIRE(r.trace("link:002").start == -1);
  REQUIRE(r.trace("link:003").start == -1);
  const auto& blocked = r.blocked;
  REQUIRE(std::find(blocked.begin(), blocked.end(), "link:002") != blocked.end());
  REQUIRE(std::find(blocked.begin(), blocked.end(), "link:003") != blocked.end());
}

TEST_CASE("link-state commands are processed ahead of queued construction work",
          "[orchestrator][schedule]") {
  const auto g = ring_workload(10);
  ScheduleOptions opt;
  opt.parallel_num = 2;
  opt.commands = {{15, 0, "set-delay isl-x 12ms"}, {37, 0, "disconnect isl-y"}};
  const auto r = simulate_schedule(g, opt);

  REQUIRE(r.commands.size() == 2);
  for (const auto& c : r.commands) {
    REQUIRE(c.processed == c.arrival);
    // Priority: nothing that was still queued at the command's arrival
    // started before it.
    for (const auto& t : r.tasks) {
      if (t.machine != c.machine || t.start < 0) continue;
      if (t.start >= c.arrival) REQUIRE(t.start >= c.processed);
    }
  }
}

TEST_CASE("construct_network builds environment, placement and store records",
          "[orchestrator][construct]") {
  const auto sc = tiny_scenario();
  auto env = construct_network(sc.config, sc);

  REQUIRE(env->constructed);
  REQUIRE(env->built_nodes.size() == 6);
  REQUIRE(env->built_links.size() == 6);  // single-orbit ring
  REQUIRE(env->store.get_prefix("nodes/").size() == 6);
  REQUIRE(env->store.get_prefix("links/").size() == 6);
  REQUIRE(env->store.get_prefix("machines/").size() == 2);

  // Placement is published on the node records.
  for (const auto& rec : env->store.get_prefix("nodes/")) {
    const auto n = node_from_json(Json::parse(rec.value));
    REQUIRE(n.machine_index >= 0);
    REQUIRE(n.machine_index == env->machine_of_node.at(n.node_id));
  }

  // Dependency safety on the real construction trace.
  std::map<std::string, TaskTrace> by_id;
  for (const auto& t : env->construction.tasks) by_id[t.id] = t;
  for (const auto& link : env->graph.link_tasks)
    for (const auto& dep : link.deps)
      REQUIRE(by_id.at(link.id).start >= by_id.at(dep).finish);
}

TEST_CASE("aborted construction leaves a partial environment",
          "[orchestrator][construct]") {
  const auto sc = tiny_scenario();
  ConstructOptions opt;
  opt.failing_tasks = {"node:sat-ring-000-002"};
  auto env = construct_network(sc.config, sc, opt);

  REQUIRE_FALSE(env->constructed);
  REQUIRE(env->construction.aborted);
  REQUIRE(env->built_nodes.count("sat-ring-000-002") == 0);
  REQUIRE(env->built_links.size() < 6);
  REQUIRE_THROWS_AS(run_epochs(*env), ContractViolation);

  // Deconstruction destroys exactly what was built.
  const size_t built_nodes = env->built_nodes.size();
  const size_t built_links = env->built_links.size();
  const auto report = deconstruct_network(*env);
  REQUIRE(report.at("node_destroys").get<size_t>() == built_nodes);
  REQUIRE(report.at("link_destroys").get<size_t>() == built_links);
}

TEST_CASE("static ring scenario: zero events after epoch 0", "[orchestrator][epochs]") {
  auto sc = tiny_scenario(2, 120.0);  // no ground sites, single-orbit ring
  auto env = construct_network(sc.config, sc);
  const auto result = run_epochs(*env);

  REQUIRE(result.event_log.size() == 13);  // t = 0,10,...,120
  for (const auto& [t, events] : result.event_log) REQUIRE(events.empty());
  REQUIRE(result.report.at("resyncs").get<int>() == 0);
}

TEST_CASE("duration zero runs exactly one epoch", "[orchestrator][epochs]") {
  auto sc = tiny_scenario(1, 0.0);
  auto env = construct_network(sc.config, sc);
  const auto result = run_epochs(*env);
  REQUIRE(result.event_log.size() == 1);
  REQUIRE(result.event_log[0].first == 0.0);
}

TEST_CASE("Iridium run: handovers occur, masks hold, replay matches",
          "[orchestrator][epochs]") {
  auto sc = iridium_scenario(3600.0);
  auto env = construct_network(sc.config, sc);
  auto result = run_epochs(*env, 7);

  // At least one handover across the hour.
  REQUIRE(result.report.at("handover_log").size() > 0);

  // Replaying the event log onto the initial snapshot reproduces the
  // final snapshot byte for byte.
  TopologySnapshot replayed = result.initial_snapshot;
  for (const auto& [t, events] : result.event_log)
    replayed = apply_events(replayed, events, t);
  REQUIRE(to_json(replayed).dump() == to_json(result.final_snapshot).dump());

  // Every epoch's connected GSLs clear the elevation mask (recheck from
  // the replay, independent of the run loop's internal check).
  TopologySnapshot walk = result.initial_snapshot;
  for (const auto& [t, events] : result.event_log) {
    walk = apply_events(walk, events, t);
    for (const auto& [id, l] : walk.links) {
      if (l.link_type != LinkType::gsl) continue;
      const auto& site = walk.nodes.at(l.endpoint_a);
      const auto el = elevation_and_visibility(
          node_position(site, t), node_position(walk.nodes.at(l.endpoint_b), t),
          site.ground_site->min_elevation_deg);
      REQUIRE(el.visible);
    }
  }

  // The appliers consumed every event: the dataplane link set matches
  // the final snapshot.
  std::set<std::string> seen;
  for (const auto& m : sc.machines)
    for (const auto& id : env->dataplane.links_of(m.machine_index)) seen.insert(id);
  REQUIRE(seen.size() == result.final_snapshot.links.size());

  // Without failures the ISL table is time-invariant: no ISL is ever
  // created or destroyed mid-run.
  for (const auto& [t, events] : result.event_log)
    for (const auto& ev : events)
      if (ev.kind == LinkEvent::Kind::create || ev.kind == LinkEvent::Kind::destroy)
        REQUIRE(ev.link_id.rfind("gsl-", 0) == 0);
}

TEST_CASE("same scenario and seed give byte-identical reports",
          "[orchestrator][epochs]") {
  auto sc = iridium_scenario(600.0);
  auto env1 = construct_network(sc.config, sc);
  auto env2 = construct_network(sc.config, sc);
  const auto r1 = run_epochs(*env1, 42);
  const auto r2 = run_epochs(*env2, 42);
  REQUIRE(r1.report.dump() == r2.report.dump());
}

TEST_CASE("launch_applications honors timestamps and ordering", "[orchestrator][apps]") {
  std::vector<ApplicationRecord> apps(3);
  apps[0].app_id = "b-late";
  apps[0].node_id = "n1";
  apps[0].launch_timestamp = 25.0;
  apps[1].app_id = "a-late";
  apps[1].node_id = "n1";
  apps[1].launch_timestamp = 25.0;
  apps[2].app_id = "never";
  apps[2].node_id = "n2";
  apps[2].launch_timestamp = 1000.0;

  const auto plan = launch_applications(apps, {"n1", "n2"}, 10.0, 60.0);
  REQUIRE(plan.size() == 3);
  REQUIRE(plan[0].app_id == "a-late");  // same epoch, app id order
  REQUIRE(plan[1].app_id == "b-late");
  REQUIRE(*plan[0].launched_at == 30.0);  // first epoch >= 25
  REQUIRE(*plan[1].launched_at == 30.0);
  REQUIRE_FALSE(plan[2].launched_at.has_value());

  SECTION("t=0 apps launch in the first epoch") {
    std::vector<ApplicationRecord> at0(1);
    at0[0].app_id = "boot";
    at0[0].node_id = "n1";
    at0[0].launch_timestamp = 0.0;
    const auto p = launch_applications(at0, {"n1"}, 10.0, 60.0);
    REQUIRE(*p[0].launched_at == 0.0);
  }

  SECTION("unknown node is a validation error") {
    std::vector<ApplicationRecord> bad(1);
    bad[0].app_id = "x";
    bad[0].node_id = "ghost";
    REQUIRE_THROWS_AS(launch_applications(bad, {"n1"}, 10.0, 60.0), ValidationError);
  }
}

TEST_CASE("launch events appear in the run report", "[orchestrator][apps]") {
  auto sc = iridium_scenario(60.0);
  ApplicationRecord app;
  app.app_id = "probe";
  app.node_id = "gs-beijing";
  app.launch_timestamp = 15.0;
  sc.apps = {app};
  ApplicationRecord never;
  never.app_id = "too-late";
  never.node_id = "gs-nairobi";
  never.launch_timestamp = 9999.0;
  sc.apps.push_back(never);

  auto env = construct_network(sc.config, sc);
  const auto result = run_epochs(*env);
  const auto& log = result.report.at("launch_log");
  REQUIRE(log.size() == 2);
  REQUIRE(log[0].at("app_id") == "probe");
  REQUIRE(log[0].at("launched_at").get<double>() == 20.0);
  REQUIRE(log[1].at("app_id") == "too-late");
  REQUIRE(log[1].at("launched_at").is_null());
}

TEST_CASE("deconstruction tears everything down and is idempotent",
          "[orchestrator][deconstruct]") {
  auto sc = iridium_scenario(120.0);
  auto env = construct_network(sc.config, sc);
  run_epochs(*env);

  const size_t node_count = env->built_nodes.size();
  REQUIRE(node_count == 68);  // 66 satellites + 2 sites

  const auto report = deconstruct_network(*env);
  REQUIRE(report.at("node_destroys").get<size_t>() == node_count);
  REQUIRE(report.at("link_destroys").get<size_t>() >= 121);
  REQUIRE(report.at("makespan").get<int>() > 0);
  REQUIRE(env->store.get_prefix("links/").empty());
  REQUIRE(env->store.get_prefix("nodes/").empty());

  // Idempotent: a second pass has nothing to do.
  const auto again = deconstruct_network(*env);
  REQUIRE(again.at("node_destroys").get<size_t>() == 0);
  REQUIRE(again.at("link_destroys").get<size_t>() == 0);

  SECTION("empty environment gives an empty report") {
    ScenarioFile empty = tiny_scenario();
    empty.shells.clear();
    auto e2 = construct_network(empty.config, empty);
    const auto r2 = deconstruct_network(*e2);
    REQUIRE(r2.at("node_destroys").get<size_t>() == 0);
    REQUIRE(r2.at("link_destroys").get<size_t>() == 0);
  }
}

TEST_CASE("applier resyncs after compaction makes its watch stale",
          "[orchestrator][applier]") {
  auto sc = iridium_scenario(60.0);
  auto env = construct_network(sc.config, sc);

  // Age the store past the applier's intended start revision.
  const int64_t before = env->store.current_revision();
  LinkRecord scratch;
  scratch.link_id = "scratch";
  scratch.endpoint_a = "a";
  scratch.endpoint_b = "b";
  for (int i = 0; i < 20; ++i)
    env->store.put("links/scratch-" + std::to_string(i), canonical_dump(scratch));
  for (int i = 0; i < 20; ++i) env->store.del("links/scratch-" + std::to_string(i));
  env->store.compact(env->store.current_revision());

  MachineApplier applier(0, sc.config.link_mode, env->store, env->dataplane,
                         env->machine_of_node);
  applier.start(before + 1);  // below the compaction floor: stale
  REQUIRE(applier.wait_applied(env->store.current_revision(), std::chrono::seconds(5)));
  applier.stop();
  REQUIRE(applier.resync_count() >= 1);
  REQUIRE(applier.error().empty());
}

TEST_CASE("ISL failure hook injects destroy and recovery events",
          "[orchestrator][epochs]") {
  auto sc = iridium_scenario(120.0);
  auto env = construct_network(sc.config, sc);

  const std::string victim = intra_orbit_link_id("iridium", 0, 0);
  const LinkRecord victim_record = env->snapshot.links.at(victim);

  RunOptions opt;
  opt.isl_failure_hook = [&](const TopologySnapshot& snap, double t) {
    std::vector<LinkEvent> events;
    if (t == 30.0) {
      LinkEvent ev;
      ev.kind = LinkEvent::Kind::destroy;
      ev.link_id = victim;
      events.push_back(ev);
    } else if (t == 60.0 && !snap.links.count(victim)) {
      LinkEvent ev;
      ev.kind = LinkEvent::Kind::create;
      ev.link_id = victim;
      ev.record = victim_record;
      events.push_back(ev);
    }
    return events;
  };
  const auto result = run_epochs(*env, opt);

  // The failure and recovery flow through the store to the appliers.
  bool destroyed_at_30 = false, recovered_at_60 = false;
  for (const auto& [t, events] : result.event_log) {
    for (const auto& ev : events) {
      if (ev.link_id != victim) continue;
      if (t == 30.0 && ev.kind == LinkEvent::Kind::destroy) destroyed_at_30 = true;
      if (t == 60.0 && ev.kind == LinkEvent::Kind::create) recovered_at_60 = true;
    }
  }
  REQUIRE(destroyed_at_30);
  REQUIRE(recovered_at_60);
  REQUIRE(result.final_snapshot.links.count(victim) == 1);

  // Replay still reproduces the final snapshot exactly.
  TopologySnapshot replayed = result.initial_snapshot;
  for (const auto& [t, events] : result.event_log)
    replayed = apply_events(replayed, events, t);
  REQUIRE(to_json(replayed).dump() == to_json(result.final_snapshot).dump());

  // The dataplane saw the removal and the reinstall.
  bool present = false;
  for (const auto& m : sc.machines)
    for (const auto& id : env->dataplane.links_of(m.machine_index))
      present = present || id == victim;
  REQUIRE(present);
}

TEST_CASE("connected links keep delay consistent with distance",
          "[orchestrator][epochs]") {
  auto sc = iridium_scenario(600.0);
  auto env = construct_network(sc.config, sc);
  const auto result = run_epochs(*env);
  for (const auto& [id, l] : result.final_snapshot.links) {
    if (l.state != LinkState::connected || l.distance_km == 0.0) continue;
    const double want = l.distance_km / 299792.458 * 1000.0;
    REQUIRE(std::abs(l.delay_ms - want) <= 1e-9 * want);
  }
}

TEST_CASE("run report counters match the dataplane totals", "[orchestrator][epochs]") {
  auto sc = iridium_scenario(300.0);
  auto env = construct_network(sc.config, sc);
  const auto result = run_epochs(*env);
  const auto total = env->dataplane.total_counters();
  const auto& reported = result.report.at("counters").at("total");
  REQUIRE(reported.at("map_updates").get<uint64_t>() == total.map_updates);
  REQUIRE(reported.at("device_creates").get<uint64_t>() == total.device_creates);

  const auto metrics = flat_metrics(result.report);
  REQUIRE(metrics.at("total.map_updates").get<uint64_t>() == total.map_updates);
  REQUIRE(metrics.at("epochs").get<int>() == 31);
}
