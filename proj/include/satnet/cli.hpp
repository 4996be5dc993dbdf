#pragma once

// Command surface for batch experiments. One binary, subcommand style:
//   generate  emit a ready-to-run example scenario
//   build     validate, place and construct, report the schedule
//   run       full lifecycle: construct + epoch loop, emit run report
//   destroy   construct then tear down, emit deconstruction report
//   metrics   run and export the flat metrics map
//   path      shortest-delay route between two nodes at a timestamp
//
// Reports go to --out or stdout; SATNET_LOG sets the log level.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "satnet/orchestrator.hpp"

namespace satnet::cli {

namespace detail {

inline int write_output(const Json& payload, const std::string& out_path) {
  const std::string text = payload.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "error: cannot write to '" << out_path << "'\n";
    return 1;
  }
  out << text;
  return 0;
}

inline ScenarioFile load_scenario(const std::string& path) {
  ScenarioFile sc = parse_scenario(path);
  log::info("scenario '" + path + "': " + std::to_string(sc.shells.size()) + " shell(s), " +
            std::to_string(sc.ground_sites.size()) + " site(s), " +
            std::to_string(sc.machines.size()) + " machine(s)");
  return sc;
}

}  // namespace detail

inline int run_command(std::vector<std::string> argv) {
  CLI::App app{"desk-scale LEO satellite network emulation"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string out_path;
  uint64_t seed = 0;
  std::string backend = "model";
  app.add_option("--out", out_path, "write the report to this file instead of stdout");
  app.add_option("--seed", seed, "seed for deterministic runs");
  app.add_option("--backend", backend, "execution backend")
      ->check(CLI::IsMember({"model"}));

  // generate
  auto* generate = app.add_subcommand("generate", "emit an example scenario");
  std::string constellation = "iridium";
  generate->add_option("--constellation", constellation,
                       "constellation preset (e.g. iridium, starlink-shell-1, "
                       "starlink-5shell)");

  // build
  auto* build = app.add_subcommand("build", "construct the environment and report");
  std::string build_scenario;
  build->add_option("--scenario", build_scenario, "scenario JSON file")->required();

  // run
  auto* run = app.add_subcommand("run", "construct and run the epoch loop");
  std::string run_scenario;
  run->add_option("--scenario", run_scenario, "scenario JSON file")->required();

  // destroy
  auto* destroy = app.add_subcommand("destroy", "construct and tear down");
  std::string destroy_scenario;
  destroy->add_option("--scenario", destroy_scenario, "scenario JSON file")->required();

  // metrics
  auto* metrics = app.add_subcommand("metrics", "run and export the flat metrics map");
  std::string metrics_scenario;
  metrics->add_option("--scenario", metrics_scenario, "scenario JSON file")->required();

  // path
  auto* path_cmd = app.add_subcommand("path", "shortest-delay path query");
  std::string path_scenario, src, dst;
  double query_t = 0.0;
  path_cmd->add_option("--scenario", path_scenario, "scenario JSON file")->required();
  path_cmd->add_option("--src", src, "source node id")->required();
  path_cmd->add_option("--dst", dst, "destination node id")->required();
  path_cmd->add_option("--t", query_t, "timestamp in seconds (default 0)");

  try {
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (generate->parsed()) {
      const ScenarioFile sc = generate_scenario(constellation);
      return detail::write_output(to_json(sc), out_path);
    }

    if (build->parsed()) {
      const ScenarioFile sc = detail::load_scenario(build_scenario);
      auto env = construct_network(sc.config, sc);
      size_t inter = 0;
      for (const auto& [id, loc] : env->locality)
        if (loc == LinkLocality::inter_machine) ++inter;
      Json report{{"constructed", env->constructed},
                  {"nodes", env->built_nodes.size()},
                  {"links", env->built_links.size()},
                  {"inter_machine_links", inter},
                  {"construction", to_json(env->construction)},
                  {"preflight_checklist", preflight_checklist()}};
      const int rc = detail::write_output(report, out_path);
      return rc != 0 ? rc : (env->constructed ? 0 : 1);
    }

    if (run->parsed()) {
      const ScenarioFile sc = detail::load_scenario(run_scenario);
      auto env = construct_network(sc.config, sc);
      const auto result = run_epochs(*env, seed);
      return detail::write_output(result.report, out_path);
    }

    if (destroy->parsed()) {
      const ScenarioFile sc = detail::load_scenario(destroy_scenario);
      auto env = construct_network(sc.config, sc);
      const auto report = deconstruct_network(*env);
      return detail::write_output(report, out_path);
    }

    if (metrics->parsed()) {
      const ScenarioFile sc = detail::load_scenario(metrics_scenario);
      auto env = construct_network(sc.config, sc);
      const auto result = run_epochs(*env, seed);
      return detail::write_output(flat_metrics(result.report), out_path);
    }

    if (path_cmd->parsed()) {
      const ScenarioFile sc = detail::load_scenario(path_scenario);
      // Fresh assignment at the query time, no pass history.
      auto snap = satnet::detail::topology_at(sc, sc.config, query_t);
      const auto result = shortest_delay_path(snap, src, dst);
      if (!result) {
        return detail::write_output(Json{{"reachable", false}, {"src", src}, {"dst", dst}},
                                    out_path);
      }
      return detail::write_output(Json{{"reachable", true},
                                       {"src", src},
                                       {"dst", dst},
                                       {"t", query_t},
                                       {"total_delay_ms", result->total_delay_ms},
                                       {"nodes", result->node_ids},
                                       {"links", result->link_ids}},
                                  out_path);
    }
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& v : e.violations()) std::cerr << "  - " << v << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace satnet::cli
