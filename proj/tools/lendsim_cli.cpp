// lendsim: validate, run and scan lending-market scenarios.
//
// Exit codes: 0 ok, 1 validation, 2 runtime, 3 IO.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "lendsim/errors.hpp"
#include "lendsim/flashloan.hpp"
#include "lendsim/scenario.hpp"
#include "lendsim/simulation.hpp"

namespace fs = std::filesystem;
using namespace lendsim;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;
constexpr int kIo = 3;

void report(const ScenarioError& e) {
  std::cerr << (e.parse_error() ? "parse error" : "validation failed") << " (" << e.messages().size()
            << (e.messages().size() == 1 ? " problem)\n" : " problems)\n");
  for (const auto& m : e.messages()) std::cerr << "  " << m << '\n';
}

/// Journal and telemetry gathered so far, so an aborted run can be inspected.
void dump_diagnostics(const Simulation& sim, const fs::path& out) {
  try {
    sim.write_outputs(out);
    std::ofstream journal(out / "journal.jsonl", std::ios::binary);
    sim.world().ledger.write_journal(journal);
    std::cerr << "diagnostics written to " << out.string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "could not write diagnostics: " << e.what() << '\n';
  }
}

int cmd_validate(const fs::path& path) {
  Scenario s = load_scenario(path);
  std::cout << "OK (" << s.assets.size() << " assets, " << s.pools.size() << " pools, " << s.venues.size()
            << " venues, " << s.agents.size() << " agents, horizon " << s.horizon << ")\n";
  return kOk;
}

int cmd_run(const fs::path& path, const fs::path& out, std::optional<std::uint64_t> seed,
            std::optional<std::size_t> steps) {
  Scenario s = load_scenario(path);
  if (steps && *steps == 0) {
    std::cerr << "--steps must be >= 1\n";
    return kValidation;
  }
  Simulation sim(s, RunOptions{seed, steps});
  try {
    sim.run();
  } catch (const ProtocolError& e) {
    std::cerr << "aborted at step " << sim.next_step() << ": " << to_string(e.code()) << ": " << e.what() << '\n';
    dump_diagnostics(sim, out);
    return kRuntime;
  }
  sim.write_outputs(out);
  std::cout << "ran " << sim.horizon() << " steps, outputs in " << out.string() << '\n';
  return kOk;
}

int cmd_scan(const fs::path& path, std::size_t step) {
  Scenario s = load_scenario(path);
  if (step >= s.horizon) {
    std::cerr << "--step " << step << " is outside the horizon (" << s.horizon << " steps)\n";
    return kValidation;
  }
  Simulation sim(s);
  // Agents act as in a run up to the previous step; at the scan step only
  // prices, accrual and rewards move.
  while (sim.next_step() < step) sim.step();
  sim.advance_quietly();
  World& w = sim.world();
  AccountId scanner = w.ledger.add_account("scanner", AccountKind::user);
  // The scanner holds nothing, so profits are reported gross of gas.
  w.gas_fee = Wad{};
  for (const auto& o : scan_arbitrage(w, step, scanner)) std::cout << opportunity_json(w, o) << '\n';
  for (const auto& o : scan_liquidations(w, step, scanner)) std::cout << opportunity_json(w, o) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic lending-protocol simulator"};
  app.require_subcommand(1);

  fs::path scenario, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  std::size_t scan_step = 0;

  auto* validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("--scenario", scenario, "scenario JSON")->required();

  auto* run = app.add_subcommand("run", "run a scenario and write telemetry");
  run->add_option("--scenario", scenario, "scenario JSON")->required();
  run->add_option("--out", out, "output directory")->required();
  run->add_option("--seed", seed, "override the master seed");
  run->add_option("--steps", steps, "override the horizon");

  auto* scan = app.add_subcommand("scan", "print flash-loan opportunities at a step");
  scan->add_option("--scenario", scenario, "scenario JSON")->required();
  scan->add_option("--step", scan_step, "step to scan at")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidation;
  }

  try {
    if (*validate) return cmd_validate(scenario);
    if (*run) return cmd_run(scenario, out, seed, steps);
    if (*scan) return cmd_scan(scenario, scan_step);
  } catch (const ScenarioError& e) {
    report(e);
    return kValidation;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const ProtocolError& e) {
    std::cerr << to_string(e.code()) << ": " << e.what() << '\n';
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
