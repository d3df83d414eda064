// Command-line front end: runs scenario suites (schedule exploration, crash
// campaigns, persistence-cost accounting) and emits text or json-lines
// reports. Exit codes: 0 all checks pass, 1 check failure, 2 bad usage.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rflock/harness/scenarios.hpp"

using nlohmann::json;
using namespace rflock;
using namespace rflock::harness;

namespace {

json report_json(const ScenarioResult& r) {
  json j;
  j["scenario"] = r.name;
  j["pass"] = r.pass;
  j["detail"] = r.detail;
  json reps = json::array();
  for (const auto& rep : r.reports) {
    json x;
    x["name"] = rep.name;
    x["schedules"] = rep.schedules;
    x["crash_terminals"] = rep.crash_terminals;
    x["failures"] = rep.failure_count;
    x["pwb"] = rep.counters.pwb;
    x["pfence"] = rep.counters.pfence;
    x["psync"] = rep.counters.psync;
    if (rep.random_mode) x["seed"] = rep.seed;
    x["truncated"] = rep.truncated;
    x["failure_samples"] = rep.failures;
    reps.push_back(x);
  }
  j["reports"] = reps;
  j["machine"] = r.machine_block();
  return j;
}

void print_text(const ScenarioResult& r, std::ostream& os) {
  os << "=== " << r.name << (r.pass ? " [ok]" : " [FAILED]") << "\n";
  if (!r.detail.empty()) os << r.detail;
  for (const auto& rep : r.reports) {
    os << rep.summary() << "\n";
    for (const auto& f : rep.failures) os << "  FAIL " << f << "\n";
  }
  os << r.machine_block() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rflock scenario runner"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "list built-in scenarios");

  auto* run = app.add_subcommand("run", "run a scenario");
  std::string scenario;
  std::string mode;
  std::string format = "text";
  std::string fault = "none";
  std::string spec_file;
  ScenarioOptions opt;
  int threads = 0;
  uint64_t steps = 0;
  int crashes = -1;
  run->add_option("--scenario", scenario, "scenario name (or 'all')");
  run->add_option("--threads", threads, "thread count where configurable");
  run->add_option("--steps", steps, "per-schedule step bound");
  run->add_option("--crashes", crashes, "crash budget (0 or 1)");
  run->add_option("--mode", mode, "exhaustive|random");
  run->add_option("--seed", opt.seed, "random-mode seed");
  run->add_option("--schedules", opt.random_schedules,
                  "random-mode schedule count");
  run->add_option("--format", format, "text|json-lines");
  run->add_option("--fault-inject", fault,
                  "none|skip-recover-cas|skip-rd-pwb|apply-before-persist");
  run->add_option("--spec", spec_file, "key=value scenario spec file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (list->parsed()) {
    for (const auto& n : scenario_names()) std::cout << n << "\n";
    return 0;
  }

  try {
    if (!spec_file.empty()) {
      std::ifstream in(spec_file);
      if (!in) throw ScenarioError("cannot open spec file " + spec_file);
      std::stringstream ss;
      ss << in.rdbuf();
      ScenarioSpec spec = parse_scenario_spec(ss.str());
      if (scenario.empty()) scenario = spec.scenario;
      opt = spec.opt;
    }
    if (scenario.empty()) throw ScenarioError("missing --scenario");
    if (threads > 0) opt.threads = threads;
    if (steps > 0) opt.steps = steps;
    if (crashes >= 0) opt.crashes = crashes;
    if (mode == "random")
      opt.random_mode = true;
    else if (mode == "exhaustive")
      opt.random_mode = false;
    else if (!mode.empty())
      throw ScenarioError("unknown mode " + mode);
    if (fault == "skip-recover-cas" || fault == "skip-recover-step")
      opt.fault = FaultInject::skip_recover_cas;
    else if (fault == "skip-rd-pwb")
      opt.fault = FaultInject::skip_rd_pwb;
    else if (fault == "apply-before-persist")
      opt.fault = FaultInject::apply_before_persist;
    else if (fault != "none")
      throw ScenarioError("unknown fault " + fault);

    std::vector<std::string> to_run;
    if (scenario == "all")
      to_run = scenario_names();
    else
      to_run = {scenario};

    bool all_pass = true;
    for (const auto& name : to_run) {
      ScenarioResult r = run_scenario(name, opt);
      all_pass = all_pass && r.pass;
      if (format == "json-lines")
        std::cout << report_json(r).dump() << "\n";
      else
        print_text(r, std::cout);
    }
    return all_pass ? 0 : 1;
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
