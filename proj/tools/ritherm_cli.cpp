// ritherm command line front end; everything goes through the C API.
#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ritherm/ritherm.h"

using nlohmann::json;

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kUsage = 2, kError = 3 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::optional<std::size_t> trials;
};

void add_common(CLI::App* sub, Common& c, bool config_required) {
  auto* opt = sub->add_option("--config", c.config, "JSON config file");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  else opt->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Base seed (overrides the config)");
  sub->add_option("--out", c.out, "Output directory (overrides the config)");
  sub->add_option("--threads", c.threads, "Worker threads for trials")->check(CLI::PositiveNumber);
  sub->add_option("--trials", c.trials, "Independent trajectories per grid point")->check(CLI::PositiveNumber);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int report_failure(rth_status st) {
  std::fprintf(stderr, "error (%s): %s\n", rth_status_string(st), rth_last_error());
  return st == RTH_PARSE || st == RTH_INVALID_ARGUMENT ? kUsage : kError;
}

int run_kind(const Common& c, const std::string& subcommand, const std::vector<std::string>& kinds) {
  json cfg = json::object();
  std::string base_dir;
  if (!c.config.empty()) {
    cfg = json::parse(read_file(c.config));
    base_dir = std::filesystem::absolute(c.config).parent_path().string();
  }
  if (!cfg.is_object()) {
    std::fprintf(stderr, "error: config must be a JSON object\n");
    return kUsage;
  }
  if (!cfg.contains("kind")) {
    cfg["kind"] = kinds.front();
  } else if (std::find(kinds.begin(), kinds.end(), cfg["kind"].get<std::string>()) == kinds.end()) {
    std::fprintf(stderr, "error: config kind '%s' does not belong to '%s'\n", cfg["kind"].get<std::string>().c_str(),
                 subcommand.c_str());
    return kUsage;
  }
  json over = json::object();
  if (c.seed) over["seed"] = *c.seed;
  if (c.out) over["out"] = *c.out;
  if (c.threads) over["threads"] = *c.threads;
  if (c.trials) over["trials"] = *c.trials;
  const std::string over_s = over.dump();

  char* out = nullptr;
  const rth_status st = rth_run_experiment(cfg.dump().c_str(), base_dir.empty() ? nullptr : base_dir.c_str(),
                                           over_s.c_str(), &out);
  if (st != RTH_OK && st != RTH_CHECK_FAILED) return report_failure(st);
  const json meta = json::parse(out);
  rth_string_free(out);
  std::printf("%s: %zu rows -> %s\n", meta["config"]["name"].get<std::string>().c_str(),
              meta["rows"].get<std::size_t>(), meta["csv_path"].get<std::string>().c_str());
  if (meta.contains("fit") && !meta["fit"].empty()) std::printf("fit: %s\n", meta["fit"].dump().c_str());
  if (st == RTH_CHECK_FAILED) {
    for (const auto& f : meta["failed_checks"]) std::printf("FAILED %s\n", f.get<std::string>().c_str());
    return kCheckFailed;
  }
  return kOk;
}

int run_report(const Common& c, bool plan) {
  const std::string text = read_file(c.config);
  const std::string base_dir = std::filesystem::absolute(c.config).parent_path().string();
  char* out = nullptr;
  const rth_status st = plan ? rth_plan(text.c_str(), base_dir.c_str(), &out)
                             : rth_markov_report(text.c_str(), base_dir.c_str(), &out);
  if (st != RTH_OK) return report_failure(st);
  const json j = json::parse(out);
  rth_string_free(out);
  const std::string dumped = j.dump(2);
  if (c.out) {
    std::filesystem::create_directories(*c.out);
    const auto path = std::filesystem::path(*c.out) / (plan ? "plan.json" : "markov.json");
    std::ofstream(path) << dumped << '\n';
    std::printf("wrote %s\n", path.string().c_str());
  } else {
    std::printf("%s\n", dumped.c_str());
  }
  if (plan && !j.value("valid", false)) return kCheckFailed;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Repeated-interaction thermal state preparation simulator"};
  app.set_version_flag("--version", std::string(rth_version()));
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    std::vector<std::string> kinds;
    bool config_required;
  };
  const std::vector<Sub> runs{
      {"simulate", "Trajectories (or a sweep over t) from a config", {"trajectory", "sweep-t"}, true},
      {"min-l", "Fewest interactions reaching the target distance", {"min-L"}, true},
      {"sweep-beta", "Minimum interactions across inverse temperatures", {"sweep-beta"}, true},
      {"sweep-epsilon", "Minimum total time across target distances", {"sweep-epsilon"}, true},
      {"sweep-gamma-noise", "Minimum total time across ancilla gap noise", {"sweep-gamma-noise"}, true},
      {"validate", "Invariant suites", {"validate", "validate-weak-coupling"}, false},
      {"haar-check", "Monte Carlo checks of Haar moment identities", {"haar-checks"}, false},
  };
  std::map<std::string, Common> commons;
  std::map<std::string, CLI::App*> subs;
  for (const auto& s : runs) {
    subs[s.name] = app.add_subcommand(s.name, s.help);
    add_common(subs[s.name], commons[s.name], s.config_required);
  }
  subs["markov"] = app.add_subcommand("markov", "Analytic transition generator, gap and fixed point");
  add_common(subs["markov"], commons["markov"], true);
  subs["plan"] = app.add_subcommand("plan", "Coupling, time and interaction count for a target");
  add_common(subs["plan"], commons["plan"], true);

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& s : runs)
      if (*subs[s.name]) return run_kind(commons[s.name], s.name, s.kinds);
    if (*subs["markov"]) return run_report(commons["markov"], false);
    if (*subs["plan"]) return run_report(commons["plan"], true);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
  return kUsage;
}
