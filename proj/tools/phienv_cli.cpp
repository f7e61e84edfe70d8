#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "phienv/scenario.hpp"

namespace fs = std::filesystem;
using namespace phienv;

namespace {

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::string criterion;
};

RunConfig load(const Options& o) {
  RunConfig rc = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.seed) rc.seed = *o.seed;
  if (o.out) rc.output = *o.out;
  return rc;
}

void print_criterion(const CriterionResult& r) {
  std::printf("%s  %2d %-21s %s  [%zu instances, %.1f s]\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(),
              r.detail.c_str(), r.instances, r.seconds);
  std::fflush(stdout);
}

// Returns true when every scenario met its expectation.
bool scan_and_report(const RunConfig& rc) {
  const ScanResult res = run_scan(rc);
  write_scan(res, rc.output);
  for (const auto& r : res.scenarios) {
    std::printf("%s  scenario %s\n", r.ok() ? "ok      " : "MISMATCH", r.name.c_str());
    if (!r.ok()) std::fprintf(stderr, "scenario %s did not meet its expectation\n", r.name.c_str());
  }
  std::printf("wrote %zu scenario file(s) and summary.csv to %s\n", res.scenarios.size(), rc.output.c_str());
  return res.ok();
}

int run_scan_cmd(const Options& o) {
  const RunConfig rc = load(o);
  if (rc.scenarios.empty()) throw Error(ErrorKind::kConfig, "config defines no [scenario.*] sections");
  return scan_and_report(rc) ? 0 : 1;
}

// `only` empty: the [suite] criteria list, or everything.
int run_suite_cmd(const Options& o, const std::vector<std::string>& only) {
  const RunConfig rc = load(o);
  std::vector<CriterionResult> results =
      run_acceptance(rc.tolerances, only.empty() ? rc.criteria : only, print_criterion);
  fs::create_directories(rc.output);
  write_file(fs::path(rc.output) / "suite_summary.csv", suite_summary_csv(results));
  bool ok = true;
  for (const auto& r : results)
    if (!r.passed) {
      std::fprintf(stderr, "criterion %d %s failed: %s\n", r.id, r.name.c_str(), r.detail.c_str());
      ok = false;
    }
  if (!rc.scenarios.empty()) ok = scan_and_report(rc) && ok;
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phi-envelope numerical toolkit"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("-c,--config", o.config, "scenario configuration (INI)");
    if (config_required) opt->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", o.out, "output directory (overrides [run] output)");
    sub->add_option("-s,--seed", o.seed, "random seed (overrides [run] seed)");
  };
  CLI::App* scan = app.add_subcommand("scan", "evaluate the scenarios of a config over their y grids");
  add_common(scan, true);
  CLI::App* suite = app.add_subcommand("suite", "run the acceptance suite plus any config scenarios");
  add_common(suite, false);
  CLI::App* check = app.add_subcommand("check", "run a single acceptance criterion");
  check->add_option("criterion", o.criterion, "criterion name")->required()->check(CLI::IsMember(criterion_names()));
  add_common(check, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (scan->parsed()) return run_scan_cmd(o);
    if (suite->parsed()) return run_suite_cmd(o, {});
    return run_suite_cmd(o, {o.criterion});
  } catch (const Error& e) {
    std::fprintf(stderr, "phienv: %s\n", e.what());
    return e.kind() == ErrorKind::kConfig ? 2 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "phienv: %s\n", e.what());
    return 3;
  }
}
