#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "phienv/acceptance.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> only(argv + 1, argv + argc);
  bool all = true;
  try {
    phienv::run_acceptance({}, only, [&](const phienv::CriterionResult& r) {
      std::printf("%s  %2d %-21s %s  [%zu instances, %.1f s]\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(),
                  r.detail.c_str(), r.instances, r.seconds);
      std::fflush(stdout);
      all = all && r.passed;
    });
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance: %s\n", e.what());
    return 2;
  }
  return all ? 0 : 1;
}
