// One line per acceptance criterion; exit status is nonzero if any fails.

#include <cstdio>
#include <filesystem>

#include "radwave/errors.hpp"
#include "radwave/experiment.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path out = argc > 1 ? argv[1] : "acceptance_out";
  int failed = 0;
  try {
    const auto results = radwave::run_acceptance(out, [](const radwave::CriterionResult& r) {
      std::printf("[%s] %2d %-34s %s  (%.1fs)\n", r.passed ? "PASS" : "FAIL", r.id, r.title.c_str(),
                  r.measured.c_str(), r.seconds);
      std::fflush(stdout);
    });
    for (const auto& r : results) failed += r.passed ? 0 : 1;
    std::printf("%zu criteria, %d failed\n", results.size(), failed);
  } catch (const radwave::Error& e) {
    std::fprintf(stderr, "acceptance: %s: %s\n", radwave::to_string(e.kind()), e.what());
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
