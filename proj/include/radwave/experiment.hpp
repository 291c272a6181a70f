#pragma once

// Experiment orchestration: JSON configs in, CSV series and JSON summaries out.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "radwave/radial_core.hpp"

namespace radwave {

enum class RunMode { Full, Split, Hyperbolic, FreeOracle };

const char* to_string(RunMode mode) noexcept;

/// Initial-data description. `random_shells` draws a sum of Gaussian shells
/// from the config seed; the other kinds map onto Profile.
struct ProfileSpec {
  std::string kind = "gaussian";
  double a = 1.0;
  double b = 1.0;  // bump radius, or polydecay exponent m
  int count = 3;   // random_shells only

  RadialField sample(const RadialGrid& grid, std::uint64_t seed) const;
  std::optional<Profile> analytic() const;
};

struct HyperbolicSpec {
  double s_max = 5.0;
  std::size_t n = 4095;
  double dt_factor = 0.25;
  double tau_end = 2.0;
};

struct ExperimentConfig {
  double p = 4.0;
  ProfileSpec profile;
  double amplitude = 1.0;
  double epsilon = 0.05;
  double c_morawetz = 0.01;
  double r_max = 20.0;
  std::size_t n = 1024;
  double dt_factor = 0.5;
  double cfl = 0.5;  // solver stability cap, dt_factor <= cfl
  double t_end = 5.0;
  double t0 = 0.0;
  RunMode mode = RunMode::Full;
  std::size_t record_every = 1;
  std::uint64_t seed = 0;
  double exterior_offset = 0.5;
  HyperbolicSpec hyperbolic;
  bool checkpoints = false;
  std::filesystem::path out_dir = "out";
};

/// Throws InvalidArgument naming the offending field, e.g. "config.p: ...".
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
void validate(const ExperimentConfig& cfg);

/// Applies `path = value` (dotted path into the JSON form) to a config.
ExperimentConfig with_override(const ExperimentConfig& cfg, const std::string& path,
                               const nlohmann::json& value);

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string comparison;  // "<=", "<", ">=", "=="
  bool passed = false;
  std::string detail;
};

Check make_check(std::string name, double value, std::string comparison, double threshold,
                 std::string detail = {});

struct RunSummary {
  ExperimentConfig config;
  std::map<std::string, double> constants;
  /// Constants that report() can recompute from the series files.
  std::vector<std::string> recomputable;
  std::vector<Check> checks;
  double wall_time_s = 0.0;
  bool completed = true;
  std::string failure;

  bool passed() const;
};

nlohmann::json to_json(const RunSummary& s);
RunSummary summary_from_json(const nlohmann::json& j);

/// Executes one experiment and writes its files below cfg.out_dir.
/// Config errors throw; numeric failures are recorded in the summary.
RunSummary run(const ExperimentConfig& cfg);

/// Cartesian sweep over dotted-path axes. Cells run concurrently (RW_THREADS
/// caps the worker count) and write to out_dir/cell_NNN.
std::vector<RunSummary> sweep(const ExperimentConfig& base,
                              const std::map<std::string, std::vector<nlohmann::json>>& axes,
                              std::size_t cap = 256);

/// Sweep tables: C_gronwall vs epsilon, hyperbolic monotonicity vs p,
/// convergence slopes vs n.
nlohmann::json sweep_tables(const std::vector<RunSummary>& summaries);

struct ReportDocument {
  std::string text;
  nlohmann::json json;
  bool all_passed = true;
};

/// One row per check name with pass counts and measured values. When series
/// files are present, three constants per run (chosen from its seed) are
/// recomputed from disk and must agree to 1e-12.
ReportDocument report(const std::vector<RunSummary>& summaries);

/// Loads every summary.json under dir (the dir itself and cell_* children).
std::vector<RunSummary> load_summaries(const std::filesystem::path& dir);

/// Recomputes a named constant from the series files of a finished run.
std::optional<double> recompute_constant(const RunSummary& s, const std::string& name);

// ---------------------------------------------------------------- acceptance

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string measured;
  double seconds = 0.0;
};

/// Runs every acceptance criterion, writing series under out_dir and calling
/// `progress` after each criterion.
std::vector<CriterionResult> run_acceptance(const std::filesystem::path& out_dir,
                                            const std::function<void(const CriterionResult&)>& progress = {});

/// Largest ratio int|P f|^{p+1}/|x| / int|f|^{p+1}/|x| over j = -3..8 for the
/// sharp and smooth low and high projections.
double lemma32_ratio_max(const RadialField& f, double p);

/// Builds the six-field corpus used by the projection and budget criteria.
/// With evolvable_only the slowly decaying polydecay entry is left out, since
/// its tail reaches the outer boundary.
struct CorpusEntry {
  std::string name;
  ProfileSpec profile;
  double amplitude = 1.0;
};
std::vector<CorpusEntry> standard_corpus(bool evolvable_only);

}  // namespace radwave
