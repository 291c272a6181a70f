// The acceptance suite shared by `rwlab selftest` and the acceptance test.
// Series-producing criteria go through run() so their files land on disk;
// the last criterion reruns a representative subset and compares bytes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "radwave/errors.hpp"
#include "radwave/experiment.hpp"
#include "radwave/functionals.hpp"
#include "radwave/spectral.hpp"
#include "radwave/truncation_flow.hpp"
#include "radwave/wave_solver.hpp"

namespace radwave {

namespace fs = std::filesystem;

std::vector<CorpusEntry> standard_corpus(bool evolvable_only) {
  std::vector<CorpusEntry> c;
  c.push_back({"gaussian(1)", {"gaussian", 1.0, 1.0, 3}, 1.0});
  c.push_back({"2*gaussian(4)", {"gaussian", 4.0, 1.0, 3}, 2.0});
  c.push_back({"bump(1,2)", {"bump", 1.0, 2.0, 3}, 1.0});
  c.push_back({"bump(3,1)", {"bump", 3.0, 1.0, 3}, 1.0});
  if (!evolvable_only) c.push_back({"polydecay(1,8)", {"polydecay", 1.0, 8.0, 3}, 1.0});
  c.push_back({"random_shells(3)", {"random_shells", 1.0, 1.0, 3}, 1.0});
  return c;
}

namespace {

constexpr std::uint64_t kCorpusSeed = 7;

std::string sci(double x, int digits = 2) {
  std::ostringstream os;
  os.precision(digits);
  os << std::scientific << x;
  return os.str();
}

std::string fixed(double x, int digits = 3) {
  std::ostringstream os;
  os.precision(digits);
  os << std::fixed << x;
  return os.str();
}

struct Suite {
  fs::path root;
  std::vector<ExperimentConfig> rerun;  // configs replayed by the determinism check

  RunSummary exec(ExperimentConfig cfg, const std::string& sub, bool replay = false) {
    cfg.out_dir = root / sub;
    auto s = run(cfg);
    if (!s.completed) throw NumericError(sub + ": " + s.failure);
    if (replay) rerun.push_back(cfg);
    return s;
  }
};

ExperimentConfig base_config(RunMode mode, double p, double r_max, std::size_t n, double t_end) {
  ExperimentConfig c;
  c.mode = mode;
  c.p = p;
  c.r_max = r_max;
  c.n = n;
  c.t_end = t_end;
  c.dt_factor = 0.5;
  c.seed = kCorpusSeed;
  return c;
}

double slope(double e_coarse, double e_fine, double h_coarse, double h_fine) {
  return std::log(e_coarse / e_fine) / std::log(h_coarse / h_fine);
}

// 1. free wave against d'Alembert, n = 1024, 2048, 4096
CriterionResult free_wave(Suite& s) {
  auto c = base_config(RunMode::FreeOracle, 4.0, 20.0, 4096, 5.0);
  c.record_every = 8;
  const auto r = s.exec(c, "c01_free_oracle", true);
  const double err = r.constants.at("l2_error_vs_exact");
  const double s1 = r.constants.at("convergence_slope"), s2 = r.constants.at("convergence_slope_coarse");
  const bool ok = err < 1e-4 && std::min(s1, s2) >= 1.7;
  return {1, "free-wave oracle", ok, "L2 err " + sci(err) + " (< 1e-4), order " + fixed(s2, 2) + ", " + fixed(s1, 2) + " (>= 1.7)"};
}

// 2. energy drift, p = 4, t_end = 10
CriterionResult energy_drift(Suite& s) {
  auto c = base_config(RunMode::Full, 4.0, 20.0, 4096, 10.0);
  c.dt_factor = 0.125;
  c.record_every = 8;
  const auto r = s.exec(c, "c02_energy");
  const double d = r.constants.at("energy_drift");
  return {2, "energy conservation", d <= 1e-6, "relative drift " + sci(d) + " (<= 1e-6, dt = h/8)"};
}

// 3. flat virial identity for p = 3.5, 4, 4.5 at n = 2048 and 4096
CriterionResult flat_virial(Suite& s) {
  bool ok = true;
  std::string m;
  for (double p : {3.5, 4.0, 4.5}) {
    double res[2], h[2];
    int i = 0;
    for (std::size_t n : {2048u, 4096u}) {
      auto c = base_config(RunMode::Full, p, 15.0, n, 5.0);
      const auto r = s.exec(c, "c03_virial_p" + fixed(p, 1) + "_n" + std::to_string(n), p == 4.0 && n == 2048);
      res[i] = r.constants.at("virial_rel");
      h[i] = c.r_max / static_cast<double>(n + 1);
      ++i;
    }
    const double order = slope(res[0], res[1], h[0], h[1]);
    ok = ok && res[1] <= 1e-3 && order >= 1.7;
    m += (m.empty() ? "" : "; ") + ("p=" + fixed(p, 1) + ": " + sci(res[1]) + " order " + fixed(order, 2));
  }
  return {3, "flat virial identity", ok, m + " (<= 1e-3, >= 1.7)"};
}

// 4. Morawetz budget on the corpus at two resolutions
CriterionResult morawetz_budget(Suite& s) {
  bool ok = true;
  double worst = 0.0, worst_spread = 1.0;
  for (const auto& e : standard_corpus(true)) {
    double cm[2];
    int i = 0;
    for (std::size_t n : {2048u, 4096u}) {
      auto c = base_config(RunMode::Full, 4.0, 20.0, n, 10.0);
      c.profile = e.profile;
      c.amplitude = e.amplitude;
      c.record_every = 2;
      const bool replay = e.profile.kind == "random_shells" && n == 2048;
      const auto r = s.exec(c, "c04_budget_" + e.profile.kind + fixed(e.profile.a, 0) + "_n" + std::to_string(n), replay);
      cm[i++] = r.constants.at("C_morawetz");
    }
    const double spread = std::max(cm[0], cm[1]) / std::min(cm[0], cm[1]);
    worst = std::max({worst, cm[0], cm[1]});
    worst_spread = std::max(worst_spread, spread);
    ok = ok && cm[0] <= 20.0 && cm[1] <= 20.0 && spread <= 2.0;
  }
  return {4, "Morawetz budget", ok,
          "max C " + fixed(worst, 3) + " (<= 20), resolution spread " + fixed(worst_spread, 4) + " (<= 2)"};
}

// 5. projection bound over j = -3..8 on the six-field corpus
CriterionResult lemma32(Suite&) {
  const auto g = make_grid(20.0, 4096);
  double worst = 0.0;
  for (const auto& e : standard_corpus(false)) {
    const RadialField f = e.amplitude * e.profile.sample(g, kCorpusSeed);
    for (double p : {3.5, 4.0, 4.5}) worst = std::max(worst, lemma32_ratio_max(f, p));
  }
  return {5, "projection Lp bound", worst <= 10.0, "max ratio " + fixed(worst, 3) + " (<= 10)"};
}

// 6. v + w against a direct solve of the same rescaled data
CriterionResult truncation_consistency(Suite&) {
  const double p = 4.0;
  const auto g = make_grid(60.0, 4096);
  const WaveState init = WaveState::at_rest(0.0, 3.0 * sample(Profile::gaussian(1.0), g));
  const SplitState ss = split_initial(init, p, 0.05);
  SolverConfig sc;
  sc.p = p;
  sc.dt = 0.5 * g.h();
  sc.t_end = 5.0;
  sc.keep_states = false;
  const SplitState fin = evolve_split(ss, sc);
  const Trajectory direct = evolve(ss.assembled(), sc);
  const double rel = l2_norm(direct.back().u - fin.assembled().u) / l2_norm(direct.back().u);
  return {6, "truncation consistency", rel <= 1e-6,
          "relative L2 " + sci(rel) + " (<= 1e-6), lambda " + sci(ss.lambda, 3)};
}

// 7. sup E(v)/E(v)(0) over t <= 10 as epsilon halves
CriterionResult energy_of_v(Suite& s) {
  struct Datum { std::string tag; ProfileSpec prof; double amp; };
  const std::vector<Datum> data = {{"gauss", {"gaussian", 1.0, 1.0, 3}, 3.0}, {"bump", {"bump", 2.0, 0.5, 3}, 1.0}};
  bool ok = true;
  std::string m;
  for (const auto& d : data) {
    std::vector<double> ratios;
    for (double eps : {0.2, 0.1, 0.05, 0.025}) {
      auto c = base_config(RunMode::Split, 4.0, 80.0, 4095, 10.0);
      c.profile = d.prof;
      c.amplitude = d.amp;
      c.epsilon = eps;
      c.record_every = 2;
      const auto r = s.exec(c, "c07_split_" + d.tag + "_eps" + fixed(eps, 3), d.tag == "gauss" && eps == 0.05);
      ratios.push_back(r.constants.at("C_gronwall"));
      if (eps == 0.05) ok = ok && ratios.back() <= 2.0;
    }
    for (std::size_t i = 1; i < ratios.size(); ++i) ok = ok && ratios[i] <= ratios[i - 1] * (1.0 + 1e-12);
    m += (m.empty() ? "" : "; ") + d.tag + " ";
    for (std::size_t i = 0; i < ratios.size(); ++i) m += (i ? "," : "") + fixed(ratios[i], 4);
  }
  return {7, "energy boundedness of v", ok, "sup ratios " + m + " (<= 2 at eps 0.05, non-increasing)"};
}

// At p = 3 the energy is conserved and the leapfrog oscillation (second order
// in the step) is what gets measured, hence the finer step there.
ExperimentConfig hyperbolic_config(double p, std::size_t n_s) {
  auto c = base_config(RunMode::Hyperbolic, p, 2.0, 2047, 0.0);
  c.profile = {"bump", 3.0, 0.5, 3};
  c.t0 = 1.0;
  c.hyperbolic = {5.0, n_s, p == 3.0 ? 0.125 : 0.25, 2.0};
  return c;
}

// 8 and 9 share the p = 4 run on the fine s-grid
struct HyperbolicRuns {
  RunSummary p4_fine, p4_coarse, p3_fine;
};

HyperbolicRuns hyperbolic_runs(Suite& s) {
  return {s.exec(hyperbolic_config(4.0, 4095), "c08_hyp_p4_n4095", true),
          s.exec(hyperbolic_config(4.0, 2047), "c09_hyp_p4_n2047"),
          s.exec(hyperbolic_config(3.0, 4095), "c08_hyp_p3_n4095")};
}

CriterionResult hyperbolic_monotonicity(const HyperbolicRuns& h) {
  const double inc = h.p4_fine.constants.at("hyp_monotonicity_violation");
  const double drift = h.p3_fine.constants.at("hyp_energy_drift");
  return {8, "hyperbolic energy monotonicity", inc <= 1e-7 && drift <= 1e-6,
          "p=4 max step increase " + sci(inc) + " (<= 1e-7); p=3 drift " + sci(drift) + " (<= 1e-6)"};
}

CriterionResult hyperbolic_virial(const HyperbolicRuns& h) {
  const double fine = h.p4_fine.constants.at("hyp_virial_rel");
  const double coarse = h.p4_coarse.constants.at("hyp_virial_rel");
  const double order = slope(coarse, fine, 5.0 / 2048.0, 5.0 / 4096.0);
  return {9, "hyperbolic virial identity", fine <= 1e-3 && order >= 1.7,
          "residual " + sci(fine) + " of E_hyp(0) (<= 1e-3), order " + fixed(order, 2) + " (>= 1.7)"};
}

// 10. sum of smoothed pieces up to J with 2^J >= 4 * Nyquist
CriterionResult completeness(Suite&) {
  const auto g = make_grid(20.0, 4096);
  const int J = static_cast<int>(std::ceil(std::log2(4.0 * g.nyquist())));
  double worst = 0.0;
  for (const auto& e : standard_corpus(false)) {
    const RadialField f = e.amplitude * e.profile.sample(g, kCorpusSeed);
    RadialField sum(g);
    for (int j = 0; j <= J; ++j) sum += smooth_project(f, j);
    worst = std::max(worst, l2_norm(f - sum) / l2_norm(f));
  }
  return {10, "smoothed-projection completeness", worst <= 1e-6,
          "J=" + std::to_string(J) + ", max relative residual " + sci(worst) + " (<= 1e-6)"};
}

// 11. critical norm under u -> lambda^{2/(p-1)} u(lambda x)
CriterionResult scaling(Suite&) {
  const auto g = make_grid(20.0, 4096);
  double worst = 0.0;
  for (const Profile& prof : {Profile::gaussian(1.0), Profile::bump(1.0, 2.0)}) {
    const WaveState st = WaveState::at_rest(0.0, sample(prof, g));
    for (double p : {3.5, 4.0, 4.5}) {
      const double sc = critical_exponent(p);
      const double before = sobolev_norm(st.u, sc);
      for (double lambda : {0.5, 2.0}) {
        const double after = sobolev_norm(rescale(st, lambda, p).u, sc);
        worst = std::max(worst, std::abs(after - before) / before);
      }
    }
  }
  return {11, "critical-norm scaling invariance", worst <= 1e-3, "max relative change " + sci(worst) + " (<= 1e-3)"};
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  return std::equal(std::istreambuf_iterator<char>(fa), std::istreambuf_iterator<char>(),
                    std::istreambuf_iterator<char>(fb), std::istreambuf_iterator<char>());
}

// 12. replay and compare every series file byte for byte
CriterionResult determinism(Suite& s) {
  std::size_t files = 0, mismatched = 0;
  std::string first_bad;
  for (const auto& cfg : s.rerun) {
    ExperimentConfig again = cfg;
    again.out_dir = s.root / "c12_replay" / cfg.out_dir.filename();
    const auto r = run(again);
    if (!r.completed) throw NumericError("replay failed: " + r.failure);
    for (const auto& e : fs::recursive_directory_iterator(cfg.out_dir)) {
      if (!e.is_regular_file() || e.path().filename() == "summary.json") continue;
      ++files;
      const fs::path twin = again.out_dir / fs::relative(e.path(), cfg.out_dir);
      if (!same_bytes(e.path(), twin)) {
        ++mismatched;
        if (first_bad.empty()) first_bad = twin.string();
      }
    }
  }
  const bool ok = files > 0 && mismatched == 0;
  std::string m = std::to_string(files) + " series files from " + std::to_string(s.rerun.size()) +
                  " runs replayed, " + std::to_string(mismatched) + " differ";
  if (!first_bad.empty()) m += " (first: " + first_bad + ")";
  return {12, "determinism", ok, m};
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const fs::path& out_dir,
                                            const std::function<void(const CriterionResult&)>& progress) {
  Suite suite{out_dir, {}};
  fs::create_directories(out_dir);
  std::vector<CriterionResult> results;
  std::optional<HyperbolicRuns> hyp;

  const std::vector<std::pair<int, std::function<CriterionResult()>>> plan = {
      {1, [&] { return free_wave(suite); }},
      {2, [&] { return energy_drift(suite); }},
      {3, [&] { return flat_virial(suite); }},
      {4, [&] { return morawetz_budget(suite); }},
      {5, [&] { return lemma32(suite); }},
      {6, [&] { return truncation_consistency(suite); }},
      {7, [&] { return energy_of_v(suite); }},
      {8, [&] { hyp = hyperbolic_runs(suite); return hyperbolic_monotonicity(*hyp); }},
      {9, [&] {
         if (!hyp) throw NumericError("hyperbolic runs unavailable");
         return hyperbolic_virial(*hyp);
       }},
      {10, [&] { return completeness(suite); }},
      {11, [&] { return scaling(suite); }},
      {12, [&] { return determinism(suite); }},
  };
  static const char* titles[] = {"",
                                 "free-wave oracle",
                                 "energy conservation",
                                 "flat virial identity",
                                 "Morawetz budget",
                                 "projection Lp bound",
                                 "truncation consistency",
                                 "energy boundedness of v",
                                 "hyperbolic energy monotonicity",
                                 "hyperbolic virial identity",
                                 "smoothed-projection completeness",
                                 "critical-norm scaling invariance",
                                 "determinism"};
  for (const auto& [id, fn] : plan) {
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = {id, titles[id], false, std::string("error: ") + e.what()};
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (progress) progress(r);
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace radwave
