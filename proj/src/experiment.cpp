#include "radwave/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "radwave/errors.hpp"
#include "radwave/functionals.hpp"
#include "radwave/spectral.hpp"
#include "radwave/truncation_flow.hpp"
#include "radwave/wave_solver.hpp"

namespace radwave {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(RunMode mode) noexcept {
  switch (mode) {
    case RunMode::Full: return "full";
    case RunMode::Split: return "split";
    case RunMode::Hyperbolic: return "hyperbolic";
    case RunMode::FreeOracle: return "free_oracle";
  }
  return "?";
}

// ---------------------------------------------------------------- profiles

std::optional<Profile> ProfileSpec::analytic() const {
  if (kind == "gaussian") return Profile::gaussian(a);
  if (kind == "bump") return Profile::bump(a, b);
  if (kind == "polydecay") return Profile::polydecay(a, b);
  return std::nullopt;
}

RadialField ProfileSpec::sample(const RadialGrid& grid, std::uint64_t seed) const {
  if (auto prof = analytic()) return radwave::sample(*prof, grid);
  if (kind != "random_shells") throw InvalidArgument("config.profile.kind: unknown kind `" + kind + "`");
  // Even pairs of Gaussian shells, so the radial function stays smooth at 0.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(0.5, 1.5), centre(0.5, 3.0), width(0.3, 0.8);
  std::bernoulli_distribution sign(0.5);
  struct Shell { double a, c, s; };
  std::vector<Shell> shells;
  for (int i = 0; i < count; ++i) {
    double A = amp(rng);
    if (sign(rng)) A = -A;
    const double c = centre(rng);
    shells.push_back({A, c, width(rng)});
  }
  std::vector<double> phi(grid.n());
  for (std::size_t k = 0; k < grid.n(); ++k) {
    const double r = grid.r(k);
    double u = 0.0;
    for (const auto& sh : shells) {
      const double x1 = (r - sh.c) / sh.s, x2 = (r + sh.c) / sh.s;
      u += sh.a * (std::exp(-x1 * x1) + std::exp(-x2 * x2));
    }
    phi[k] = r * u;
  }
  return RadialField(grid, std::move(phi));
}

// ---------------------------------------------------------------- config json

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& why) {
  throw InvalidArgument("config." + path + ": " + why);
}

void reject_unknown(const json& j, const std::string& prefix, std::initializer_list<const char*> known) {
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* s) { return k == s; })) {
      bad(prefix + k, "unknown field");
    }
  }
}

double get_real(const json& j, const char* key, double def, const std::string& path) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_number()) bad(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(path, "must be finite");
  return x;
}

std::int64_t get_int(const json& j, const char* key, std::int64_t def, const std::string& path) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (x == std::floor(x) && std::abs(x) < 9e15) return static_cast<std::int64_t>(x);
  }
  bad(path, "expected an integer");
}

std::string get_string(const json& j, const char* key, const std::string& def, const std::string& path) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_string()) bad(path, "expected a string");
  return v.get<std::string>();
}

std::size_t get_count(const json& j, const char* key, std::size_t def, const std::string& path) {
  const auto v = get_int(j, key, static_cast<std::int64_t>(def), path);
  if (v < 0) bad(path, "must be non-negative");
  return static_cast<std::size_t>(v);
}

RunMode parse_mode(const std::string& s) {
  if (s == "full") return RunMode::Full;
  if (s == "split") return RunMode::Split;
  if (s == "hyperbolic") return RunMode::Hyperbolic;
  if (s == "free_oracle") return RunMode::FreeOracle;
  bad("mode", "expected one of full, split, hyperbolic, free_oracle");
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
  reject_unknown(j, "", {"p", "profile", "amplitude", "epsilon", "c_morawetz", "grid", "dt_factor", "cfl",
                         "t_end", "t0", "mode", "record_every", "seed", "out_dir", "exterior_offset",
                         "hyperbolic", "checkpoints"});
  ExperimentConfig c;
  c.p = get_real(j, "p", c.p, "p");
  if (j.contains("profile")) {
    const auto& pj = j.at("profile");
    if (!pj.is_object()) bad("profile", "expected an object");
    reject_unknown(pj, "profile.", {"kind", "a", "b", "m", "count"});
    c.profile.kind = get_string(pj, "kind", c.profile.kind, "profile.kind");
    c.profile.a = get_real(pj, "a", c.profile.a, "profile.a");
    c.profile.b = get_real(pj, "b", c.profile.b, "profile.b");
    if (pj.contains("m")) c.profile.b = get_real(pj, "m", c.profile.b, "profile.m");
    c.profile.count = static_cast<int>(get_int(pj, "count", c.profile.count, "profile.count"));
  }
  c.amplitude = get_real(j, "amplitude", c.amplitude, "amplitude");
  c.epsilon = get_real(j, "epsilon", c.epsilon, "epsilon");
  c.c_morawetz = get_real(j, "c_morawetz", c.c_morawetz, "c_morawetz");
  if (j.contains("grid")) {
    const auto& gj = j.at("grid");
    if (!gj.is_object()) bad("grid", "expected an object");
    reject_unknown(gj, "grid.", {"r_max", "n"});
    c.r_max = get_real(gj, "r_max", c.r_max, "grid.r_max");
    c.n = get_count(gj, "n", c.n, "grid.n");
  }
  c.dt_factor = get_real(j, "dt_factor", c.dt_factor, "dt_factor");
  c.cfl = get_real(j, "cfl", c.cfl, "cfl");
  c.t_end = get_real(j, "t_end", c.t_end, "t_end");
  c.t0 = get_real(j, "t0", c.t0, "t0");
  c.mode = parse_mode(get_string(j, "mode", to_string(c.mode), "mode"));
  c.record_every = get_count(j, "record_every", c.record_every, "record_every");
  {
    const auto s = get_int(j, "seed", 0, "seed");
    if (s < 0) bad("seed", "must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  c.out_dir = get_string(j, "out_dir", c.out_dir.string(), "out_dir");
  c.exterior_offset = get_real(j, "exterior_offset", c.exterior_offset, "exterior_offset");
  if (j.contains("hyperbolic")) {
    const auto& hj = j.at("hyperbolic");
    if (!hj.is_object()) bad("hyperbolic", "expected an object");
    reject_unknown(hj, "hyperbolic.", {"s_max", "n", "dt_factor", "tau_end"});
    c.hyperbolic.s_max = get_real(hj, "s_max", c.hyperbolic.s_max, "hyperbolic.s_max");
    c.hyperbolic.n = get_count(hj, "n", c.hyperbolic.n, "hyperbolic.n");
    c.hyperbolic.dt_factor = get_real(hj, "dt_factor", c.hyperbolic.dt_factor, "hyperbolic.dt_factor");
    c.hyperbolic.tau_end = get_real(hj, "tau_end", c.hyperbolic.tau_end, "hyperbolic.tau_end");
  }
  if (j.contains("checkpoints")) {
    if (!j.at("checkpoints").is_boolean()) bad("checkpoints", "expected a boolean");
    c.checkpoints = j.at("checkpoints").get<bool>();
  }
  validate(c);
  return c;
}

json to_json(const ExperimentConfig& c) {
  json prof = {{"kind", c.profile.kind}, {"a", c.profile.a}};
  if (c.profile.kind == "bump") prof["b"] = c.profile.b;
  if (c.profile.kind == "polydecay") prof["m"] = c.profile.b;
  if (c.profile.kind == "random_shells") prof["count"] = c.profile.count;
  return {{"p", c.p},
          {"profile", prof},
          {"amplitude", c.amplitude},
          {"epsilon", c.epsilon},
          {"c_morawetz", c.c_morawetz},
          {"grid", {{"r_max", c.r_max}, {"n", c.n}}},
          {"dt_factor", c.dt_factor},
          {"cfl", c.cfl},
          {"t_end", c.t_end},
          {"t0", c.t0},
          {"mode", to_string(c.mode)},
          {"record_every", c.record_every},
          {"seed", c.seed},
          {"out_dir", c.out_dir.generic_string()},
          {"exterior_offset", c.exterior_offset},
          {"hyperbolic",
           {{"s_max", c.hyperbolic.s_max},
            {"n", c.hyperbolic.n},
            {"dt_factor", c.hyperbolic.dt_factor},
            {"tau_end", c.hyperbolic.tau_end}}},
          {"checkpoints", c.checkpoints}};
}

void validate(const ExperimentConfig& c) {
  if (c.mode == RunMode::Hyperbolic) {
    if (!(c.p >= 3.0 && c.p <= 5.0)) bad("p", "must lie in [3, 5] for hyperbolic runs");
  } else if (!(c.p > 3.0 && c.p <= 5.0)) {
    bad("p", "must lie in (3, 5]");
  }
  const auto& k = c.profile.kind;
  if (k != "gaussian" && k != "bump" && k != "polydecay" && k != "random_shells") {
    bad("profile.kind", "expected gaussian, bump, polydecay or random_shells");
  }
  if (k != "random_shells" && !(c.profile.a > 0.0)) bad("profile.a", "must be positive");
  if (k == "bump" && !(c.profile.b > 0.0)) bad("profile.b", "must be positive");
  if (k == "polydecay" && !(c.profile.b > 1.5)) bad("profile.m", "must exceed 3/2");
  if (k == "random_shells" && (c.profile.count < 1 || c.profile.count > 64)) {
    bad("profile.count", "must lie in [1, 64]");
  }
  if (!std::isfinite(c.amplitude)) bad("amplitude", "must be finite");
  if (!(c.epsilon > 0.0)) bad("epsilon", "must be positive");
  if (!(c.c_morawetz >= 0.0)) bad("c_morawetz", "must be non-negative");
  if (!(c.r_max > 0.0)) bad("grid.r_max", "must be positive");
  if (c.n < 8 || c.n > (1u << 22)) bad("grid.n", "must lie in [8, 4194304]");
  if (!(c.cfl > 0.0)) bad("cfl", "must be positive");
  if (!(c.dt_factor > 0.0)) bad("dt_factor", "must be positive");
  if (c.dt_factor > c.cfl) bad("dt_factor", "exceeds cfl");
  if (!(c.t_end >= 0.0)) bad("t_end", "must be non-negative");
  if (c.record_every < 1) bad("record_every", "must be at least 1");
  if (!(c.exterior_offset >= 0.0)) bad("exterior_offset", "must be non-negative");
  if (c.mode == RunMode::Hyperbolic) {
    if (!(c.t0 > 0.0 && c.t0 <= 1.0)) bad("t0", "hyperbolic runs need 0 < t0 <= 1");
    if (!(c.hyperbolic.s_max > 0.0)) bad("hyperbolic.s_max", "must be positive");
    if (c.hyperbolic.n < 8 || c.hyperbolic.n > (1u << 22)) bad("hyperbolic.n", "must lie in [8, 4194304]");
    if (!(c.hyperbolic.dt_factor > 0.0)) bad("hyperbolic.dt_factor", "must be positive");
    if (c.hyperbolic.dt_factor > c.cfl) bad("hyperbolic.dt_factor", "exceeds cfl");
    if (!(c.hyperbolic.tau_end >= 0.0)) bad("hyperbolic.tau_end", "must be non-negative");
  }
  if (c.mode == RunMode::FreeOracle) {
    if (k == "random_shells") bad("profile.kind", "free_oracle needs an analytic profile");
    if (c.n / 4 < 8) bad("grid.n", "free_oracle needs n >= 32 for the n/4 level");
  }
}

ExperimentConfig with_override(const ExperimentConfig& cfg, const std::string& path, const json& value) {
  json j = to_json(cfg);
  json* node = &j;
  std::string rest = path;
  for (;;) {
    const auto dot = rest.find('.');
    const std::string key = rest.substr(0, dot);
    if (key.empty()) throw InvalidArgument("sweep axis `" + path + "`: empty path component");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    if (!node->is_object()) *node = json::object();
    rest = rest.substr(dot + 1);
  }
  // polydecay exponents are echoed as `m`; accept `profile.b` as well.
  if (j["profile"].contains("b") && j["profile"].value("kind", "") == "polydecay" && path == "profile.b") {
    j["profile"]["m"] = j["profile"]["b"];
    j["profile"].erase("b");
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------- checks / summary

Check make_check(std::string name, double value, std::string comparison, double threshold, std::string detail) {
  bool ok = false;
  if (std::isfinite(value)) {
    if (comparison == "<=") ok = value <= threshold;
    else if (comparison == "<") ok = value < threshold;
    else if (comparison == ">=") ok = value >= threshold;
    else if (comparison == "==") ok = value == threshold;
    else throw InvalidArgument("make_check: unknown comparison `" + comparison + "`");
  }
  return {std::move(name), value, threshold, std::move(comparison), ok, std::move(detail)};
}

bool RunSummary::passed() const {
  return completed && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

namespace {

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
double number_or_nan(const json& j) {
  return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

json to_json(const RunSummary& s) {
  json constants = json::object();
  for (const auto& [k, v] : s.constants) constants[k] = number_or_null(v);
  json checks = json::array();
  for (const auto& c : s.checks) {
    checks.push_back({{"name", c.name},
                      {"value", number_or_null(c.value)},
                      {"comparison", c.comparison},
                      {"threshold", c.threshold},
                      {"passed", c.passed},
                      {"detail", c.detail}});
  }
  return {{"config", to_json(s.config)},  {"constants", constants},
          {"recomputable", s.recomputable}, {"checks", checks},
          {"wall_time_s", s.wall_time_s},  {"completed", s.completed},
          {"failure", s.failure},          {"passed", s.passed()}};
}

RunSummary summary_from_json(const json& j) {
  RunSummary s;
  s.config = config_from_json(j.at("config"));
  for (const auto& [k, v] : j.at("constants").items()) s.constants[k] = number_or_nan(v);
  s.recomputable = j.value("recomputable", std::vector<std::string>{});
  for (const auto& c : j.at("checks")) {
    s.checks.push_back({c.at("name").get<std::string>(), number_or_nan(c.at("value")),
                        c.at("threshold").get<double>(), c.at("comparison").get<std::string>(),
                        c.at("passed").get<bool>(), c.value("detail", "")});
  }
  s.wall_time_s = j.value("wall_time_s", 0.0);
  s.completed = j.value("completed", true);
  s.failure = j.value("failure", "");
  return s;
}

// ---------------------------------------------------------------- series-derived constants

namespace {

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot write " + path.string());
  body(os);
  if (!os) throw NumericError("write failed: " + path.string());
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot read " + path.string());
  return is;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double max_rel_dev(std::span<const double> v) {
  if (v.empty() || v[0] == 0.0) return 0.0;
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x - v[0]) / std::abs(v[0]));
  return m;
}

double max_ratio(std::span<const double> v) {
  if (v.empty() || v[0] == 0.0) return 1.0;
  double m = 0.0;
  for (double x : v) m = std::max(m, x / v[0]);
  return m;
}

}  // namespace

double lemma32_ratio_max(const RadialField& f, double p) {
  const double base = weighted_lp_integral(f, p);
  if (base == 0.0) return 0.0;
  double worst = 0.0;
  for (int j = -3; j <= 8; ++j) {
    const RadialField smooth_low = smooth_lowpass(f, j);
    for (const RadialField& g : {lp_project(f, j, LpKind::Leq), lp_project(f, j, LpKind::Geq), smooth_low,
                                 f - smooth_low}) {
      worst = std::max(worst, weighted_lp_integral(g, p) / base);
    }
  }
  return worst;
}

namespace {

using Constants = std::map<std::string, double>;

DiagnosticsSeries load_diag(const fs::path& dir) {
  auto is = open_in(dir / "diagnostics.csv");
  return read_diagnostics_csv(is);
}

std::vector<double> load_column_csv(const fs::path& path, const std::string& header, std::size_t col) {
  auto is = open_in(path);
  std::string line;
  if (!std::getline(is, line) || line != header) {
    throw InvalidArgument("read csv " + path.string() + ": expected header `" + header + "`");
  }
  std::vector<double> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    for (std::size_t c = 0; c <= col; ++c) {
      if (!std::getline(row, cell, ',')) throw InvalidArgument("read csv " + path.string() + ": short row");
    }
    out.push_back(parse_number(cell));
  }
  return out;
}

void flat_constants(const DiagnosticsSeries& d, std::span<const double> energy_u, Constants& c) {
  const double e_u0 = energy_u.empty() ? 0.0 : energy_u[0];
  c["energy_drift"] = max_rel_dev(energy_u);
  c["C_gronwall"] = max_ratio(d.E);
  c["C_morawetz"] = (d.size() && e_u0 > 0.0) ? d.morawetz_cum.back() / e_u0 : 0.0;
  c["st_norm_total"] = d.size() ? d.st_norm_cum.back() : 0.0;
  c["ext_st_norm_total"] = d.size() ? d.exterior_st_norm_cum.back() : 0.0;
  c["E0"] = d.size() ? d.E[0] : 0.0;
}

/// Everything a summary reports, derived from files already on disk.
Constants derive_constants(const ExperimentConfig& cfg) {
  const fs::path& dir = cfg.out_dir;
  Constants c;
  switch (cfg.mode) {
    case RunMode::Full: {
      const auto d = load_diag(dir);
      flat_constants(d, d.E, c);
      const double scale = d.size() ? std::max(d.E[0], std::abs(d.M[0])) : 0.0;
      c["virial_rel"] = scale > 0.0 ? max_abs(d.virial_residual) / scale : 0.0;
      auto is = open_in(dir / "initial_u0.csv");
      c["C_lemma32_max"] = lemma32_ratio_max(read_csv(is), cfg.p);
      break;
    }
    case RunMode::Split: {
      const auto d = load_diag(dir);
      const auto e_u = load_column_csv(dir / "energy_u.csv", "t,E_u", 1);
      flat_constants(d, e_u, c);
      const double scale = e_u.empty() ? 0.0 : e_u[0];
      c["virial_rel"] = scale > 0.0 ? max_abs(d.virial_residual) / scale : 0.0;
      c["K_w"] = max_abs(d.w_hsc) / cfg.epsilon;
      double comp = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.E[i] > 0.0) comp = std::max(comp, std::abs(d.script_E[i] - d.E[i]) / d.E[i]);
      }
      c["comparability"] = comp;
      auto cis = open_in(dir / "certificate.json");
      const json cert = json::parse(cis);
      c["lambda"] = cert.at("lambda").get<double>();
      c["w_smallness"] =
          cert.at("norms").at("w0_hsc").get<double>() + cert.at("norms").at("w1_hscm1").get<double>();
      auto is = open_in(dir / "initial_u0.csv");
      c["C_lemma32_max"] = lemma32_ratio_max(read_csv(is), cfg.p);
      break;
    }
    case RunMode::Hyperbolic: {
      auto is = open_in(dir / "hyperbolic.csv");
      const auto h = read_hyperbolic_csv(is);
      double inc = 0.0;
      for (std::size_t i = 1; i < h.size(); ++i) inc = std::max(inc, h.E_hyp[i] - h.E_hyp[i - 1]);
      c["hyp_monotonicity_violation"] = inc;
      c["hyp_energy_drift"] = max_rel_dev(h.E_hyp);
      c["E_hyp0"] = h.size() ? h.E_hyp[0] : 0.0;
      c["hyp_virial_rel"] = (h.size() && h.E_hyp[0] > 0.0) ? max_abs(h.hyp_virial_residual) / h.E_hyp[0] : 0.0;
      break;
    }
    case RunMode::FreeOracle: {
      const auto h = load_column_csv(dir / "free_oracle.csv", "n,h,l2_error", 1);
      const auto e = load_column_csv(dir / "free_oracle.csv", "n,h,l2_error", 2);
      if (e.size() != 3) throw InvalidArgument("free_oracle.csv: expected three levels");
      // rows are finest first
      c["l2_error_vs_exact"] = e[0];
      c["convergence_slope"] = std::log(e[1] / e[0]) / std::log(h[1] / h[0]);
      c["convergence_slope_coarse"] = std::log(e[2] / e[1]) / std::log(h[2] / h[1]);
      const auto d = load_diag(dir);
      c["energy_drift"] = max_rel_dev(d.E);
      break;
    }
  }
  return c;
}

std::vector<Check> checks_for(const ExperimentConfig& cfg, const Constants& c) {
  std::vector<Check> out;
  switch (cfg.mode) {
    case RunMode::Full:
      out.push_back(make_check("energy_drift", c.at("energy_drift"), "<=", 1e-6));
      out.push_back(make_check("virial_rel", c.at("virial_rel"), "<=", 1e-3));
      out.push_back(make_check("C_morawetz", c.at("C_morawetz"), "<=", 20.0));
      out.push_back(make_check("C_lemma32_max", c.at("C_lemma32_max"), "<=", 10.0));
      break;
    case RunMode::Split:
      out.push_back(make_check("w_smallness", c.at("w_smallness"), "<", cfg.epsilon));
      out.push_back(make_check("C_gronwall", c.at("C_gronwall"), "<=", 2.0));
      out.push_back(make_check("K_w", c.at("K_w"), "<=", 5.0));
      out.push_back(make_check("comparability", c.at("comparability"), "<=", 0.5));
      out.push_back(make_check("C_morawetz", c.at("C_morawetz"), "<=", 20.0));
      out.push_back(make_check("C_lemma32_max", c.at("C_lemma32_max"), "<=", 10.0));
      break;
    case RunMode::Hyperbolic:
      if (cfg.p == 3.0) {
        out.push_back(make_check("hyp_energy_drift", c.at("hyp_energy_drift"), "<=", 1e-6, "constant-energy endpoint"));
      } else {
        out.push_back(make_check("hyp_monotonicity_violation", c.at("hyp_monotonicity_violation"), "<=", 1e-7));
      }
      out.push_back(make_check("hyp_virial_rel", c.at("hyp_virial_rel"), "<=", 1e-3));
      break;
    case RunMode::FreeOracle:
      out.push_back(make_check("l2_error_vs_exact", c.at("l2_error_vs_exact"), "<", 1e-4));
      out.push_back(make_check("convergence_slope", c.at("convergence_slope"), ">=", 1.7));
      out.push_back(make_check("convergence_slope_coarse", c.at("convergence_slope_coarse"), ">=", 1.7));
      break;
  }
  return out;
}

// ---------------------------------------------------------------- modes

SolverConfig flat_solver(const ExperimentConfig& cfg, const RadialGrid& g, bool nonlinear) {
  SolverConfig s;
  s.p = cfg.p;
  s.cfl = cfg.cfl;
  s.dt = cfg.dt_factor * g.h();
  s.t_end = cfg.t_end;
  s.record_every = cfg.record_every;
  s.nonlinear = nonlinear;
  s.keep_states = false;
  return s;
}

DiagnosticsRecorder::Options recorder_options(const ExperimentConfig& cfg, bool nonlinear) {
  return {cfg.p, nonlinear, cfg.c_morawetz, cfg.exterior_offset};
}

void write_checkpoint_pair(const fs::path& dir, const SolverConfig& sc, const WaveState& a, const WaveState& b) {
  CheckpointWriter w(dir, sc);
  w(a);
  w(b);
  w.finish();
}

void run_full(const ExperimentConfig& cfg, const WaveState& init) {
  const auto sc = flat_solver(cfg, init.grid(), true);
  DiagnosticsRecorder rec(recorder_options(cfg, true));
  const Observer obs = [&](const WaveState& s) { rec.record(s); };
  const auto traj = evolve(init, sc, std::span<const Observer>(&obs, 1));
  write_file(cfg.out_dir / "diagnostics.csv", [&](std::ostream& os) { write_csv(os, rec.series()); });
  if (cfg.checkpoints) write_checkpoint_pair(cfg.out_dir / "checkpoints", sc, traj.front(), traj.back());
}

void run_split(const ExperimentConfig& cfg, const WaveState& init) {
  const SplitState ss = split_initial(init, cfg.p, cfg.epsilon);
  write_file(cfg.out_dir / "certificate.json", [&](std::ostream& os) { os << certificate_json(ss, cfg.p) << '\n'; });
  auto sc = flat_solver(cfg, ss.v.grid(), true);
  // dt follows the grid; t_end is in the rescaled time of the split
  DiagnosticsRecorder rec(recorder_options(cfg, true));
  const SplitObserver obs = [&](const SplitState& s) { rec.record(s); };
  const SplitState fin = evolve_split(ss, sc, std::span<const SplitObserver>(&obs, 1));
  const auto& d = rec.series();
  write_file(cfg.out_dir / "diagnostics.csv", [&](std::ostream& os) { write_csv(os, d); });
  write_file(cfg.out_dir / "energy_u.csv", [&](std::ostream& os) {
    os << "t,E_u\n" << std::setprecision(17);
    for (std::size_t i = 0; i < d.size(); ++i) os << d.times[i] << ',' << d.energy_u[i] << '\n';
  });
  if (cfg.checkpoints) write_checkpoint_pair(cfg.out_dir / "checkpoints", sc, ss.assembled(), fin.assembled());
}

void run_hyperbolic(const ExperimentConfig& cfg, const WaveState& init) {
  const double r0 = data_support(init);
  if (!(r0 < cfg.t0)) {
    bad("t0", "data support " + std::to_string(r0) + " must lie inside the cone |x| < t0");
  }
  // The tau = 0 hyperboloid meets the forward cone of the data for s < s*.
  const double s_star = -std::log(cfg.t0 - r0);
  const RadialGrid& g = init.grid();
  SolverConfig flat;
  flat.p = cfg.p;
  flat.cfl = cfg.cfl;
  flat.dt = cfg.dt_factor * g.h();
  flat.t_end = std::cosh(s_star) - cfg.t0 + 4.0 * flat.dt;
  flat.keep_states = true;
  const auto traj = evolve(init, flat);

  const RadialGrid sg = make_grid(cfg.hyperbolic.s_max, cfg.hyperbolic.n);
  const HyperbolicState hs0 = hyperbolic_transform(traj, 0.0, sg);
  SolverConfig hc;
  hc.p = cfg.p;
  hc.cfl = cfg.cfl;
  hc.dt = cfg.hyperbolic.dt_factor * sg.h();
  hc.t_end = cfg.hyperbolic.tau_end;
  hc.record_every = cfg.record_every;
  HyperbolicRecorder rec(cfg.p);
  const HyperbolicObserver obs = [&](const HyperbolicState& s) { rec.record(s); };
  evolve_hyperbolic(hs0, hc, std::span<const HyperbolicObserver>(&obs, 1));
  write_file(cfg.out_dir / "hyperbolic.csv", [&](std::ostream& os) { write_csv(os, rec.series()); });
}

void run_free_oracle(const ExperimentConfig& cfg) {
  const Profile prof = *cfg.profile.analytic();
  struct Level { std::size_t n; double h; double err; };
  std::vector<Level> levels;
  for (std::size_t n : {cfg.n, cfg.n / 2, cfg.n / 4}) {
    const RadialGrid g = make_grid(cfg.r_max, n);
    const WaveState init = WaveState::at_rest(cfg.t0, cfg.amplitude * sample(prof, g));
    const auto sc = flat_solver(cfg, g, false);
    std::optional<DiagnosticsRecorder> rec;
    std::vector<Observer> obs;
    if (n == cfg.n) {
      rec.emplace(recorder_options(cfg, false));
      obs.push_back([&](const WaveState& s) { rec->record(s); });
    }
    const auto traj = evolve(init, sc, obs);
    const RadialField exact = cfg.amplitude * free_wave_exact(prof, cfg.t_end, g);
    levels.push_back({n, g.h(), l2_norm(traj.back().u - exact)});
    if (rec) {
      write_file(cfg.out_dir / "diagnostics.csv", [&](std::ostream& os) { write_csv(os, rec->series()); });
    }
  }
  write_file(cfg.out_dir / "free_oracle.csv", [&](std::ostream& os) {
    os << "n,h,l2_error\n" << std::setprecision(17);
    for (const auto& l : levels) os << l.n << ',' << l.h << ',' << l.err << '\n';
  });
}

}  // namespace

RunSummary run(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  RunSummary s;
  s.config = cfg;
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec || !fs::is_directory(cfg.out_dir)) throw InvalidArgument("config.out_dir: cannot create " + cfg.out_dir.string());

  try {
    if (cfg.mode == RunMode::FreeOracle) {
      run_free_oracle(cfg);
    } else {
      const RadialGrid g = make_grid(cfg.r_max, cfg.n);
      const WaveState init = WaveState::at_rest(cfg.t0, cfg.amplitude * cfg.profile.sample(g, cfg.seed));
      if (cfg.mode != RunMode::Hyperbolic) {
        write_file(cfg.out_dir / "initial_u0.csv", [&](std::ostream& os) { write_csv(os, init.u); });
      }
      switch (cfg.mode) {
        case RunMode::Full: run_full(cfg, init); break;
        case RunMode::Split: run_split(cfg, init); break;
        case RunMode::Hyperbolic: run_hyperbolic(cfg, init); break;
        case RunMode::FreeOracle: break;
      }
    }
    s.constants = derive_constants(cfg);
    for (const auto& [k, v] : s.constants) s.recomputable.push_back(k);
    s.checks = checks_for(cfg, s.constants);
  } catch (const Error& e) {
    // config.* problems discovered late are still the caller's fault
    if (e.kind() == ErrorKind::InvalidArgument && std::string_view(e.what()).starts_with("config.")) throw;
    s.completed = false;
    s.failure = std::string(to_string(e.kind())) + ": " + e.what();
  }
  s.checks.insert(s.checks.begin(), make_check("run_completed", s.completed ? 1.0 : 0.0, "==", 1.0, s.failure));
  s.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file(cfg.out_dir / "summary.json", [&](std::ostream& os) { os << to_json(s).dump(2) << '\n'; });
  return s;
}

std::optional<double> recompute_constant(const RunSummary& s, const std::string& name) {
  if (!s.completed) return std::nullopt;
  const auto c = derive_constants(s.config);
  const auto it = c.find(name);
  if (it == c.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------- sweep

namespace {

std::size_t thread_budget(std::size_t cells) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("RW_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw InvalidArgument("RW_THREADS: expected a positive integer");
    n = static_cast<std::size_t>(v);
  }
  return std::min(n, std::max<std::size_t>(cells, 1));
}

std::string cell_name(std::size_t i) {
  std::ostringstream os;
  os << "cell_" << std::setw(3) << std::setfill('0') << i;
  return os.str();
}

}  // namespace

std::vector<RunSummary> sweep(const ExperimentConfig& base, const std::map<std::string, std::vector<json>>& axes,
                              std::size_t cap) {
  validate(base);
  if (axes.empty()) return {run(base)};
  std::size_t total = 1;
  for (const auto& [k, vals] : axes) {
    if (vals.empty()) throw InvalidArgument("sweep axis `" + k + "`: no values");
    if (k == "out_dir") throw InvalidArgument("sweep axis `out_dir` is not allowed");
    total *= vals.size();
    if (total > cap) throw InvalidArgument("sweep: " + std::to_string(total) + "+ cells exceed the cap of " +
                                           std::to_string(cap));
  }
  // Build every cell up front so config errors surface before any work starts.
  std::vector<ExperimentConfig> cells;
  std::vector<json> cell_axes;
  for (std::size_t i = 0; i < total; ++i) {
    ExperimentConfig c = base;
    json ax = json::object();
    std::size_t rem = i;
    for (auto it = axes.rbegin(); it != axes.rend(); ++it) {
      const auto& v = it->second[rem % it->second.size()];
      rem /= it->second.size();
      c = with_override(c, it->first, v);
      ax[it->first] = v;
    }
    c.out_dir = base.out_dir / cell_name(i);
    cells.push_back(std::move(c));
    cell_axes.push_back(std::move(ax));
  }

  std::vector<std::optional<RunSummary>> results(total);
  std::vector<std::exception_ptr> errors(total);
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < thread_budget(total); ++t) {
      workers.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < total;) {
          try {
            results[i] = run(cells[i]);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<RunSummary> out;
  for (auto& r : results) out.push_back(std::move(*r));

  json index = {{"axes", json::object()}, {"cells", json::array()}};
  for (const auto& [k, v] : axes) index["axes"][k] = v;
  for (std::size_t i = 0; i < total; ++i) {
    index["cells"].push_back({{"dir", cell_name(i)}, {"axes", cell_axes[i]}, {"passed", out[i].passed()}});
  }
  index["tables"] = sweep_tables(out);
  fs::create_directories(base.out_dir);
  write_file(base.out_dir / "sweep.json", [&](std::ostream& os) { os << index.dump(2) << '\n'; });
  return out;
}

namespace {

/// Config JSON minus one varied field, used to group cells that differ only there.
std::string group_key(const ExperimentConfig& c, const std::vector<std::string>& drop) {
  json j = to_json(c);
  j.erase("out_dir");
  for (const auto& d : drop) {
    const auto dot = d.find('.');
    if (dot == std::string::npos) j.erase(d);
    else j[d.substr(0, dot)].erase(d.substr(dot + 1));
  }
  return j.dump();
}

double constant_or_nan(const RunSummary& s, const std::string& k) {
  const auto it = s.constants.find(k);
  return it == s.constants.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
}

}  // namespace

json sweep_tables(const std::vector<RunSummary>& summaries) {
  json tables = json::object();

  // C_gronwall vs epsilon, grouped by everything else, epsilon decreasing
  std::map<std::string, std::vector<const RunSummary*>> by_eps;
  for (const auto& s : summaries) {
    if (s.config.mode == RunMode::Split && s.completed) by_eps[group_key(s.config, {"epsilon"})].push_back(&s);
  }
  json gron = json::array();
  for (auto& [key, group] : by_eps) {
    std::sort(group.begin(), group.end(),
              [](auto* a, auto* b) { return a->config.epsilon > b->config.epsilon; });
    json rows = json::array();
    bool non_increasing = true;
    for (std::size_t i = 0; i < group.size(); ++i) {
      const double g = constant_or_nan(*group[i], "C_gronwall");
      if (i > 0 && g > constant_or_nan(*group[i - 1], "C_gronwall") * (1.0 + 1e-12)) non_increasing = false;
      rows.push_back({{"epsilon", group[i]->config.epsilon},
                      {"C_gronwall", number_or_null(g)},
                      {"lambda", number_or_null(constant_or_nan(*group[i], "lambda"))},
                      {"dir", group[i]->config.out_dir.filename().string()}});
    }
    gron.push_back({{"p", group.front()->config.p}, {"rows", rows}, {"non_increasing", non_increasing}});
  }
  tables["C_gronwall_vs_epsilon"] = gron;

  json hyp = json::array();
  std::vector<const RunSummary*> hs;
  for (const auto& s : summaries) {
    if (s.config.mode == RunMode::Hyperbolic && s.completed) hs.push_back(&s);
  }
  std::stable_sort(hs.begin(), hs.end(), [](auto* a, auto* b) { return a->config.p < b->config.p; });
  for (const auto* s : hs) {
    hyp.push_back({{"p", s->config.p},
                   {"hyp_monotonicity_violation", number_or_null(constant_or_nan(*s, "hyp_monotonicity_violation"))},
                   {"hyp_energy_drift", number_or_null(constant_or_nan(*s, "hyp_energy_drift"))},
                   {"dir", s->config.out_dir.filename().string()}});
  }
  tables["hyp_monotonicity_vs_p"] = hyp;

  // convergence: per-cell slopes plus slopes between cells that differ only in n
  std::map<std::string, std::vector<const RunSummary*>> by_n;
  for (const auto& s : summaries) {
    if (s.config.mode == RunMode::FreeOracle && s.completed) by_n[group_key(s.config, {"grid.n"})].push_back(&s);
  }
  json conv = json::array();
  for (auto& [key, group] : by_n) {
    std::sort(group.begin(), group.end(), [](auto* a, auto* b) { return a->config.n < b->config.n; });
    json rows = json::array();
    for (std::size_t i = 0; i < group.size(); ++i) {
      const double e = constant_or_nan(*group[i], "l2_error_vs_exact");
      json row = {{"n", group[i]->config.n},
                  {"l2_error_vs_exact", number_or_null(e)},
                  {"convergence_slope", number_or_null(constant_or_nan(*group[i], "convergence_slope"))},
                  {"dir", group[i]->config.out_dir.filename().string()}};
      if (i > 0) {
        const double hc = group[i - 1]->config.r_max / static_cast<double>(group[i - 1]->config.n + 1);
        const double hf = group[i]->config.r_max / static_cast<double>(group[i]->config.n + 1);
        const double ec = constant_or_nan(*group[i - 1], "l2_error_vs_exact");
        row["slope_from_previous"] = number_or_null(std::log(ec / e) / std::log(hc / hf));
      }
      rows.push_back(row);
    }
    conv.push_back({{"rows", rows}});
  }
  tables["convergence_vs_n"] = conv;
  return tables;
}

// ---------------------------------------------------------------- report

std::vector<RunSummary> load_summaries(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InvalidArgument("report: `" + dir.string() + "` is not a directory");
  std::vector<fs::path> files;
  if (fs::exists(dir / "summary.json")) files.push_back(dir / "summary.json");
  std::vector<fs::path> subs;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && fs::exists(e.path() / "summary.json")) subs.push_back(e.path() / "summary.json");
  }
  std::sort(subs.begin(), subs.end());
  files.insert(files.end(), subs.begin(), subs.end());
  std::vector<RunSummary> out;
  for (const auto& f : files) {
    auto is = open_in(f);
    RunSummary s = summary_from_json(json::parse(is));
    // summaries travel with their directory
    s.config.out_dir = f.parent_path();
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << std::scientific << x;
  return os.str();
}

}  // namespace

ReportDocument report(const std::vector<RunSummary>& summaries) {
  if (summaries.empty()) throw InvalidArgument("report: empty list of summaries");
  ReportDocument doc;
  std::ostringstream txt;
  json runs = json::array();

  struct Agg { std::size_t passed = 0, total = 0; double threshold = 0; std::string cmp; std::vector<double> values; };
  std::map<std::string, Agg> agg;

  for (const auto& s : summaries) {
    std::vector<Check> checks = s.checks;
    // recompute three constants from the series on disk
    if (s.completed && !s.recomputable.empty()) {
      std::vector<std::string> pool = s.recomputable;
      std::mt19937_64 rng(s.config.seed);
      std::shuffle(pool.begin(), pool.end(), rng);
      pool.resize(std::min<std::size_t>(3, pool.size()));
      double worst = 0.0;
      std::string detail;
      try {
        for (const auto& name : pool) {
          const auto it = s.constants.find(name);
          const auto again = recompute_constant(s, name);
          double diff = std::numeric_limits<double>::infinity();
          if (it != s.constants.end() && again) {
            const double a = it->second, b = *again;
            diff = (std::isnan(a) && std::isnan(b)) ? 0.0 : std::abs(a - b) / std::max(1.0, std::abs(a));
          }
          worst = std::max(worst, diff);
          detail += (detail.empty() ? "" : ",") + name;
        }
      } catch (const Error& e) {
        worst = std::numeric_limits<double>::infinity();
        detail = e.what();
      }
      checks.push_back(make_check("series_recompute", worst, "<=", 1e-12, detail));
    }

    json rj = {{"dir", s.config.out_dir.generic_string()},
               {"mode", to_string(s.config.mode)},
               {"p", s.config.p},
               {"completed", s.completed},
               {"failure", s.failure},
               {"checks", json::array()}};
    bool run_ok = true;
    txt << "run " << s.config.out_dir.generic_string() << "  mode=" << to_string(s.config.mode)
        << " p=" << s.config.p << "  " << (s.completed ? "completed" : "FAILED: " + s.failure) << '\n';
    for (const auto& c : checks) {
      run_ok = run_ok && c.passed;
      auto& a = agg[c.name];
      a.total += 1;
      a.passed += c.passed ? 1 : 0;
      a.threshold = c.threshold;
      a.cmp = c.comparison;
      a.values.push_back(c.value);
      txt << "  " << std::left << std::setw(30) << c.name << std::setw(16) << fmt(c.value) << c.comparison << ' '
          << std::setw(14) << fmt(c.threshold) << (c.passed ? "PASS" : "FAIL");
      if (!c.passed && !c.detail.empty()) txt << "  (" << c.detail << ')';
      txt << '\n';
      rj["checks"].push_back({{"name", c.name},
                              {"value", number_or_null(c.value)},
                              {"comparison", c.comparison},
                              {"threshold", c.threshold},
                              {"passed", c.passed},
                              {"detail", c.detail}});
    }
    rj["passed"] = run_ok;
    doc.all_passed = doc.all_passed && run_ok;
    runs.push_back(rj);
  }

  txt << "\naggregate\n";
  json rows = json::array();
  for (const auto& [name, a] : agg) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : a.values) {
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    txt << "  " << std::left << std::setw(30) << name << a.passed << '/' << a.total << " pass   values ["
        << (std::isfinite(lo) ? fmt(lo) : "-") << ", " << (std::isfinite(hi) ? fmt(hi) : "-") << "]   "
        << a.cmp << ' ' << fmt(a.threshold) << '\n';
    rows.push_back({{"check", name},
                    {"passed", a.passed},
                    {"total", a.total},
                    {"min", number_or_null(lo)},
                    {"max", number_or_null(hi)},
                    {"comparison", a.cmp},
                    {"threshold", a.threshold}});
  }
  txt << (doc.all_passed ? "\nall checks passed\n" : "\nsome checks FAILED\n");
  doc.text = txt.str();
  doc.json = {{"runs", runs}, {"aggregate", rows}, {"all_passed", doc.all_passed}};
  return doc;
}

}  // namespace radwave
