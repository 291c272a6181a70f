// rwlab: command-line front end for the radial wave laboratory.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "json.hpp"

#include "radwave/errors.hpp"
#include "radwave/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

radwave::ExperimentConfig load_config(const fs::path& file, const fs::path& out) {
  std::ifstream is(file);
  if (!is) throw radwave::InvalidArgument("cannot read config `" + file.string() + "`");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw radwave::InvalidArgument("config `" + file.string() + "`: " + e.what());
  }
  if (j.is_object()) j["out_dir"] = out.string();
  return radwave::config_from_json(j);
}

/// "p=3.5,4,4.5" -> {"p", [3.5, 4, 4.5]}. Values parse as JSON, falling back
/// to plain strings (for e.g. mode=full,split).
std::pair<std::string, std::vector<json>> parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
    throw radwave::InvalidArgument("--axis `" + spec + "`: expected field=v1,v2,...");
  }
  std::vector<json> vals;
  std::string rest = spec.substr(eq + 1);
  std::size_t pos = 0;
  while (pos <= rest.size()) {
    const auto comma = rest.find(',', pos);
    const std::string tok = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (tok.empty()) throw radwave::InvalidArgument("--axis `" + spec + "`: empty value");
    json v = json::parse(tok, nullptr, false);
    vals.push_back(v.is_discarded() ? json(tok) : v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return {spec.substr(0, eq), vals};
}

void write_report(const std::vector<radwave::RunSummary>& summaries, const fs::path& dir) {
  const auto doc = radwave::report(summaries);
  std::cout << doc.text;
  std::ofstream(dir / "report.txt") << doc.text;
  std::ofstream(dir / "report.json") << doc.json.dump(2) << '\n';
}

int exit_code(const std::vector<radwave::RunSummary>& summaries) {
  for (const auto& s : summaries) {
    if (!s.passed()) return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rwlab - radial defocusing wave equation laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir, in_dir, selftest_dir = "selftest_out";
  std::vector<std::string> axes;

  auto* sim = app.add_subcommand("simulate", "run one experiment");
  sim->add_option("--config", config_path, "JSON experiment config")->required();
  sim->add_option("--out", out_dir, "output directory")->required();

  auto* sw = app.add_subcommand("sweep", "run a cartesian sweep over config fields");
  sw->add_option("--config", config_path, "JSON base config")->required();
  sw->add_option("--axis", axes, "field=v1,v2,... (repeatable; dotted paths like grid.n)");
  sw->add_option("--out", out_dir, "output directory")->required();

  auto* rep = app.add_subcommand("report", "summarize finished runs");
  rep->add_option("--in", in_dir, "run or sweep directory")->required();

  auto* st = app.add_subcommand("selftest", "run the full acceptance suite");
  st->add_option("--out", selftest_dir, "scratch directory for series files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const auto cfg = load_config(config_path, out_dir);
      const auto s = radwave::run(cfg);
      write_report({s}, cfg.out_dir);
      return exit_code({s});
    }
    if (sw->parsed()) {
      const auto base = load_config(config_path, out_dir);
      std::map<std::string, std::vector<json>> ax;
      for (const auto& a : axes) {
        auto [k, v] = parse_axis(a);
        if (ax.count(k)) throw radwave::InvalidArgument("--axis `" + k + "` given twice");
        ax[k] = std::move(v);
      }
      const auto summaries = radwave::sweep(base, ax);
      write_report(summaries, base.out_dir);
      return exit_code(summaries);
    }
    if (rep->parsed()) {
      const auto summaries = radwave::load_summaries(in_dir);
      const auto doc = radwave::report(summaries);
      std::cout << doc.text;
      std::ofstream(fs::path(in_dir) / "report.json") << doc.json.dump(2) << '\n';
      return doc.all_passed ? 0 : 1;
    }
    if (st->parsed()) {
      bool all = true;
      radwave::run_acceptance(selftest_dir, [&](const radwave::CriterionResult& r) {
        all = all && r.passed;
        std::printf("[%s] %2d %-34s %s  (%.1fs)\n", r.passed ? "PASS" : "FAIL", r.id, r.title.c_str(),
                    r.measured.c_str(), r.seconds);
        std::fflush(stdout);
      });
      std::printf("%s\n", all ? "selftest: all criteria passed" : "selftest: FAILED");
      return all ? 0 : 1;
    }
  } catch (const radwave::Error& e) {
    std::fprintf(stderr, "rwlab: %s: %s\n", radwave::to_string(e.kind()), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "rwlab: %s\n", e.what());
    return 2;
  }
  return 0;
}
