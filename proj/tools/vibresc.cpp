// vibresc: run single-dither ESC scenarios, sweeps and the acceptance checks.
//
//   vibresc run configs/mass_spring.cfg --out results --gains.omega=100
//   vibresc run --scenario pendulum
//   vibresc defaults flapping > my.cfg
//   vibresc sweep configs/mass_spring.cfg --omegas 25,50,100,200 --jobs 2
//   vibresc compare
//   vibresc acceptance --criterion 5
//
// Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vibresc/vibresc.hpp"

namespace fs = std::filesystem;
using namespace vibresc;

namespace {

std::vector<std::string> overrides_from(const std::vector<std::string>& extras) {
  std::vector<std::string> out;
  for (const auto& e : extras) {
    if (e.rfind("--", 0) != 0 || e.find('.') == std::string::npos || e.find('=') == std::string::npos) {
      throw ConfigError("", 0, 0, "unexpected argument '" + e + "' (overrides look like --section.key=value)");
    }
    out.push_back(e);
  }
  return out;
}

Scenario load(const std::string& config, const std::string& name, const std::vector<std::string>& overrides) {
  if (config.empty() == name.empty()) throw ConfigError("", 0, 0, "give exactly one of a config file or --scenario");
  std::vector<std::string> warnings;
  const ParseOptions opt{strict_from_env(), &warnings};
  Scenario s = config.empty() ? parse_scenario(emit_scenario(scenario_defaults(name)), opt, overrides)
                              : load_scenario(config, opt, overrides);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return s;
}

std::vector<double> parse_omegas(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto v = parse_double(detail::trim(item));
    if (!v) throw ConfigError("omegas", 0, 0, "'" + item + "' is not a number");
    out.push_back(*v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int check_configs(const fs::path& dir) {
  int bad = 0;
  for (const auto& name : scenario_names()) {
    const fs::path path = dir / (name + ".cfg");
    const Scenario parsed = load_scenario(path, {true, nullptr});
    const Scenario expected = scenario_defaults(name);
    const bool same = parsed == expected;
    const bool round = parse_scenario(emit_scenario(parsed), {true, nullptr}) == parsed;
    std::cout << (same && round ? "ok   " : "FAIL ") << path.string()
              << (same ? "" : " (differs from built-in defaults)") << (round ? "" : " (emit/parse round trip differs)")
              << "\n";
    bad += same && round ? 0 : 1;
  }
  return bad ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-dither extremum seeking for mechanical systems"};
  app.require_subcommand(1);

  std::string config, scenario_name, out_dir = ".";
  auto* run = app.add_subcommand("run", "simulate a scenario and write CSV/SVG/summary files");
  run->add_option("config", config, "scenario config file");
  run->add_option("--scenario", scenario_name, "built-in scenario instead of a file");
  run->add_option("--out", out_dir, "directory for output files");
  run->allow_extras();

  std::string defaults_name, defaults_dir;
  auto* defaults = app.add_subcommand("defaults", "print a built-in scenario as a config file");
  defaults->add_option("name", defaults_name, "scenario name (omit to list)");
  defaults->add_option("--write-dir", defaults_dir, "write every built-in scenario to DIR/<name>.cfg");

  std::string omegas = "25,50,100,200";
  int jobs = 1;
  double factor = 0.25;
  bool raw = false;
  auto* sweep = app.add_subcommand("sweep", "closeness of true and averaged runs across dither frequencies");
  sweep->add_option("config", config, "scenario config file");
  sweep->add_option("--scenario", scenario_name, "built-in scenario instead of a file");
  sweep->add_option("--omegas", omegas, "comma separated frequencies in rad/s");
  sweep->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);
  sweep->add_option("--correction-factor", factor, "coefficient of the averaging correction");
  sweep->add_flag("--raw", raw, "compare against the averaged state without lifting it through the dither flow");
  sweep->allow_extras();

  auto* compare = app.add_subcommand("compare", "proposed ESC against the two baselines");

  int criterion = 0;
  auto* acceptance = app.add_subcommand("acceptance", "run the acceptance checks");
  acceptance->add_option("--criterion", criterion, "run a single criterion");

  std::string check_dir;
  auto* check = app.add_subcommand("check-configs", "verify shipped configs against the built-in scenarios");
  check->add_option("dir", check_dir, "config directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (run->parsed()) {
      const Scenario s = load(config, scenario_name, overrides_from(run->remaining()));
      const RunResult r = run_scenario(s, out_dir);
      (r.exit_code ? std::cerr : std::cout) << r.message << "\n";
      if (r.exit_code == 0) {
        const auto& rep = r.summary["report"];
        std::cout << "final-window mean q = " << rep["steady_state_mean"].dump()
                  << ", mean uhat = " << rep["uhat_steady_mean"].dump() << "\n";
      }
      return r.exit_code;
    }
    if (defaults->parsed()) {
      if (!defaults_dir.empty()) {
        fs::create_directories(defaults_dir);
        for (const auto& name : scenario_names()) {
          detail::write_text(fs::path(defaults_dir) / (name + ".cfg"), emit_scenario(scenario_defaults(name)));
        }
        return 0;
      }
      if (defaults_name.empty()) {
        for (const auto& name : scenario_names()) std::cout << name << "\n";
        return 0;
      }
      std::cout << emit_scenario(scenario_defaults(defaults_name));
      return 0;
    }
    if (sweep->parsed()) {
      const Scenario s = load(config, scenario_name, overrides_from(sweep->remaining()));
      ScalingOptions opt;
      opt.jobs = jobs;
      opt.correction_factor = factor;
      opt.lift = !raw;
      const ScalingStudy st = epsilon_scaling_study(s, parse_omegas(omegas), opt);
      std::cout << "omega,epsilon,closeness,residual\n";
      for (std::size_t i = 0; i < st.omegas.size(); ++i) {
        std::cout << format_significant(st.omegas[i]) << ',' << format_significant(1.0 / st.omegas[i]) << ','
                  << format_significant(st.closeness[i]) << ',' << format_significant(st.fit.residuals[i]) << "\n";
      }
      std::cout << "slope = " << format_significant(st.fit.slope, 6)
                << ", intercept = " << format_significant(st.fit.intercept, 6) << "\n";
      return 0;
    }
    if (compare->parsed()) {
      const ComparisonOutcome o = compare_two_dither();
      std::cout << "pendulum, proposed ESC: mean " << format_significant(o.proposed_mean, 6) << ", peak-to-peak "
                << format_significant(o.proposed_ptp, 6) << "\n";
      if (o.baseline_error.empty()) {
        std::cout << "pendulum, two-dither baseline: mean " << format_significant(o.baseline_mean, 6)
                  << ", peak-to-peak " << format_significant(o.baseline_ptp, 6) << "\n";
      } else {
        std::cout << "pendulum, two-dither baseline: no steady state (" << o.baseline_error << ")\n";
      }
      for (const Scenario& s : {scenario_defaults("comparison_grushkovskaya"), detail::cubic_lie_bracket_scenario(),
                                comparison_counterpart("comparison_grushkovskaya")}) {
        const auto rep = scenario_report(s, simulate_scenario(s));
        std::cout << s.name << ": mean " << format_significant(rep.steady_state_mean(0), 6) << ", peak-to-peak "
                  << format_significant(rep.steady_state_oscillation(0), 6) << "\n";
      }
      return 0;
    }
    if (acceptance->parsed()) {
      const int count = static_cast<int>(acceptance_criteria().size());
      int failed = 0;
      for (int id = 1; id <= count; ++id) {
        if (criterion && id != criterion) continue;
        const CriterionResult r = run_criterion(id);
        std::cout << format_result(r) << std::endl;
        failed += r.passed ? 0 : 1;
      }
      return failed ? 1 : 0;
    }
    if (check->parsed()) return check_configs(check_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
