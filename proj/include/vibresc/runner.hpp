#pragma once

#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vibresc/analysis.hpp"
#include "vibresc/config.hpp"
#include "vibresc/core.hpp"
#include "vibresc/output.hpp"
#include "vibresc/scenario.hpp"
#include "vibresc/simulation.hpp"

namespace vibresc {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitIo = 4 };

/// Stable mapping from the error hierarchy onto process exit codes.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return kExitIo;
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  return kExitConfig;
}

struct RunResult {
  int exit_code = kExitOk;
  std::string message;
  std::vector<std::filesystem::path> files;
  nlohmann::json summary;
};

namespace detail {

inline nlohmann::json to_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline nlohmann::json to_json(const ConvergenceReport& r) {
  nlohmann::json j;
  j["settling_time"] = r.settling_time ? nlohmann::json(*r.settling_time) : nlohmann::json(nullptr);
  j["steady_state_mean"] = to_json(r.steady_state_mean);
  j["steady_state_oscillation"] = to_json(r.steady_state_oscillation);
  j["uhat_steady_mean"] = r.uhat_steady_mean;
  j["window"] = {r.window_start, r.window_end};
  return j;
}

inline std::filesystem::path summary_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p.replace_extension(".summary.json");
  return p;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError(path.string(), "error while writing '" + path.string() + "'");
}

}  // namespace detail

/// Simulates, writes the CSV (with the averaged block when requested), the
/// optional SVG and a JSON summary next to the CSV. Relative output paths
/// resolve against `out_dir`.
inline RunResult run_scenario(const Scenario& s, const std::filesystem::path& out_dir = ".") {
  RunResult res;
  const std::filesystem::path csv = out_dir / s.outputs.csv;
  std::optional<Trajectory> partial;
  try {
    validate(s);
    if (s.outputs.averaged && s.controller != ControllerKind::proposed) {
      throw InvalidArgument("outputs.averaged requires the proposed controller");
    }
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

    Trajectory truth;
    try {
      truth = simulate_scenario(s);
    } catch (const IntegrationError& e) {
      partial = e.partial();
      throw;
    }
    const DerivedSignals d = derive_signals(s, truth);
    std::optional<Trajectory> avg;
    std::optional<DerivedSignals> avg_d;
    if (s.outputs.averaged) {
      avg = simulate_averaged(s);
      avg_d = derive_signals(s, *avg, true);
    }
    emit_csv(csv, truth, d, s.outputs.stride, avg ? &*avg : nullptr, avg_d ? &*avg_d : nullptr);
    res.files.push_back(csv);
    if (s.outputs.svg) {
      const std::filesystem::path svg = out_dir / *s.outputs.svg;
      PlotStyle style;
      style.title = s.name;
      emit_svg_plot(trajectory_panels(truth, d, avg ? &*avg : nullptr, avg_d ? &*avg_d : nullptr), svg, style);
      res.files.push_back(svg);
    }

    nlohmann::json j;
    j["scenario"] = s.name;
    j["plant"] = plant_name(s.plant);
    j["controller"] = std::string(controller_name(s.controller));
    j["omega"] = s.omega();
    j["dt"] = s.dt();
    j["samples"] = truth.size();
    j["target"] = detail::to_json(s.objective.target);
    j["report"] = detail::to_json(scenario_report(s, truth));
    const ControlEffort effort = control_effort(s, truth);
    j["applied_control"] = {{"final_window_mean_norm", effort.window_mean_norm},
                            {"peak_period_mean_norm", effort.peak_period_mean}};
    if (avg) {
      j["averaged_report"] = detail::to_json(scenario_report(s, *avg));
      const EscClosedLoop loop = make_loop(s);
      j["closeness_lifted"] = closeness(truth, lift_trajectory(loop, *avg));
      j["closeness_raw"] = closeness(truth, *avg);
    }
    res.summary = j;
    const auto summary = detail::summary_path(csv);
    detail::write_text(summary, j.dump(2) + "\n");
    res.files.push_back(summary);
    res.message = "wrote " + csv.string();
  } catch (const std::exception& e) {
    res.exit_code = exit_code_for(e);
    res.message = e.what();
    if (partial && partial->size() > 0) {
      try {
        emit_csv(csv, *partial, derive_signals(s, *partial), s.outputs.stride);
        res.files.push_back(csv);
        res.message += " (partial trajectory written to " + csv.string() + ")";
      } catch (const std::exception& io) {
        res.message += std::string("; partial CSV not written: ") + io.what();
      }
    }
  }
  return res;
}

}  // namespace vibresc
