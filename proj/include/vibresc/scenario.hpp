#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vibresc/baselines.hpp"
#include "vibresc/benchmarks.hpp"
#include "vibresc/core.hpp"
#include "vibresc/esc_loop.hpp"

namespace vibresc {

using PlantSpec = std::variant<MassSpringParams, PendulumParams, FlappingParams>;

inline std::string plant_name(const PlantSpec& plant) {
  if (std::holds_alternative<MassSpringParams>(plant)) return "mass_spring";
  if (std::holds_alternative<PendulumParams>(plant)) return "pendulum";
  return "flapping";
}

inline std::size_t plant_dof(const PlantSpec& plant) {
  return std::holds_alternative<FlappingParams>(plant) ? 2 : 1;
}

inline MechanicalSystem make_system(const PlantSpec& plant) {
  return std::visit(
      [](const auto& p) -> MechanicalSystem {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, MassSpringParams>) return make_mass_spring(p);
        else if constexpr (std::is_same_v<P, PendulumParams>) return make_pendulum(p);
        else return make_flapping(p);
      },
      plant);
}

struct ObjectiveSpec {
  std::string type = "quadratic";
  Vector target;
  std::optional<Vector> weights;  // all ones when absent

  friend bool operator==(const ObjectiveSpec& a, const ObjectiveSpec& b) {
    return a.type == b.type && a.target == b.target && a.weights == b.weights;
  }
};

inline Objective make_objective(const ObjectiveSpec& spec) {
  if (spec.type != "quadratic") throw InvalidArgument("unknown objective type '" + spec.type + "'");
  return spec.weights ? weighted_quadratic_objective(spec.target, *spec.weights) : quadratic_objective(spec.target);
}

enum class ControllerKind { proposed, lie_bracket_baseline, two_dither_baseline };

inline std::string_view controller_name(ControllerKind c) {
  switch (c) {
    case ControllerKind::proposed: return "proposed";
    case ControllerKind::lie_bracket_baseline: return "lie_bracket_baseline";
    case ControllerKind::two_dither_baseline: return "two_dither_baseline";
  }
  return "?";
}

inline constexpr int kMinStepsPerPeriod = 40;

struct IntegrationSpec {
  double t0 = 0.0;
  double tf = 30.0;
  std::optional<double> dt;  // wins over steps_per_period when set
  int steps_per_period = kMinStepsPerPeriod;

  friend bool operator==(const IntegrationSpec&, const IntegrationSpec&) = default;
};

struct OutputSpec {
  std::string csv;
  std::optional<std::string> svg;
  bool averaged = false;
  int stride = 1;

  friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

/// A complete experiment: plant, objective, controller, integration, outputs.
struct Scenario {
  std::string name;
  PlantSpec plant;
  ObjectiveSpec objective;
  ControllerKind controller = ControllerKind::proposed;
  std::optional<EscGains> gains;
  std::optional<LieBracketBaselineParams> lie_bracket;
  std::optional<TwoDitherBaselineParams> two_dither;
  IntegrationSpec integration;
  StateVector initial_state;
  OutputSpec outputs;

  std::size_t dof() const { return plant_dof(plant); }

  /// Dither frequency of whichever controller is selected.
  double omega() const {
    switch (controller) {
      case ControllerKind::proposed: return gains->omega();
      case ControllerKind::lie_bracket_baseline: return lie_bracket->omega;
      case ControllerKind::two_dither_baseline: return two_dither->omega;
    }
    return 0.0;
  }
  double period() const { return 2.0 * std::numbers::pi / omega(); }
  double dt() const {
    return integration.dt ? *integration.dt : period() / integration.steps_per_period;
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Structural checks shared by the config parser and programmatic callers.
inline void validate(const Scenario& s) {
  std::visit([](const auto& p) { p.validate(); }, s.plant);
  const std::size_t n = s.dof();
  if (static_cast<std::size_t>(s.objective.target.size()) != n) {
    throw DimensionError("objective.target", "target has length " + std::to_string(s.objective.target.size()) +
                                                 ", plant has " + std::to_string(n) + " degrees of freedom");
  }
  if (s.objective.weights && static_cast<std::size_t>(s.objective.weights->size()) != n) {
    throw DimensionError("objective.weights", "weights have length " + std::to_string(s.objective.weights->size()) +
                                                  ", plant has " + std::to_string(n) + " degrees of freedom");
  }
  const bool want_gains = s.controller == ControllerKind::proposed;
  const bool want_lie = s.controller == ControllerKind::lie_bracket_baseline;
  const bool want_two = s.controller == ControllerKind::two_dither_baseline;
  if (want_gains != s.gains.has_value()) {
    throw InvalidArgument(want_gains ? "missing section [gains] for the proposed controller"
                                     : "section [gains] is only valid for the proposed controller");
  }
  if (want_lie != s.lie_bracket.has_value()) {
    throw InvalidArgument(want_lie ? "missing section [lie_bracket]"
                                   : "section [lie_bracket] requires controller type lie_bracket_baseline");
  }
  if (want_two != s.two_dither.has_value()) {
    throw InvalidArgument(want_two ? "missing section [two_dither]"
                                   : "section [two_dither] requires controller type two_dither_baseline");
  }
  if (s.gains && s.gains->dof() != n) {
    throw DimensionError("gains.C", "gain vectors have length " + std::to_string(s.gains->dof()) +
                                        ", plant has " + std::to_string(n) + " degrees of freedom");
  }
  if (s.lie_bracket) s.lie_bracket->validate();
  if (s.two_dither) s.two_dither->validate();
  if (!want_gains && n != 1) throw InvalidArgument("baseline controllers require a single-DOF plant");
  if (s.initial_state.dof() != n) {
    throw DimensionError("initial.q", "initial state has " + std::to_string(s.initial_state.dof()) +
                                          " coordinates, plant has " + std::to_string(n));
  }
  if (!(s.integration.tf > s.integration.t0)) throw InvalidArgument("integration.tf must exceed integration.t0");
  if (s.integration.dt && !(*s.integration.dt > 0.0)) throw InvalidArgument("integration.dt must be positive");
  if (s.integration.steps_per_period <= 0) throw InvalidArgument("integration.steps_per_period must be positive");
  if (s.outputs.stride < 1) throw InvalidArgument("outputs.stride must be at least 1");
}

inline EscClosedLoop make_loop(const Scenario& s) {
  if (!s.gains) throw InvalidArgument("scenario '" + s.name + "' has no [gains] for the proposed controller");
  return EscClosedLoop(make_system(s.plant), make_objective(s.objective), *s.gains);
}

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"mass_spring",  "mass_spring_cubic",        "pendulum",
                                                 "flapping",     "comparison_grushkovskaya", "comparison_suttner"};
  return names;
}

namespace detail {

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline OutputSpec outputs_for(const std::string& name, bool averaged) {
  return {name + ".csv", name + ".svg", averaged, 1};
}

}  // namespace detail

/// The published benchmark runs with their parameters. Horizons are not given
/// with the results; these reach steady state for every run.
inline Scenario scenario_defaults(std::string_view name) {
  using detail::vec;
  Scenario s;
  s.name = std::string(name);
  if (name == "mass_spring" || name == "mass_spring_cubic") {
    MassSpringParams p;
    p.damping = name == "mass_spring" ? Damping::linear : Damping::cubic;
    s.plant = p;
    s.objective = {"quadratic", vec({1.0}), std::nullopt};
    s.gains = EscGains(vec({3.0}), vec({0.3}), 5.0, 50.0);
    s.integration = {0.0, 30.0, std::nullopt, kMinStepsPerPeriod};
    s.initial_state = pack(vec({3.0}), vec({0.0}), 0.0);
    s.outputs = detail::outputs_for(s.name, true);
  } else if (name == "pendulum") {
    s.plant = PendulumParams{};
    s.objective = {"quadratic", vec({2.0}), std::nullopt};
    s.gains = EscGains(vec({1.0}), vec({0.5}), 2.0, 50.0);
    s.integration = {0.0, 30.0, std::nullopt, kMinStepsPerPeriod};
    s.initial_state = pack(vec({0.0}), vec({0.0}), 0.0);
    s.outputs = detail::outputs_for(s.name, true);
  } else if (name == "flapping") {
    FlappingParams p;
    s.plant = p;
    // J(z) = (z - 1)^2: phi carries zero weight.
    s.objective = {"quadratic", vec({1.0, 0.0}), vec({1.0, 0.0})};
    // dither amplitudes are a₁/I_F and a₂/I_F
    s.gains = EscGains(vec({0.15, 1.0}), vec({5.322e-13 / p.I_F, 2.575e-5 / p.I_F}), 7.12e3,
                       2.0 * std::numbers::pi * p.flap_freq_hz);
    s.integration = {0.0, 40.0, std::nullopt, kMinStepsPerPeriod};
    s.initial_state = pack(vec({0.0, 0.0}), vec({0.0, 0.0}), 0.0);
    s.outputs = detail::outputs_for(s.name, false);
  } else if (name == "comparison_grushkovskaya") {
    s.plant = MassSpringParams{};
    s.objective = {"quadratic", vec({1.0}), std::nullopt};
    s.controller = ControllerKind::lie_bracket_baseline;
    s.lie_bracket = LieBracketBaselineParams{};
    s.integration = {0.0, 200.0, std::nullopt, kMinStepsPerPeriod};
    s.initial_state = pack(vec({1.68}), vec({-1.0}), 0.0);
    s.outputs = detail::outputs_for(s.name, false);
  } else if (name == "comparison_suttner") {
    s.plant = PendulumParams{};
    s.objective = {"quadratic", vec({2.0}), std::nullopt};
    s.controller = ControllerKind::two_dither_baseline;
    s.two_dither = TwoDitherBaselineParams{};
    s.integration = {0.0, 30.0, std::nullopt, kMinStepsPerPeriod};
    s.initial_state = pack(vec({3.0}), vec({-1.0}), 0.0);
    s.outputs = detail::outputs_for(s.name, false);
  } else {
    std::string valid;
    for (const auto& n : scenario_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw InvalidArgument("unknown scenario '" + std::string(name) + "'; valid names: " + valid);
  }
  return s;
}

/// The proposed-ESC side of a comparison run, with the settings it was
/// compared under.
inline Scenario comparison_counterpart(std::string_view name) {
  using detail::vec;
  Scenario s = scenario_defaults(name);
  s.name = std::string(name) + "_proposed";
  s.controller = ControllerKind::proposed;
  s.lie_bracket.reset();
  s.two_dither.reset();
  s.outputs = detail::outputs_for(s.name, false);
  if (name == "comparison_grushkovskaya") {
    s.gains = EscGains(vec({6.0}), vec({1.0}), 0.72, 3.2);
    s.initial_state = pack(vec({2.0}), vec({-1.0}), 0.0);
  } else if (name == "comparison_suttner") {
    s.gains = EscGains(vec({7.0}), vec({1.0}), 1.0, 50.0);
    s.initial_state = pack(vec({3.0}), vec({-1.0}), 0.0);
  } else {
    throw InvalidArgument("'" + std::string(name) + "' is not a comparison scenario");
  }
  return s;
}

}  // namespace vibresc
