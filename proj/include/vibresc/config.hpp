#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vibresc/baselines.hpp"
#include "vibresc/benchmarks.hpp"
#include "vibresc/core.hpp"
#include "vibresc/numfmt.hpp"
#include "vibresc/scenario.hpp"

namespace vibresc {

// Sectioned key-value scenario files:
//
//   [plant]
//   type = mass_spring
//   alpha = 20
//   [gains]
//   A = 0.3        # vectors are comma separated
//
// Sections: scenario, plant, objective, gains, lie_bracket, two_dither,
// integration, initial, outputs.

class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::string field, int line, int column, const std::string& what)
      : InvalidArgument(decorate(field, line, column, what)), field_(std::move(field)), line_(line), column_(column) {}

  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  static std::string decorate(const std::string& field, int line, int column, const std::string& what) {
    std::string where;
    if (line > 0) where = "line " + std::to_string(line) + (column > 0 ? ", column " + std::to_string(column) : "") + ": ";
    if (!field.empty()) where += field + ": ";
    return where + what;
  }
  std::string field_;
  int line_;
  int column_;
};

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
  int column = 0;  // of the value
};

struct ConfigSection {
  std::string name;
  int line = 0;
  std::vector<ConfigEntry> entries;

  const ConfigEntry* find(std::string_view key) const {
    for (const auto& e : entries) {
      if (e.key == key) return &e;
    }
    return nullptr;
  }
};

struct ConfigDocument {
  std::vector<ConfigSection> sections;

  const ConfigSection* find(std::string_view name) const {
    for (const auto& s : sections) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }

  /// Replaces or appends section.key; creates the section when absent.
  void set(const std::string& section, const std::string& key, const std::string& value) {
    for (auto& s : sections) {
      if (s.name != section) continue;
      for (auto& e : s.entries) {
        if (e.key == key) {
          e.value = value;
          return;
        }
      }
      s.entries.push_back({key, value, 0, 0});
      return;
    }
    sections.push_back({section, 0, {{key, value, 0, 0}}});
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

}  // namespace detail

inline ConfigDocument parse_document(std::string_view text) {
  ConfigDocument doc;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    const std::size_t hash = raw.find('#');
    const std::string_view body = detail::trim(raw.substr(0, hash));
    if (body.empty()) continue;
    const int indent = static_cast<int>(raw.find_first_not_of(" \t")) + 1;

    if (body.front() == '[') {
      if (body.back() != ']') {
        throw ConfigError("", lineno, indent + static_cast<int>(body.size()), "expected ']' to close the section name");
      }
      const std::string name(detail::trim(body.substr(1, body.size() - 2)));
      if (!detail::is_identifier(name)) throw ConfigError("", lineno, indent + 1, "invalid section name '" + name + "'");
      if (doc.find(name)) throw ConfigError("", lineno, indent, "duplicate section [" + name + "]");
      doc.sections.push_back({name, lineno, {}});
      continue;
    }
    const std::size_t eq = body.find('=');
    if (eq == std::string_view::npos) throw ConfigError("", lineno, indent, "expected 'key = value'");
    const std::string key(detail::trim(body.substr(0, eq)));
    if (!detail::is_identifier(key)) throw ConfigError("", lineno, indent, "invalid key '" + key + "'");
    if (doc.sections.empty()) throw ConfigError("", lineno, indent, "key '" + key + "' appears before any section");
    auto& section = doc.sections.back();
    if (section.find(key)) {
      throw ConfigError(section.name + "." + key, lineno, indent, "duplicate key");
    }
    const std::string_view after = body.substr(eq + 1);
    const std::size_t lead = std::min(after.find_first_not_of(" \t"), after.size());
    const int column = indent + static_cast<int>(eq + 1 + lead);
    section.entries.push_back({key, std::string(detail::trim(after)), lineno, column});
  }
  return doc;
}

/// Applies "section.key=value" (leading dashes allowed) to a document.
inline void apply_override(ConfigDocument& doc, std::string_view spec) {
  while (!spec.empty() && spec.front() == '-') spec.remove_prefix(1);
  const std::size_t eq = spec.find('=');
  const std::size_t dot = spec.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq) {
    throw ConfigError("", 0, 0, "override '" + std::string(spec) + "' is not of the form --section.key=value");
  }
  const std::string section(spec.substr(0, dot));
  const std::string key(spec.substr(dot + 1, eq - dot - 1));
  if (!detail::is_identifier(section) || !detail::is_identifier(key)) {
    throw ConfigError("", 0, 0, "override '" + std::string(spec) + "' has an invalid section or key");
  }
  doc.set(section, key, std::string(detail::trim(spec.substr(eq + 1))));
}

/// VIBRESC_STRICT=0 relaxes unknown keys and the sampling guard to warnings.
inline bool strict_from_env() {
  const char* v = std::getenv("VIBRESC_STRICT");
  if (!v || std::string_view(v) == "1" || std::string_view(v).empty()) return true;
  if (std::string_view(v) == "0") return false;
  throw ConfigError("VIBRESC_STRICT", 0, 0, "must be 0 or 1 (got '" + std::string(v) + "')");
}

struct ParseOptions {
  bool strict = true;
  std::vector<std::string>* warnings = nullptr;
};

namespace detail {

inline const std::set<std::string>& known_sections() {
  static const std::set<std::string> names = {"scenario", "plant",       "objective", "gains",  "lie_bracket",
                                              "two_dither", "integration", "initial",   "outputs"};
  return names;
}

class SectionReader {
 public:
  SectionReader(const ConfigDocument& doc, std::string name) : name_(std::move(name)), sec_(doc.find(name_)) {}

  bool present() const { return sec_ != nullptr; }
  int line() const { return sec_ ? sec_->line : 0; }
  const std::string& name() const { return name_; }

  const ConfigEntry* get(const std::string& key) {
    used_.insert(key);
    return sec_ ? sec_->find(key) : nullptr;
  }
  bool has(const std::string& key) { return get(key) != nullptr; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const ConfigEntry* e = sec_ ? sec_->find(key) : nullptr;
    throw ConfigError(name_ + "." + key, e ? e->line : line(), e ? e->column : 0, what);
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const ConfigEntry* e = get(key);
    if (!e) {
      if (fallback) return *fallback;
      fail(key, "missing required key '" + key + "' in section [" + name_ + "]");
    }
    if (e->value.empty()) fail(key, "empty value");
    return e->value;
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const ConfigEntry* e = get(key);
    if (!e) {
      if (fallback) return *fallback;
      fail(key, "missing required key '" + key + "' in section [" + name_ + "]");
    }
    const auto v = parse_double(e->value);
    if (!v) fail(key, "'" + e->value + "' is not a number");
    return *v;
  }

  long integer(const std::string& key, long fallback) {
    const ConfigEntry* e = get(key);
    if (!e) return fallback;
    const auto v = parse_integer(e->value);
    if (!v) fail(key, "'" + e->value + "' is not an integer");
    return *v;
  }

  bool boolean(const std::string& key, bool fallback) {
    const ConfigEntry* e = get(key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
    if (e->value == "false" || e->value == "0" || e->value == "no") return false;
    fail(key, "'" + e->value + "' is not a boolean (true/false)");
  }

  std::optional<Vector> vector(const std::string& key) {
    const ConfigEntry* e = get(key);
    if (!e) return std::nullopt;
    std::vector<double> items;
    std::string_view rest = e->value;
    while (true) {
      const std::size_t comma = rest.find(',');
      const std::string_view item = trim(rest.substr(0, comma));
      const auto v = parse_double(item);
      if (!v) fail(key, "'" + std::string(item) + "' is not a number");
      items.push_back(*v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    Vector out(static_cast<Eigen::Index>(items.size()));
    for (std::size_t i = 0; i < items.size(); ++i) out(static_cast<Eigen::Index>(i)) = items[i];
    return out;
  }

  Vector required_vector(const std::string& key) {
    auto v = vector(key);
    if (!v) fail(key, "missing required key '" + key + "' in section [" + name_ + "]");
    return *v;
  }

  /// Keys present in the file that nothing asked for.
  void finish(const ParseOptions& opt) const {
    if (!sec_) return;
    for (const auto& e : sec_->entries) {
      if (used_.count(e.key)) continue;
      const std::string msg = "unknown key '" + e.key + "' in section [" + name_ + "]";
      if (opt.strict) throw ConfigError(name_ + "." + e.key, e.line, 1, msg);
      if (opt.warnings) opt.warnings->push_back("line " + std::to_string(e.line) + ": " + msg);
    }
  }

 private:
  std::string name_;
  const ConfigSection* sec_;
  std::set<std::string> used_;
};

inline std::optional<std::string> field_of(const ConfigDocument& doc, const std::string& field, int& line) {
  const std::size_t dot = field.find('.');
  if (dot == std::string::npos) return std::nullopt;
  if (const auto* s = doc.find(field.substr(0, dot))) {
    if (const auto* e = s->find(field.substr(dot + 1))) line = e->line;
  }
  return field;
}

inline PlantSpec read_plant(SectionReader& r) {
  const std::string type = r.text("type");
  if (type == "mass_spring") {
    MassSpringParams p;
    p.m = r.number("m", p.m);
    p.alpha = r.number("alpha", p.alpha);
    p.beta = r.number("beta", p.beta);
    const std::string damping = r.text("damping", std::string("linear"));
    if (damping == "linear") p.damping = Damping::linear;
    else if (damping == "cubic") p.damping = Damping::cubic;
    else r.fail("damping", "must be 'linear' or 'cubic' (got '" + damping + "')");
    return p;
  }
  if (type == "pendulum") {
    PendulumParams p;
    p.m = r.number("m", p.m);
    p.L = r.number("L", p.L);
    p.g = r.number("g", p.g);
    p.beta = r.number("beta", p.beta);
    return p;
  }
  if (type == "flapping") {
    FlappingParams p;
    p.I_F = r.number("I_F", p.I_F);
    p.k_d1 = r.number("k_d1", p.k_d1);
    p.k_L = r.number("k_L", p.k_L);
    p.k_d2 = r.number("k_d2", p.k_d2);
    p.k_d3 = r.number("k_d3", p.k_d3);
    p.g = r.number("g", p.g);
    p.flap_freq_hz = r.number("flap_freq_hz", p.flap_freq_hz);
    return p;
  }
  r.fail("type", "unknown plant type '" + type + "' (expected mass_spring, pendulum or flapping)");
}

inline ControllerKind read_controller(SectionReader& r) {
  const std::string c = r.text("controller", std::string("proposed"));
  if (c == "proposed") return ControllerKind::proposed;
  if (c == "lie_bracket_baseline") return ControllerKind::lie_bracket_baseline;
  if (c == "two_dither_baseline") return ControllerKind::two_dither_baseline;
  r.fail("controller", "unknown controller '" + c + "' (expected proposed, lie_bracket_baseline or two_dither_baseline)");
}

inline EscGains read_gains(SectionReader& r) {
  const Vector C = r.required_vector("C");
  const Vector A = r.required_vector("A");
  const double k = r.number("k");
  const bool has_omega = r.has("omega");
  const bool has_hz = r.has("frequency_hz");
  if (has_omega && has_hz) r.fail("frequency_hz", "give either omega or frequency_hz, not both");
  if (!has_omega && !has_hz) r.fail("omega", "missing required key 'omega' (or 'frequency_hz') in section [gains]");
  const double omega = has_omega ? r.number("omega") : 2.0 * std::numbers::pi * r.number("frequency_hz");
  try {
    return EscGains(C, A, k, omega);
  } catch (const Error& e) {
    std::string what = e.what();
    const std::string key = what.substr(0, what.find(' '));
    r.fail(key == "C" || key == "A" || key == "k" || key == "omega" ? key : "A", what);
  }
}

}  // namespace detail

inline Scenario build_scenario(const ConfigDocument& doc, const ParseOptions& opt = {}) {
  using detail::SectionReader;
  for (const auto& s : doc.sections) {
    if (detail::known_sections().count(s.name)) continue;
    const std::string msg = "unknown section [" + s.name + "]";
    if (opt.strict) throw ConfigError(s.name, s.line, 1, msg);
    if (opt.warnings) opt.warnings->push_back("line " + std::to_string(s.line) + ": " + msg);
  }
  for (const char* required : {"plant", "objective", "initial"}) {
    if (!doc.find(required)) throw ConfigError(required, 0, 0, "missing section [" + std::string(required) + "]");
  }

  Scenario s;
  SectionReader meta(doc, "scenario");
  s.name = meta.text("name", std::string("scenario"));
  s.controller = detail::read_controller(meta);

  SectionReader plant(doc, "plant");
  s.plant = detail::read_plant(plant);

  SectionReader objective(doc, "objective");
  s.objective.type = objective.text("type", std::string("quadratic"));
  if (s.objective.type != "quadratic") objective.fail("type", "unknown objective type '" + s.objective.type + "'");
  s.objective.target = objective.required_vector("target");
  s.objective.weights = objective.vector("weights");

  SectionReader gains(doc, "gains");
  if (gains.present()) s.gains = detail::read_gains(gains);

  SectionReader lie(doc, "lie_bracket");
  if (lie.present()) {
    LieBracketBaselineParams p;
    p.gamma = lie.number("gamma", p.gamma);
    p.eta = lie.number("eta", p.eta);
    p.eps = lie.number("eps", p.eps);
    p.k = lie.number("k", p.k);
    p.mu = lie.number("mu", p.mu);
    p.omega = lie.number("omega", p.omega);
    s.lie_bracket = p;
  }
  SectionReader two(doc, "two_dither");
  if (two.present()) {
    TwoDitherBaselineParams p;
    p.lambda1 = two.number("lambda1", p.lambda1);
    p.lambda2 = two.number("lambda2", p.lambda2);
    p.mu1 = two.number("mu1", p.mu1);
    p.mu2 = two.number("mu2", p.mu2);
    p.omega = two.number("omega", p.omega);
    s.two_dither = p;
  }

  SectionReader integ(doc, "integration");
  s.integration.t0 = integ.number("t0", 0.0);
  s.integration.tf = integ.number("tf", 30.0);
  if (integ.has("dt")) s.integration.dt = integ.number("dt");
  s.integration.steps_per_period = static_cast<int>(integ.integer("steps_per_period", kMinStepsPerPeriod));

  SectionReader init(doc, "initial");
  const Vector q = init.required_vector("q");
  const Vector qdot = init.vector("qdot").value_or(Vector::Zero(q.size()));
  try {
    s.initial_state = pack(q, qdot, init.number("uhat", 0.0));
  } catch (const DimensionError& e) {
    init.fail(e.field(), e.what());
  }

  SectionReader out(doc, "outputs");
  s.outputs.csv = out.text("csv", s.name + ".csv");
  if (out.has("svg")) s.outputs.svg = out.text("svg");
  s.outputs.averaged = out.boolean("averaged", false);
  s.outputs.stride = static_cast<int>(out.integer("stride", 1));

  for (const SectionReader* r : {&meta, &plant, &objective, &gains, &lie, &two, &integ, &init, &out}) r->finish(opt);

  try {
    validate(s);
  } catch (const ConfigError&) {
    throw;
  } catch (const DimensionError& e) {
    int line = 0;
    detail::field_of(doc, e.field(), line);
    throw ConfigError(e.field(), line, 0, e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError("", 0, 0, e.what());
  }

  // sampling guard: at least kMinStepsPerPeriod RK4 steps per dither period
  const double T = s.period();
  const bool coarse = s.integration.dt ? *s.integration.dt > T / kMinStepsPerPeriod * (1.0 + 1e-12)
                                       : s.integration.steps_per_period < kMinStepsPerPeriod;
  if (coarse) {
    const std::string key = s.integration.dt ? "dt" : "steps_per_period";
    const std::string msg = "fewer than " + std::to_string(kMinStepsPerPeriod) + " steps per dither period (dt = " +
                            format_shortest(s.dt()) + ", T = " + format_shortest(T) + ")";
    if (opt.strict) integ.fail(key, msg + "; refusing to run in strict mode");
    if (opt.warnings) opt.warnings->push_back("integration." + key + ": " + msg);
  }
  return s;
}

inline Scenario parse_scenario(std::string_view text, const ParseOptions& opt = {},
                               const std::vector<std::string>& overrides = {}) {
  ConfigDocument doc = parse_document(text);
  for (const auto& o : overrides) apply_override(doc, o);
  return build_scenario(doc, opt);
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError(path.string(), "error while reading '" + path.string() + "'");
  return ss.str();
}

inline Scenario load_scenario(const std::filesystem::path& path, const ParseOptions& opt = {},
                              const std::vector<std::string>& overrides = {}) {
  return parse_scenario(read_text_file(path), opt, overrides);
}

namespace detail {

inline std::string join(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_shortest(v(i));
  return out;
}

}  // namespace detail

/// Inverse of parse_scenario: parse_scenario(emit_scenario(s)) == s.
inline std::string emit_scenario(const Scenario& s) {
  using detail::join;
  auto num = [](double v) { return format_shortest(v); };
  std::ostringstream o;
  o << "[scenario]\nname = " << s.name << "\ncontroller = " << controller_name(s.controller) << "\n\n[plant]\n";
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, MassSpringParams>) {
          o << "type = mass_spring\nm = " << num(p.m) << "\nalpha = " << num(p.alpha) << "\nbeta = " << num(p.beta)
            << "\ndamping = " << (p.damping == Damping::cubic ? "cubic" : "linear") << "\n";
        } else if constexpr (std::is_same_v<P, PendulumParams>) {
          o << "type = pendulum\nm = " << num(p.m) << "\nL = " << num(p.L) << "\ng = " << num(p.g)
            << "\nbeta = " << num(p.beta) << "\n";
        } else {
          o << "type = flapping\nI_F = " << num(p.I_F) << "\nk_d1 = " << num(p.k_d1) << "\nk_L = " << num(p.k_L)
            << "\nk_d2 = " << num(p.k_d2) << "\nk_d3 = " << num(p.k_d3) << "\ng = " << num(p.g)
            << "\nflap_freq_hz = " << num(p.flap_freq_hz) << "\n";
        }
      },
      s.plant);
  o << "\n[objective]\ntype = " << s.objective.type << "\ntarget = " << join(s.objective.target) << "\n";
  if (s.objective.weights) o << "weights = " << join(*s.objective.weights) << "\n";
  if (s.gains) {
    o << "\n[gains]\nC = " << join(s.gains->C()) << "\nA = " << join(s.gains->A()) << "\nk = " << num(s.gains->k())
      << "\nomega = " << num(s.gains->omega()) << "\n";
  }
  if (s.lie_bracket) {
    const auto& p = *s.lie_bracket;
    o << "\n[lie_bracket]\ngamma = " << num(p.gamma) << "\neta = " << num(p.eta) << "\neps = " << num(p.eps)
      << "\nk = " << num(p.k) << "\nmu = " << num(p.mu) << "\nomega = " << num(p.omega) << "\n";
  }
  if (s.two_dither) {
    const auto& p = *s.two_dither;
    o << "\n[two_dither]\nlambda1 = " << num(p.lambda1) << "\nlambda2 = " << num(p.lambda2)
      << "\nmu1 = " << num(p.mu1) << "\nmu2 = " << num(p.mu2) << "\nomega = " << num(p.omega) << "\n";
  }
  o << "\n[integration]\nt0 = " << num(s.integration.t0) << "\ntf = " << num(s.integration.tf) << "\n";
  if (s.integration.dt) o << "dt = " << num(*s.integration.dt) << "\n";
  o << "steps_per_period = " << s.integration.steps_per_period << "\n";
  o << "\n[initial]\nq = " << join(s.initial_state.q()) << "\nqdot = " << join(s.initial_state.qdot())
    << "\nuhat = " << num(s.initial_state.uhat()) << "\n";
  o << "\n[outputs]\ncsv = " << s.outputs.csv << "\n";
  if (s.outputs.svg) o << "svg = " << *s.outputs.svg << "\n";
  o << "averaged = " << (s.outputs.averaged ? "true" : "false") << "\nstride = " << s.outputs.stride << "\n";
  return o.str();
}

}  // namespace vibresc
