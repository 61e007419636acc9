#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "vibresc/core.hpp"
#include "vibresc/integrator.hpp"
#include "vibresc/numfmt.hpp"
#include "vibresc/simulation.hpp"

namespace vibresc {

inline std::vector<std::string> csv_columns(std::size_t n, bool averaged) {
  std::vector<std::string> base;
  for (std::size_t i = 1; i <= n; ++i) base.push_back("q" + std::to_string(i));
  for (std::size_t i = 1; i <= n; ++i) base.push_back("qd" + std::to_string(i));
  for (const char* c : {"uhat", "J", "V", "Vdot", "u_applied"}) base.emplace_back(c);
  std::vector<std::string> out{"t"};
  out.insert(out.end(), base.begin(), base.end());
  if (averaged) {
    for (const auto& c : base) out.push_back("avg_" + c);
  }
  return out;
}

/// One row per `stride` samples (the last sample is always written).
/// Numbers carry 17 significant digits; lines end in '\n'.
inline void write_csv(std::ostream& os, const Trajectory& traj, const DerivedSignals& d, int stride = 1,
                      const Trajectory* avg = nullptr, const DerivedSignals* avg_d = nullptr) {
  if (stride < 1) throw InvalidArgument("stride must be at least 1");
  if (d.J.size() != traj.size()) throw DimensionError("derived", "derived signals do not match the trajectory");
  if (avg && (!avg_d || avg->size() != traj.size() || avg_d->J.size() != traj.size())) {
    throw DimensionError("averaged", "averaged block does not match the trajectory grid");
  }
  const auto cols = csv_columns(traj.dof, avg != nullptr);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  auto block = [&os](const Vector& x, const DerivedSignals& s, std::size_t i) {
    for (Eigen::Index k = 0; k < x.size(); ++k) os << ',' << format_significant(x(k));
    os << ',' << format_significant(s.J[i]) << ',' << format_significant(s.V[i]) << ','
       << format_significant(s.Vdot[i]) << ',' << format_significant(s.u_applied[i]);
  };
  const auto step = static_cast<std::size_t>(stride);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (i % step != 0 && i + 1 != traj.size()) continue;
    os << format_significant(traj.times[i]);
    block(traj.states[i], d, i);
    if (avg) block(avg->states[i], *avg_d, i);
    os << '\n';
  }
}

inline void emit_csv(const std::filesystem::path& path, const Trajectory& traj, const DerivedSignals& d,
                     int stride = 1, const Trajectory* avg = nullptr, const DerivedSignals* avg_d = nullptr) {
  std::ostringstream buf;
  write_csv(buf, traj, d, stride, avg, avg_d);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open '" + path.string() + "' for writing");
  out << buf.str();
  out.flush();
  if (!out) throw IoError(path.string(), "error while writing '" + path.string() + "'");
}

struct PlotSeries {
  std::vector<double> t;
  std::vector<double> y;
  bool dashed = false;
  std::string label;
};

struct PlotPanel {
  std::string signal;  // y-axis label
  std::vector<PlotSeries> series;
};

struct PlotStyle {
  int width = 900;
  int panel_height = 180;
  int max_points = 4000;  // per series, after min/max decimation
  std::string title;
};

namespace detail {

// Keeps the envelope of dense oscillatory signals: per bucket, the min and
// max samples in time order.
inline std::vector<std::pair<double, double>> decimate(const PlotSeries& s, int max_points) {
  std::vector<std::pair<double, double>> out;
  const std::size_t n = s.t.size();
  const std::size_t buckets = static_cast<std::size_t>(std::max(1, max_points / 2));
  if (n <= static_cast<std::size_t>(max_points)) {
    for (std::size_t i = 0; i < n; ++i) out.emplace_back(s.t[i], s.y[i]);
    return out;
  }
  for (std::size_t b = 0; b < buckets; ++b) {
    const std::size_t lo = b * n / buckets;
    const std::size_t hi = std::max(lo + 1, (b + 1) * n / buckets);
    std::size_t imin = lo, imax = lo;
    for (std::size_t i = lo; i < hi; ++i) {
      if (s.y[i] < s.y[imin]) imin = i;
      if (s.y[i] > s.y[imax]) imax = i;
    }
    const std::size_t first = std::min(imin, imax), second = std::max(imin, imax);
    out.emplace_back(s.t[first], s.y[first]);
    if (second != first) out.emplace_back(s.t[second], s.y[second]);
  }
  return out;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// Stacked line panels sharing the time axis. Solid and dashed strokes
/// distinguish series within a panel.
inline std::string render_svg(const std::vector<PlotPanel>& panels, const PlotStyle& style = {}) {
  if (panels.empty()) throw InvalidArgument("plot needs at least one panel");
  double tmin = INFINITY, tmax = -INFINITY;
  for (const auto& p : panels) {
    if (p.series.empty()) throw InvalidArgument("panel '" + p.signal + "' has no series");
    for (const auto& s : p.series) {
      if (s.t.size() != s.y.size()) throw DimensionError("series", "series '" + s.label + "' has mismatched t and y");
      if (s.t.size() < 2) throw InvalidArgument("series '" + s.label + "' needs at least two points");
      tmin = std::min(tmin, s.t.front());
      tmax = std::max(tmax, s.t.back());
    }
  }
  if (!(tmax > tmin)) tmax = tmin + 1.0;

  const double left = 80, right = 20, top = style.title.empty() ? 15 : 35, gap = 40;
  const double pw = style.width - left - right;
  const double ph = style.panel_height;
  const double height = top + static_cast<double>(panels.size()) * (ph + gap) + 10;
  auto f = [](double v) { return format_significant(v, 6); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\"" << f(height)
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!style.title.empty()) {
    o << "<text x=\"" << f(left) << "\" y=\"20\" font-size=\"14\">" << detail::xml_escape(style.title) << "</text>\n";
  }
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const auto& panel = panels[k];
    const double y0 = top + static_cast<double>(k) * (ph + gap);
    double ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : panel.series) {
      for (double v : s.y) {
        if (!std::isfinite(v)) continue;
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
    }
    if (!std::isfinite(ymin)) ymin = ymax = 0.0;
    if (ymax - ymin < 1e-12 * (1.0 + std::abs(ymax))) {
      ymin -= 0.5;
      ymax += 0.5;
    }
    auto X = [&](double t) { return left + (t - tmin) / (tmax - tmin) * pw; };
    auto Y = [&](double v) { return y0 + ph - (v - ymin) / (ymax - ymin) * ph; };

    o << "<g>\n<rect x=\"" << f(left) << "\" y=\"" << f(y0) << "\" width=\"" << f(pw) << "\" height=\"" << f(ph)
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
    o << "<text x=\"" << f(left - 6) << "\" y=\"" << f(y0 + 10) << "\" text-anchor=\"end\">" << f(ymax) << "</text>\n";
    o << "<text x=\"" << f(left - 6) << "\" y=\"" << f(y0 + ph) << "\" text-anchor=\"end\">" << f(ymin) << "</text>\n";
    o << "<text transform=\"translate(" << f(18) << "," << f(y0 + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << detail::xml_escape(panel.signal) << "</text>\n";
    o << "<text x=\"" << f(left) << "\" y=\"" << f(y0 + ph + 14) << "\">" << f(tmin) << "</text>\n";
    o << "<text x=\"" << f(left + pw) << "\" y=\"" << f(y0 + ph + 14) << "\" text-anchor=\"end\">" << f(tmax)
      << "</text>\n";
    o << "<text x=\"" << f(left + pw / 2) << "\" y=\"" << f(y0 + ph + 28) << "\" text-anchor=\"middle\">t [s]</text>\n";
    if (ymin < 0.0 && ymax > 0.0) {
      o << "<line x1=\"" << f(left) << "\" x2=\"" << f(left + pw) << "\" y1=\"" << f(Y(0.0)) << "\" y2=\""
        << f(Y(0.0)) << "\" stroke=\"#ccc\"/>\n";
    }
    for (const auto& s : panel.series) {
      o << "<polyline fill=\"none\" stroke=\"" << (s.dashed ? "#d62728" : "#1f77b4") << "\" stroke-width=\"1.2\"";
      if (s.dashed) o << " stroke-dasharray=\"6,4\"";
      o << " points=\"";
      bool first = true;
      for (const auto& [t, v] : detail::decimate(s, style.max_points)) {
        if (!std::isfinite(v)) continue;
        o << (first ? "" : " ") << f(X(t)) << ',' << f(Y(v));
        first = false;
      }
      o << "\"><title>" << detail::xml_escape(s.label) << "</title></polyline>\n";
    }
    o << "</g>\n";
  }
  o << "</svg>\n";
  return o.str();
}

inline void emit_svg_plot(const std::vector<PlotPanel>& panels, const std::filesystem::path& path,
                          const PlotStyle& style = {}) {
  const std::string svg = render_svg(panels, style);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open '" + path.string() + "' for writing");
  out << svg;
  out.flush();
  if (!out) throw IoError(path.string(), "error while writing '" + path.string() + "'");
}

/// Panels q_i, qdot_i, uhat and V̇; the averaged run, when given, is dashed.
inline std::vector<PlotPanel> trajectory_panels(const Trajectory& traj, const DerivedSignals& d,
                                                const Trajectory* avg = nullptr,
                                                const DerivedSignals* avg_d = nullptr) {
  const std::size_t n = traj.dof;
  auto column = [](const Trajectory& tr, Eigen::Index k) {
    std::vector<double> out;
    out.reserve(tr.size());
    for (const auto& x : tr.states) out.push_back(x(k));
    return out;
  };
  std::vector<PlotPanel> panels;
  auto add = [&](const std::string& name, Eigen::Index k) {
    PlotPanel p{name, {{traj.times, column(traj, k), false, name}}};
    if (avg) p.series.push_back({avg->times, column(*avg, k), true, "averaged " + name});
    panels.push_back(std::move(p));
  };
  for (std::size_t i = 0; i < n; ++i) add("q" + std::to_string(i + 1), static_cast<Eigen::Index>(i));
  for (std::size_t i = 0; i < n; ++i) add("qd" + std::to_string(i + 1), static_cast<Eigen::Index>(n + i));
  add("uhat", static_cast<Eigen::Index>(2 * n));
  PlotPanel vdot{"Vdot", {{traj.times, d.Vdot, false, "Vdot"}}};
  if (avg && avg_d) vdot.series.push_back({avg->times, avg_d->Vdot, true, "averaged Vdot"});
  panels.push_back(std::move(vdot));
  return panels;
}

}  // namespace vibresc
