// Copyright 2026 The NCB Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Run summaries, the aggregated CSV table and self-contained SVG plots.
//
// runs.jsonl holds one RunSummary per trained run. summary.csv groups them
// by (method, epsilon): mean and sample standard deviation (n - 1, zero for
// a single run) of social welfare, max exploitability and revenue, plus the
// compliance rate. Every statistic is recomputable from runs.jsonl.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "ncb/baselines.hpp"
#include "ncb/bpg.hpp"
#include "ncb/exploitability.hpp"

namespace ncb {

struct RunSummary {
  Method method = Method::bpg;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  double social_welfare = 0.0;
  double max_exploitability = 0.0;
  double revenue = 0.0;
  bool compliant = false;
  std::size_t iterations = 0;
  bool converged = false;
  std::string run_dir;  // relative to the output directory

  static RunSummary from(Method m, double epsilon, std::uint64_t seed, const ExploitReport& rep,
                         std::size_t iterations, bool converged, std::string run_dir) {
    return {m, epsilon, seed, rep.social_welfare, rep.max_exploitability, rep.revenue, rep.compliant,
            iterations, converged, std::move(run_dir)};
  }

  nlohmann::json to_json() const {
    return {{"method", to_string(method)},
            {"epsilon", epsilon},
            {"seed", seed},
            {"social_welfare", social_welfare},
            {"max_exploitability", max_exploitability},
            {"revenue", revenue},
            {"compliant", compliant},
            {"iterations", iterations},
            {"converged", converged},
            {"run_dir", run_dir}};
  }

  static RunSummary from_json(const nlohmann::json& j) {
    RunSummary r;
    r.method = parse_method(j.at("method").get<std::string>());
    r.epsilon = j.at("epsilon").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.social_welfare = j.at("social_welfare").get<double>();
    r.max_exploitability = j.at("max_exploitability").get<double>();
    r.revenue = j.at("revenue").get<double>();
    r.compliant = j.at("compliant").get<bool>();
    r.iterations = j.at("iterations").get<std::size_t>();
    r.converged = j.at("converged").get<bool>();
    r.run_dir = j.value("run_dir", std::string{});
    return r;
  }
};

inline void append_run_jsonl(const RunSummary& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw std::runtime_error("cannot append to '" + path.string() + "'");
  out << r.to_json().dump() << '\n';
}

inline std::vector<RunSummary> read_runs_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::vector<RunSummary> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    try {
      out.push_back(RunSummary::from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Mean and sample standard deviation; std is 0 for fewer than two values.
inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  if (v.size() < 2) return m;
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return m;
}

struct SummaryRow {
  Method method = Method::bpg;
  double epsilon = 0.0;
  std::size_t n_runs = 0;
  MeanStd social_welfare;
  MeanStd max_exploitability;
  double compliance_rate = 0.0;
  MeanStd revenue;
};

/// One row per (method, epsilon), ordered by method then epsilon.
inline std::vector<SummaryRow> summarize(const std::vector<RunSummary>& runs) {
  std::map<std::pair<int, double>, std::vector<const RunSummary*>> groups;
  for (const auto& r : runs) groups[{static_cast<int>(r.method), r.epsilon}].push_back(&r);
  std::vector<SummaryRow> rows;
  for (const auto& [key, members] : groups) {
    SummaryRow row;
    row.method = static_cast<Method>(key.first);
    row.epsilon = key.second;
    row.n_runs = members.size();
    std::vector<double> sw, me, rev;
    for (const auto* r : members) {
      sw.push_back(r->social_welfare);
      me.push_back(r->max_exploitability);
      rev.push_back(r->revenue);
    }
    row.social_welfare = mean_std(sw);
    row.max_exploitability = mean_std(me);
    row.revenue = mean_std(rev);
    row.compliance_rate = compliance_rate(me, row.epsilon);
    rows.push_back(row);
  }
  return rows;
}

namespace report_detail {
inline std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}
}  // namespace report_detail

inline constexpr const char* kSummaryHeader =
    "method,epsilon,n_runs,social_welfare_mean,social_welfare_std,max_exploitability_mean,"
    "max_exploitability_std,compliance_rate,revenue_mean,revenue_std";

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  using report_detail::num;
  std::string out = std::string(kSummaryHeader) + "\n";
  for (const auto& r : rows) {
    out += to_string(r.method) + "," + num(r.epsilon) + "," + std::to_string(r.n_runs) + "," +
           num(r.social_welfare.mean) + "," + num(r.social_welfare.std) + "," + num(r.max_exploitability.mean) +
           "," + num(r.max_exploitability.std) + "," + num(r.compliance_rate) + "," + num(r.revenue.mean) + "," +
           num(r.revenue.std) + "\n";
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

// SVG -------------------------------------------------------------------

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> err;  // optional symmetric error bars
};

namespace report_detail {
inline std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

inline double nice_step(double range, int ticks) {
  const double raw = range / std::max(1, ticks);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (m * mag >= raw) return m * mag;
  return 10.0 * mag;
}

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                           "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
}  // namespace report_detail

/// A line chart with markers, optional error bars and a legend.
inline std::string line_plot_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                                 const std::vector<Series>& series, bool markers = true) {
  using namespace report_detail;
  const double W = 640, H = 420, left = 70, right = 170, top = 40, bottom = 55;
  const double pw = W - left - right, ph = H - top - bottom;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      const double e = k < s.err.size() ? s.err[k] : 0.0;
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, s.y[k] - e);
      y1 = std::max(y1, s.y[k] + e);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
    << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int axis = 0; axis < 2; ++axis) {
    const double lo = axis ? y0 : x0, hi = axis ? y1 : x1;
    const double stepv = nice_step(hi - lo, 6);
    const int digits = stepv >= 1.0 ? 0 : static_cast<int>(std::ceil(-std::log10(stepv)) + 0.5);
    for (double v = std::ceil(lo / stepv) * stepv; v <= hi + 1e-9 * stepv; v += stepv) {
      if (axis == 0) {
        o << "<line x1=\"" << sx(v) << "\" y1=\"" << top + ph << "\" x2=\"" << sx(v) << "\" y2=\"" << top + ph + 5
          << "\" stroke=\"black\"/><text x=\"" << sx(v) << "\" y=\"" << top + ph + 18
          << "\" text-anchor=\"middle\">" << fixed(v, digits) << "</text>\n";
      } else {
        o << "<line x1=\"" << left - 5 << "\" y1=\"" << sy(v) << "\" x2=\"" << left + pw << "\" y2=\"" << sy(v)
          << "\" stroke=\"#dddddd\"/><text x=\"" << left - 8 << "\" y=\"" << sy(v) + 4
          << "\" text-anchor=\"end\">" << fixed(v, digits) << "</text>\n";
      }
    }
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << escape(xlabel)
    << "</text>\n";
  o << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(ylabel) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    const char* color = kPalette[s % std::size(kPalette)];
    if (ser.x.empty()) continue;
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\"";
    for (std::size_t k = 0; k < ser.x.size(); ++k) o << sx(ser.x[k]) << "," << sy(ser.y[k]) << " ";
    o << "\"/>\n";
    for (std::size_t k = 0; k < ser.x.size(); ++k) {
      if (k < ser.err.size() && ser.err[k] > 0.0) {
        o << "<line x1=\"" << sx(ser.x[k]) << "\" y1=\"" << sy(ser.y[k] - ser.err[k]) << "\" x2=\""
          << sx(ser.x[k]) << "\" y2=\"" << sy(ser.y[k] + ser.err[k]) << "\" stroke=\"" << color << "\"/>\n";
      }
      if (markers)
        o << "<circle cx=\"" << sx(ser.x[k]) << "\" cy=\"" << sy(ser.y[k]) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    }
    const double ly = top + 14 + 18.0 * static_cast<double>(s);
    o << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 32 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\"" << left + pw + 38 << "\" y=\"" << ly + 4
      << "\">" << escape(ser.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

/// Per-method curves of a summary column against epsilon.
inline std::vector<Series> series_vs_epsilon(const std::vector<SummaryRow>& rows, bool exploitability) {
  std::map<int, Series> by_method;
  for (const auto& r : rows) {
    auto& s = by_method[static_cast<int>(r.method)];
    s.label = to_string(r.method);
    const MeanStd& m = exploitability ? r.max_exploitability : r.social_welfare;
    s.x.push_back(r.epsilon);
    s.y.push_back(m.mean);
    s.err.push_back(m.std);
  }
  std::vector<Series> out;
  for (auto& [k, s] : by_method) out.push_back(std::move(s));
  return out;
}

/// Renders summary.csv and the plots for an output directory that holds
/// runs.jsonl. Training curves come from each run's history.jsonl.
inline std::vector<std::filesystem::path> render_report(const std::filesystem::path& dir) {
  const auto runs = read_runs_jsonl(dir / "runs.jsonl");
  if (runs.empty()) throw std::runtime_error("no runs recorded in '" + (dir / "runs.jsonl").string() + "'");
  const auto rows = summarize(runs);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text(dir / name, text);
    written.push_back(dir / name);
  };
  emit("summary.csv", summary_csv(rows));
  emit("social_welfare_vs_epsilon.svg", line_plot_svg("Social welfare vs epsilon", "epsilon (fraction of SW)",
                                                      "social welfare", series_vs_epsilon(rows, false)));
  emit("exploitability_vs_epsilon.svg", line_plot_svg("Max exploitability vs epsilon", "epsilon (fraction of SW)",
                                                      "max exploitability", series_vs_epsilon(rows, true)));
  std::vector<Series> curves;
  for (const auto& r : runs) {
    const auto hist_path = dir / r.run_dir / "history.jsonl";
    if (r.run_dir.empty() || !std::filesystem::exists(hist_path)) continue;
    Series s;
    s.label = to_string(r.method) + " e=" + report_detail::num(r.epsilon) + " s=" + std::to_string(r.seed);
    for (const auto& rec : read_history_jsonl(hist_path)) {
      s.x.push_back(static_cast<double>(rec.iter));
      s.y.push_back(rec.social_welfare);
    }
    curves.push_back(std::move(s));
  }
  emit("training_curves.svg", line_plot_svg("Training curves", "outer iteration", "social welfare", curves, false));
  return written;
}

}  // namespace ncb
