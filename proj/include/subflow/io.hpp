#pragma once

// Output files. CSV values use %.17g so that every double round-trips;
// every file opens with a comment carrying the configuration hash.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "subflow/errors.hpp"
#include "subflow/field.hpp"
#include "subflow/verify.hpp"

namespace subflow {

inline std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

/// Rows of named columns, one header comment line per entry of `comments`.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void comment(const std::string& line) { comments_.push_back(line); }

  void row(const std::vector<double>& values) {
    if (values.size() != columns_.size()) throw std::logic_error("csv row width mismatch");
    rows_.push_back(values);
  }

  std::string str() const {
    std::string s;
    for (const std::string& c : comments_) s += "# " + c + "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) s += (i ? "," : "") + columns_[i];
    s += "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) s += ",";
        s += fmt17(r[i]);
      }
      s += "\n";
    }
    return s;
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> comments_;
  std::vector<std::vector<double>> rows_;
};

/// One row per node: x (and y) then the named value columns.
inline CsvTable field_table(const std::vector<std::pair<std::string, const Field*>>& cols) {
  const Mesh& mesh = cols.front().second->mesh();
  std::vector<std::string> names{"x"};
  if (mesh.dim() == 2) names.push_back("y");
  for (const auto& c : cols) names.push_back(c.first);
  CsvTable t(names);
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    std::vector<double> r{mesh.x(k)};
    if (mesh.dim() == 2) r.push_back(mesh.y(k));
    for (const auto& c : cols) r.push_back((*c.second)[k]);
    t.row(r);
  }
  return t;
}

// ------------------------------------------------------------------ svg

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal line plot: frame, min/max tick labels, one polyline per series.
/// With loglog, non-positive samples are dropped.
inline std::string svg_line_plot(const std::vector<SvgSeries>& series, const std::string& title, bool loglog,
                                 const std::string& header_comment) {
  const double W = 640, H = 420, ml = 70, mr = 20, mt = 40, mb = 50;
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  auto tx = [&](double v) { return loglog ? std::log10(v) : v; };

  std::vector<std::vector<std::pair<double, double>>> pts(series.size());
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (std::size_t s = 0; s < series.size(); ++s) {
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      const double x = series[s].x[i], y = series[s].y[i];
      if (loglog && !(x > 0.0 && y > 0.0)) continue;
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      pts[s].emplace_back(tx(x), tx(y));
      x0 = std::min(x0, tx(x));
      x1 = std::max(x1, tx(x));
      y0 = std::min(y0, tx(y));
      y1 = std::max(y1, tx(y));
    }
  }
  if (!(x1 > x0)) {
    x0 = std::isfinite(x0) ? x0 - 1 : 0;
    x1 = x0 + 2;
  }
  if (!(y1 > y0)) {
    y0 = std::isfinite(y0) ? y0 - 1 : 0;
    y1 = y0 + 2;
  }
  auto px = [&](double v) { return ml + (v - x0) / (x1 - x0) * (W - ml - mr); };
  auto py = [&](double v) { return H - mb - (v - y0) / (y1 - y0) * (H - mt - mb); };
  auto label = [&](double v) {
    std::ostringstream os;
    os << std::setprecision(4) << (loglog ? std::pow(10.0, v) : v);
    return os.str();
  };

  std::ostringstream o;
  o << std::setprecision(6);
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<!-- " << header_comment << " -->\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << " " << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
    << title << (loglog ? " (log-log)" : "") << "</text>\n";
  o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\"" << H - mt - mb
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<text x=\"" << ml << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"start\">" << label(x0) << "</text>\n";
  o << "<text x=\"" << W - mr << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"end\">" << label(x1) << "</text>\n";
  o << "<text x=\"" << ml - 6 << "\" y=\"" << H - mb << "\" text-anchor=\"end\">" << label(y0) << "</text>\n";
  o << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 10 << "\" text-anchor=\"end\">" << label(y1) << "</text>\n";
  o << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">t</text>\n";
  o << "</g>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* col = colors[s % 4];
    o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pts[s].size(); ++i)
      o << (i ? " " : "") << px(pts[s][i].first) << "," << py(pts[s][i].second);
    o << "\"/>\n";
    o << "<text x=\"" << W - mr - 8 << "\" y=\"" << mt + 16 + 14 * s << "\" text-anchor=\"end\" fill=\"" << col
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[s].label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

// -------------------------------------------------------------- reports

inline nlohmann::json to_json(const Check& c) {
  nlohmann::json j;
  j["name"] = c.name;
  j["pass"] = c.pass();
  j["passed"] = c.passed;
  j["total"] = c.total;
  j["relation"] = c.upper ? "<=" : ">=";
  j["limit"] = c.limit;
  // JSON has no infinities
  j["worst"] = std::isfinite(c.worst) ? nlohmann::json(c.worst) : nlohmann::json(nullptr);
  j["margin"] = std::isfinite(c.margin()) ? nlohmann::json(c.margin()) : nlohmann::json(nullptr);
  if (!c.detail.empty()) j["detail"] = c.detail;
  return j;
}

inline nlohmann::json to_json(const SuiteReport& r) {
  nlohmann::json j;
  j["suite"] = r.suite;
  j["pass"] = r.pass();
  const double wm = r.worst_margin();
  j["worst_margin"] = std::isfinite(wm) ? nlohmann::json(wm) : nlohmann::json(nullptr);
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : r.params) params[k] = v;
  j["params"] = params;
  j["checks"] = nlohmann::json::array();
  for (const Check& c : r.checks) j["checks"].push_back(to_json(c));
  return j;
}

/// Aligned plain-text rendering, one line per check.
inline std::string format_report(const SuiteReport& r) {
  std::size_t w = 5;
  for (const Check& c : r.checks) w = std::max(w, c.name.size());
  std::ostringstream o;
  o << "suite " << r.suite << ":";
  for (const auto& [k, v] : r.params) o << " " << k << "=" << v;
  o << "\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "  %-*s  %-4s  %9s  %13s  %2s %-11s  %12s\n", static_cast<int>(w), "check", "",
                "samples", "worst", "", "limit", "margin");
  o << buf;
  for (const Check& c : r.checks) {
    const std::string counts = std::to_string(c.passed) + "/" + std::to_string(c.total);
    std::snprintf(buf, sizeof buf, "  %-*s  %-4s  %9s  %13.6g  %2s %-11.4g  %12.4g", static_cast<int>(w),
                  c.name.c_str(), c.pass() ? "PASS" : "FAIL", counts.c_str(), c.worst, c.upper ? "<=" : ">=",
                  c.limit, c.margin());
    o << buf;
    if (!c.detail.empty()) o << "  " << c.detail;
    o << "\n";
  }
  if (r.checks.empty()) o << "  (no checks)\n";
  const double wm = r.worst_margin();
  o << "  => " << (r.pass() ? "PASS" : "FAIL") << " (" << r.checks.size() << " checks";
  if (std::isfinite(wm)) o << ", worst margin " << std::setprecision(4) << wm;
  o << ")\n";
  return o.str();
}

}  // namespace subflow
