#include <algorithm>
#include <cstdio>

#include "mdo/errors.hpp"
#include "mdo/harness.hpp"

namespace mdo {

ReportRow summarize_run(std::string label, std::span<const MetricsRow> rows) {
  if (rows.empty()) throw ParseError("metrics stream for '" + label + "' has no rows");
  const auto& last = rows.back();
  const auto a = last.means.as_array();
  ReportRow r;
  r.label = std::move(label);
  r.means = last.means;
  r.overall = last.means.mean();
  r.min_dim = last.min_dim;
  r.spread = *std::max_element(a.begin(), a.end()) - *std::min_element(a.begin(), a.end());
  r.mean_length = last.mean_length;
  r.coverage = last.coverage;
  return r;
}

std::vector<ReportRow> build_report(std::span<const std::filesystem::path> files) {
  if (files.empty()) throw ConfigError("report needs at least one metrics file");
  std::vector<ReportRow> rows;
  for (const auto& f : files) {
    std::string label = f.filename() == "metrics.csv" && f.has_parent_path()
                            ? f.parent_path().filename().string()
                            : f.stem().string();
    if (label.empty()) label = f.string();
    rows.push_back(summarize_run(std::move(label), read_metrics_csv(f)));
  }
  return rows;
}

std::string report_text(std::span<const ReportRow> rows) {
  std::size_t width = 8;
  for (const auto& r : rows) width = std::max(width, r.label.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %9s %11s %8s %9s %8s %8s %7s %7s %8s\n",
                static_cast<int>(width), "run", "coherence", "consistency", "fluency", "relevance",
                "overall", "min_dim", "spread", "length", "coverage");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s %9.4f %11.4f %8.4f %9.4f %8.4f %8.4f %7.4f %7.2f %8.4f\n",
                  static_cast<int>(width), r.label.c_str(), r.means.coherence, r.means.consistency,
                  r.means.fluency, r.means.relevance, r.overall, r.min_dim, r.spread,
                  r.mean_length, r.coverage);
    out += buf;
  }
  return out;
}

std::string report_csv(std::span<const ReportRow> rows) {
  std::string out =
      "run,coherence,consistency,fluency,relevance,overall,min_dim,spread,mean_length,coverage\n";
  char buf[64];
  for (const auto& r : rows) {
    out += r.label;
    for (const double x : {r.means.coherence, r.means.consistency, r.means.fluency, r.means.relevance,
                           r.overall, r.min_dim, r.spread, r.mean_length, r.coverage}) {
      std::snprintf(buf, sizeof buf, ",%.17g", x);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace mdo
