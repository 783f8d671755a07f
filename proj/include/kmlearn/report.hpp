#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kmlearn/errors.hpp"
#include "kmlearn/records.hpp"
#include "kmlearn/svg.hpp"

namespace kmlearn {

struct LambdaSummary {
  double lambda = 0.0;
  int count = 0;
  double prob_rank_le_dim = 0.0;  // exact fraction of records with rank <= dim(S*)
  double prob_rank_eq_dim = 0.0;
  double mean_subspace_dist = 0.0;
};

struct RankTrace {
  std::uint64_t seed = 0;
  std::vector<std::pair<double, int>> points;  // (lambda, rank), sorted by lambda
};

struct ReportSummary {
  std::string scenario;
  std::string kernel;
  int dim_s_star = 0;
  std::vector<LambdaSummary> per_lambda;  // sorted by lambda
  std::vector<RankTrace> traces;          // the 5 lowest seeds
};

/// Aggregate records of a single (scenario, kernel) group; probabilities are
/// exact fractions of the record multiset.
inline ReportSummary summarize(const std::vector<RunRecord>& records) {
  if (records.empty()) throw InvalidInput("summarize: no records");
  ReportSummary summary;
  summary.scenario = records.front().scenario;
  summary.kernel = records.front().kernel;
  summary.dim_s_star = records.front().dim_s_star;
  for (const RunRecord& r : records) {
    if (r.scenario != summary.scenario || r.kernel != summary.kernel) {
      throw InvalidInput("summarize: records span multiple (scenario, kernel) groups (" +
                         summary.scenario + "/" + summary.kernel + " vs " + r.scenario + "/" +
                         r.kernel + "); filter to one group first");
    }
  }

  std::map<double, std::vector<const RunRecord*>> by_lambda;
  for (const RunRecord& r : records) by_lambda[r.lambda].push_back(&r);
  for (const auto& [lambda, group] : by_lambda) {
    LambdaSummary s;
    s.lambda = lambda;
    s.count = static_cast<int>(group.size());
    int le = 0;
    int eq = 0;
    double dist = 0.0;
    for (const RunRecord* r : group) {
      if (r->rank <= r->dim_s_star) ++le;
      if (r->rank == r->dim_s_star) ++eq;
      dist += r->subspace_dist_fro;
    }
    s.prob_rank_le_dim = static_cast<double>(le) / static_cast<double>(group.size());
    s.prob_rank_eq_dim = static_cast<double>(eq) / static_cast<double>(group.size());
    s.mean_subspace_dist = dist / static_cast<double>(group.size());
    summary.per_lambda.push_back(s);
  }

  std::set<std::uint64_t> seeds;
  for (const RunRecord& r : records) seeds.insert(r.seed);
  std::size_t kept = 0;
  for (std::uint64_t seed : seeds) {
    if (kept == 5) break;
    RankTrace trace;
    trace.seed = seed;
    for (const RunRecord& r : records) {
      if (r.seed == seed) trace.points.emplace_back(r.lambda, r.rank);
    }
    std::sort(trace.points.begin(), trace.points.end());
    summary.traces.push_back(std::move(trace));
    ++kept;
  }
  return summary;
}

namespace detail {

inline const std::vector<std::string>& trace_palette() {
  static const std::vector<std::string> palette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                   "#ff7f0e"};
  return palette;
}

struct LogAxis {
  double x0, x1;        // pixel range
  double vmin, vmax;    // data range (positive)
  double at(double v) const {
    const double lo = std::log10(vmin);
    const double hi = std::log10(vmax);
    if (hi - lo < 1e-12) return 0.5 * (x0 + x1);
    return x0 + (std::log10(v) - lo) / (hi - lo) * (x1 - x0);
  }
};

struct LinearAxis {
  double y0, y1;      // pixel range (y0 = bottom)
  double vmin, vmax;  // data range
  double at(double v) const {
    if (vmax - vmin < 1e-12) return 0.5 * (y0 + y1);
    return y0 + (v - vmin) / (vmax - vmin) * (y1 - y0);
  }
};

inline void draw_frame(svg::Document& doc, double left, double top, double right, double bottom,
                       const std::string& title, const std::string& xlabel,
                       const std::string& ylabel) {
  doc.line(left, bottom, right, bottom, "#000000");
  doc.line(left, top, left, bottom, "#000000");
  doc.text((left + right) / 2, top - 12, title, 14, "middle");
  doc.text((left + right) / 2, bottom + 34, xlabel, 12, "middle");
  doc.text(left - 40, (top + bottom) / 2, ylabel, 12, "middle", -90);
}

inline void draw_lambda_ticks(svg::Document& doc, const LogAxis& xaxis,
                              const std::vector<double>& lambdas, double bottom) {
  for (double l : lambdas) {
    const double x = xaxis.at(l);
    doc.line(x, bottom, x, bottom + 4, "#000000");
    doc.text(x, bottom + 16, svg::fmt(l), 10, "middle");
  }
}

}  // namespace detail

/// Figure-style report: probability curves (prob_lowrank.svg), per-seed rank
/// step traces (rank_traces.svg) and summary.csv in out_dir.
inline ReportSummary render_report(const std::vector<RunRecord>& records,
                                   const std::filesystem::path& out_dir) {
  const ReportSummary summary = summarize(records);
  std::filesystem::create_directories(out_dir);

  std::vector<double> lambdas;
  for (const LambdaSummary& s : summary.per_lambda) lambdas.push_back(s.lambda);
  const double lmin = lambdas.front();
  const double lmax = lambdas.back();

  const double width = 560, height = 400;
  const double left = 64, right = width - 24, top = 40, bottom = height - 48;

  // Probability of low rank against lambda.
  {
    svg::Document doc(width, height);
    detail::LogAxis xaxis{left, right, lmin, lmax};
    detail::LinearAxis yaxis{bottom, top, 0.0, 1.0};
    for (double gy : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const double y = yaxis.at(gy);
      doc.line(left, y, right, y, "#dddddd", 1.0, "4,3");
      doc.text(left - 8, y + 4, svg::fmt(gy), 10, "end");
    }
    detail::draw_frame(doc, left, top, right, bottom,
                       "scenario " + summary.scenario + ", kernel " + summary.kernel, "lambda",
                       "empirical probability");
    detail::draw_lambda_ticks(doc, xaxis, lambdas, bottom);

    std::vector<std::pair<double, double>> le_points, eq_points;
    for (const LambdaSummary& s : summary.per_lambda) {
      le_points.emplace_back(xaxis.at(s.lambda), yaxis.at(s.prob_rank_le_dim));
      eq_points.emplace_back(xaxis.at(s.lambda), yaxis.at(s.prob_rank_eq_dim));
    }
    doc.polyline(le_points, "#1f77b4", 2.0);
    doc.polyline(eq_points, "#d62728", 2.0, "6,3");
    for (const auto& [x, y] : le_points) doc.circle(x, y, 3.0, "#1f77b4");
    for (const auto& [x, y] : eq_points) doc.circle(x, y, 3.0, "#d62728");
    const std::string d = std::to_string(summary.dim_s_star);
    doc.text(right - 6, top + 14, "P(rank <= " + d + ")", 11, "end");
    doc.circle(right - 102, top + 10, 3.0, "#1f77b4");
    doc.text(right - 6, top + 30, "P(rank = " + d + ")", 11, "end");
    doc.circle(right - 102, top + 26, 3.0, "#d62728");
    doc.write(out_dir / "prob_lowrank.svg");
  }

  // Rank step traces for the 5 lowest seeds.
  {
    svg::Document doc(width, height);
    int max_rank = summary.dim_s_star;
    for (const RankTrace& t : summary.traces) {
      for (const auto& [l, r] : t.points) max_rank = std::max(max_rank, r);
    }
    detail::LogAxis xaxis{left, right, lmin, lmax};
    detail::LinearAxis yaxis{bottom, top, 0.0, static_cast<double>(max_rank) + 1.0};
    const int stride = std::max(1, (max_rank + 1) / 10);
    for (int r = 0; r <= max_rank; r += stride) {
      const double y = yaxis.at(r);
      doc.line(left, y, right, y, "#eeeeee");
      doc.text(left - 8, y + 4, std::to_string(r), 10, "end");
    }
    detail::draw_frame(doc, left, top, right, bottom,
                       "rank of the solution across lambda (5 seeds)", "lambda", "rank");
    detail::draw_lambda_ticks(doc, xaxis, lambdas, bottom);

    const double dim_y = yaxis.at(summary.dim_s_star);
    doc.line(left, dim_y, right, dim_y, "#888888", 1.0, "2,4");
    doc.text(right - 6, dim_y - 4, "dim(S*) = " + std::to_string(summary.dim_s_star), 10, "end");

    const auto& palette = detail::trace_palette();
    for (std::size_t k = 0; k < summary.traces.size(); ++k) {
      const RankTrace& t = summary.traces[k];
      std::vector<std::pair<double, double>> pts;
      for (std::size_t i = 0; i < t.points.size(); ++i) {
        const double x = xaxis.at(t.points[i].first);
        const double y = yaxis.at(t.points[i].second);
        if (i > 0) pts.emplace_back(x, pts.back().second);  // horizontal step
        pts.emplace_back(x, y);
      }
      doc.polyline(pts, palette[k % palette.size()], 1.6);
      for (const auto& [l, r] : t.points) {
        doc.circle(xaxis.at(l), yaxis.at(r), 2.2, palette[k % palette.size()]);
      }
    }
    doc.write(out_dir / "rank_traces.svg");
  }

  {
    std::ofstream out(out_dir / "summary.csv");
    if (!out) throw std::runtime_error("render_report: cannot open summary.csv");
    out << "lambda,count,prob_rank_le_dim,prob_rank_eq_dim,mean_subspace_dist_fro\n";
    for (const LambdaSummary& s : summary.per_lambda) {
      out << format_double(s.lambda) << ',' << s.count << ',' << format_double(s.prob_rank_le_dim)
          << ',' << format_double(s.prob_rank_eq_dim) << ','
          << format_double(s.mean_subspace_dist) << '\n';
    }
  }
  return summary;
}

}  // namespace kmlearn
