#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "evidence/harness/experiment.hpp"

namespace evidence::harness {

/// Five-number summary plus mean and sample standard deviation of the finite values.
struct ColumnStats {
  std::size_t count = 0;
  std::size_t failed = 0;  // rows with status error
  double min = kNaN, q1 = kNaN, median = kNaN, q3 = kNaN, max = kNaN;
  double mean = kNaN, std = kNaN;

  double iqr() const { return q3 - q1; }
};

struct SummaryBlock {
  std::string estimator;
  std::string quantity;  // evidence | moment_1 | moment_2
  ColumnStats stats;
};

/// Linear-interpolation quantile on sorted data (the usual "type 7" definition).
inline double quantile_sorted(const std::vector<double>& v, double p) {
  if (v.empty()) return kNaN;
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline ColumnStats column_stats(std::vector<double> values, std::size_t failed = 0) {
  ColumnStats s;
  s.failed = failed;
  values.erase(std::remove_if(values.begin(), values.end(), [](double x) { return !std::isfinite(x); }),
               values.end());
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile_sorted(values, 0.25);
  s.median = quantile_sorted(values, 0.5);
  s.q3 = quantile_sorted(values, 0.75);
  double sum = 0.0;
  for (double x : values) sum += x;
  s.mean = sum / values.size();
  double ss = 0.0;
  for (double x : values) ss += (x - s.mean) * (x - s.mean);
  s.std = values.size() > 1 ? std::sqrt(ss / (values.size() - 1.0)) : 0.0;
  return s;
}

/// One block per (estimator, quantity), estimators in alphabetical order.
inline std::vector<SummaryBlock> summarize(const std::vector<ResultRow>& rows) {
  std::map<std::string, std::vector<const ResultRow*>> by_est;
  for (const auto& r : rows) by_est[r.estimator].push_back(&r);
  std::vector<SummaryBlock> out;
  for (const auto& [est, rs] : by_est) {
    std::size_t failed = 0;
    std::vector<double> z, m1, m2;
    for (const auto* r : rs) {
      if (!r->ok) {
        ++failed;
        continue;
      }
      z.push_back(r->evidence);
      m1.push_back(r->moment_1);
      m2.push_back(r->moment_2);
    }
    out.push_back({est, "evidence", column_stats(z, failed)});
    out.push_back({est, "moment_1", column_stats(m1, failed)});
    out.push_back({est, "moment_2", column_stats(m2, failed)});
  }
  return out;
}

inline const SummaryBlock& find_block(const std::vector<SummaryBlock>& blocks, const std::string& estimator,
                                      const std::string& quantity) {
  for (const auto& b : blocks)
    if (b.estimator == estimator && b.quantity == quantity) return b;
  throw UsageError("no summary for " + estimator + "/" + quantity);
}

inline void print_summary(std::ostream& os, const std::vector<SummaryBlock>& blocks) {
  os << "estimator,quantity,count,failed,min,q1,median,q3,max,mean,std\n";
  for (const auto& b : blocks) {
    const auto& s = b.stats;
    os << b.estimator << ',' << b.quantity << ',' << s.count << ',' << s.failed << ',' << format_double(s.min) << ','
       << format_double(s.q1) << ',' << format_double(s.median) << ',' << format_double(s.q3) << ','
       << format_double(s.max) << ',' << format_double(s.mean) << ',' << format_double(s.std) << '\n';
  }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double csv_number(const std::string& src, std::size_t line, const std::string& col, const std::string& v) {
  if (v == "nan" || v == "-nan") return kNaN;
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ParseError(src, line, "column '" + col + "': not a number: '" + v + "'");
  }
}

}  // namespace detail

/// Reads a results CSV as written by write_csv. Any deviation is reported with its line.
inline std::vector<ResultRow> read_results_csv(std::istream& is, const std::string& source = "results") {
  const auto& cols = csv_columns();
  std::string line;
  std::size_t n = 0;
  if (!std::getline(is, line)) throw ParseError(source, 1, "empty file, expected a header row");
  ++n;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (detail::split_csv_line(line) != cols) throw ParseError(source, n, "header does not match the results format");
  std::vector<ResultRow> rows;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != cols.size())
      throw ParseError(source, n,
                       "expected " + std::to_string(cols.size()) + " fields, found " + std::to_string(f.size()));
    ResultRow r;
    const double run = detail::csv_number(source, n, "run", f[0]);
    if (!(run >= 0.0) || run != std::floor(run)) throw ParseError(source, n, "column 'run': not a run index");
    r.run = static_cast<int>(run);
    r.model = f[1];
    r.estimator = f[2];
    if (r.estimator.empty()) throw ParseError(source, n, "empty estimator name");
    try {
      std::size_t used = 0;
      r.seed = std::stoull(f[3], &used);
      if (used != f[3].size()) throw std::invalid_argument(f[3]);
    } catch (const std::exception&) {
      throw ParseError(source, n, "column 'seed': not an unsigned integer: '" + f[3] + "'");
    }
    if (f[4] != "ok" && f[4] != "error") throw ParseError(source, n, "column 'status' must be ok or error");
    r.ok = f[4] == "ok";
    double* targets[] = {&r.log_evidence, &r.evidence,  &r.std_error,          &r.ess,
                         &r.n_draws,      &r.moment_1,  &r.moment_2,           &r.reference_evidence,
                         &r.reference_moment_1, &r.reference_moment_2};
    for (std::size_t k = 0; k < 10; ++k) *targets[k] = detail::csv_number(source, n, cols[5 + k], f[5 + k]);
    r.error = f[15];
    r.wall_seconds = detail::csv_number(source, n, "wall_seconds", f[16]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace evidence::harness
