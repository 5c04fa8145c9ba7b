#pragma once

// Reference constants kept in a plain key = value text file, one block per model:
//
//   banana.params     = beta=0.03 sigma1_sq=100 lower=-40 upper=40
//   banana.evidence   = 1.5622569299...e-04
//   banana.method     = grid
//   banana.resolution = 1000x1000
//   banana.seed       = none
//   banana.check      = 1.56...e-04      (independent quadrature value)
//   banana.moment_1   = ...
//   banana.moment_2   = ...
//
// A stored block is used only when its params line matches the configured model exactly;
// otherwise the reference is recomputed.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "evidence/benchmarks.hpp"
#include "evidence/errors.hpp"

namespace evidence::harness {

inline constexpr int kDefaultGridCells = 1000;

struct ReferenceRecord {
  std::string model;
  std::string params;
  double evidence = 0.0;
  double moment_1 = 0.0;
  double moment_2 = 0.0;
  std::string method;
  std::string resolution;
  std::string seed = "none";  // all current references are deterministic
  double check = 0.0;         // value from the second, independent route
};

inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Shortest representation that reads back to the same double.
inline std::string format_shortest(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string toy_params(const GaussianToyData& d) {
  return "n=" + std::to_string(d.n) + " xbar=" + format_shortest(d.xbar) + " s2=" + format_shortest(d.s2);
}

inline std::string banana_params(const BananaParams& b) {
  return "beta=" + format_shortest(b.beta) + " sigma1_sq=" + format_shortest(b.sigma1_sq) +
         " lower=" + format_shortest(b.lower) + " upper=" + format_shortest(b.upper);
}

/// Analytic evidence checked against quadrature; the posterior is normal-inverse-gamma, so
/// E[theta] = xbar and E[sigma^2] = n s2 / (n - 3).
inline ReferenceRecord compute_toy_reference(const GaussianToyData& d) {
  const auto ref = gaussian_toy_reference_evidence(d);
  ReferenceRecord r;
  r.model = "gaussian-toy";
  r.params = toy_params(d);
  r.evidence = ref.value;
  r.method = ref.method;
  r.resolution = "exact";
  r.check = gaussian_toy_quadrature_evidence(d);
  r.moment_1 = d.xbar;
  r.moment_2 = d.n > 3 ? d.n * d.s2 / (d.n - 3.0) : std::numeric_limits<double>::quiet_NaN();
  return r;
}

inline ReferenceRecord compute_banana_reference(const BananaParams& b, int cells = kDefaultGridCells) {
  const auto ref = banana_reference_evidence(b, cells);
  const auto [m1, m2] = banana_reference_moments(b, cells);
  ReferenceRecord r;
  r.model = "banana";
  r.params = banana_params(b);
  r.evidence = ref.value;
  r.method = ref.method;
  r.resolution = ref.resolution;
  r.check = banana_quadrature_evidence(b);
  r.moment_1 = m1;
  r.moment_2 = m2;
  return r;
}

using ReferenceFile = std::map<std::string, ReferenceRecord>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double parse_double_field(const std::string& src, std::size_t line, const std::string& v) {
  double x = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    if (v == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw ParseError(src, line, "not a number: '" + v + "'");
  }
  return x;
}

}  // namespace detail

inline ReferenceFile read_references(std::istream& is, const std::string& source = "references") {
  ReferenceFile out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const std::string s = detail::trim(raw);
    if (s.empty() || s[0] == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError(source, line, "expected 'model.key = value'");
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string value = detail::trim(s.substr(eq + 1));
    const auto dot = key.find('.');
    if (dot == std::string::npos) throw ParseError(source, line, "key '" + key + "' has no model prefix");
    const std::string model = key.substr(0, dot), field = key.substr(dot + 1);
    auto& r = out[model];
    r.model = model;
    if (field == "params")
      r.params = value;
    else if (field == "evidence")
      r.evidence = detail::parse_double_field(source, line, value);
    else if (field == "method")
      r.method = value;
    else if (field == "resolution")
      r.resolution = value;
    else if (field == "seed")
      r.seed = value;
    else if (field == "check")
      r.check = detail::parse_double_field(source, line, value);
    else if (field == "moment_1")
      r.moment_1 = detail::parse_double_field(source, line, value);
    else if (field == "moment_2")
      r.moment_2 = detail::parse_double_field(source, line, value);
    else
      throw ParseError(source, line, "unknown field '" + field + "'");
  }
  return out;
}

inline ReferenceFile load_references(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return {};
  return read_references(in, path.string());
}

inline void write_references(std::ostream& os, const ReferenceFile& refs) {
  os << "# Reference evidence and posterior means per benchmark model.\n"
        "# Regenerate with: evidence references regenerate <model>\n";
  for (const auto& [name, r] : refs) {
    os << '\n';
    os << name << ".params = " << r.params << '\n';
    os << name << ".evidence = " << format_double(r.evidence) << '\n';
    os << name << ".method = " << r.method << '\n';
    os << name << ".resolution = " << r.resolution << '\n';
    os << name << ".seed = " << r.seed << '\n';
    os << name << ".check = " << format_double(r.check) << '\n';
    os << name << ".moment_1 = " << format_double(r.moment_1) << '\n';
    os << name << ".moment_2 = " << format_double(r.moment_2) << '\n';
  }
}

/// Recomputes one model's block at the default parameters and rewrites the file, keeping
/// the other blocks. A grid/quadrature disagreement throws before anything is written.
inline ReferenceRecord regenerate_reference(const std::string& model, const std::filesystem::path& path,
                                            int cells = kDefaultGridCells) {
  ReferenceRecord rec;
  if (model == "gaussian-toy")
    rec = compute_toy_reference(GaussianToyData{});
  else if (model == "banana")
    rec = compute_banana_reference(BananaParams{}, cells);
  else
    throw UsageError("unknown model '" + model + "'");
  auto refs = load_references(path);
  refs[model] = rec;
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw UsageError("cannot write '" + tmp + "'");
    write_references(out, refs);
  }
  std::filesystem::rename(tmp, path);
  return rec;
}

}  // namespace evidence::harness
