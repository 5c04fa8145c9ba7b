#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "evidence/errors.hpp"

namespace evidence {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(sum_i exp(v_i)), shifted by the maximum so that magnitudes up to ~1e300 are safe.
/// Returns -inf iff every entry is -inf.
inline double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw ContractViolation("log_sum_exp: empty input");
  const double max = *std::max_element(values.begin(), values.end());
  if (max == kNegInf) return kNegInf;
  if (std::isinf(max)) return max;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max);
  return max + std::log(sum);
}

/// Two-argument form used inside per-point density mixes.
inline double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kNegInf) return a;
  return a + std::log1p(std::exp(b - a));
}

/// log(exp(a) - exp(b)) for a >= b.
inline double log_sub_exp(double a, double b) {
  if (b > a) throw ContractViolation("log_sub_exp: b > a");
  if (b == kNegInf) return a;
  if (a == b) return kNegInf;
  return a + std::log(-std::expm1(b - a));
}

/// Kish effective sample size (sum w)^2 / sum w^2 from log-weights.
inline double effective_sample_size(std::span<const double> log_weights) {
  if (log_weights.empty()) throw ContractViolation("effective_sample_size: empty input");
  const double max = *std::max_element(log_weights.begin(), log_weights.end());
  if (max == kNegInf) throw DegenerateSample("effective_sample_size: all weights are zero");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double lw : log_weights) {
    const double w = std::exp(lw - max);
    sum += w;
    sum_sq += w * w;
  }
  return sum * sum / sum_sq;
}

}  // namespace evidence
