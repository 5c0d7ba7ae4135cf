#pragma once

#include <algorithm>
#include <functional>
#include <span>
#include <vector>

#include "mue/error.hpp"

namespace mue {

/// Euclidean projection onto {f >= 0, sum(f) = total} by sorting and
/// thresholding. O(n log n).
inline std::vector<double> project_simplex(std::span<const double> values, double total) {
  if (values.empty()) throw ContractViolation("cannot project an empty vector");
  if (!(total >= 0.0)) throw ContractViolation("simplex total must be non-negative");
  std::vector<double> out(values.size(), 0.0);
  if (total == 0.0) return out;

  std::vector<double> u(values.begin(), values.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    double t = (cumulative - total) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  double sum = 0.0;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = std::max(values[i] - theta, 0.0);
    sum += out[i];
    if (out[i] > out[largest]) largest = i;
  }
  // Put the rounding residue on the largest coordinate so the sum is exact
  // to the last ulp or so.
  out[largest] = std::max(0.0, out[largest] + (total - sum));
  return out;
}

}  // namespace mue
