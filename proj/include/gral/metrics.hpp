#pragma once

#include <cmath>
#include <span>

#include "gral/error.hpp"

namespace gral {

inline double rmse(std::span<const double> errors) {
  if (errors.empty()) throw InputError("rmse of an empty error list");
  double sum = 0.0;
  for (double e : errors) sum += e * e;
  return std::sqrt(sum / static_cast<double>(errors.size()));
}

inline double mae(std::span<const double> errors) {
  if (errors.empty()) throw InputError("mae of an empty error list");
  double sum = 0.0;
  for (double e : errors) sum += std::abs(e);
  return sum / static_cast<double>(errors.size());
}

/// MAE as a percentage of the route length.
inline double normalized_mae(double mae_value, double route_length) {
  if (!(route_length > 0.0)) throw InputError("route length must be positive");
  return mae_value / route_length * 100.0;
}

}  // namespace gral
