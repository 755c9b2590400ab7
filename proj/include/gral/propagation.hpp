#pragma once

#include <optional>

namespace gral {

/// Linear range model: a transmitter of radius R is heard at distance d <= R
/// with strength R - d. The maximum strength R is only reached right at the
/// transmitter.
struct LinearPropagation {
  static std::optional<double> strength(double radius, double distance) {
    if (distance > radius) return std::nullopt;
    return radius - distance;
  }
  static double max_strength(double radius) { return radius; }
};

}  // namespace gral
