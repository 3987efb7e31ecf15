#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace csma {

/// Concave per-link utility. Log is evaluated on (0,1] with U(0) treated as
/// the -infinity limit.
struct Utility {
  enum class Kind { Log, WeightedLog, Linear, Generic };
  Kind kind = Kind::Log;
  double weight = 1.0;                      // WeightedLog / Linear
  std::function<double(double)> value_fn;   // Generic
  std::function<double(double)> deriv_fn;   // Generic

  static Utility log() { return Utility{Kind::Log, 1.0, {}, {}}; }
  static Utility weighted_log(double w) {
    return Utility{Kind::WeightedLog, w, {}, {}};
  }
  static Utility linear(double w) { return Utility{Kind::Linear, w, {}, {}}; }
  static Utility generic(std::function<double(double)> value,
                         std::function<double(double)> deriv) {
    return Utility{Kind::Generic, 1.0, std::move(value), std::move(deriv)};
  }

  double value(double q) const {
    switch (kind) {
      case Kind::Log: return std::log(q);
      case Kind::WeightedLog: return weight * std::log(q);
      case Kind::Linear: return weight * q;
      case Kind::Generic: return value_fn(q);
    }
    return 0.0;
  }
  double deriv(double q) const {
    switch (kind) {
      case Kind::Log: return 1.0 / q;
      case Kind::WeightedLog: return weight / q;
      case Kind::Linear: return weight;
      case Kind::Generic: return deriv_fn(q);
    }
    return 0.0;
  }
};

using UtilitySpec = std::vector<Utility>;  // one entry per link

inline UtilitySpec log_utilities(int n) {
  return UtilitySpec(n, Utility::log());
}

}  // namespace csma
