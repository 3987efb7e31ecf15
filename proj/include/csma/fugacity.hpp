#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "csma/errors.hpp"

namespace csma {

/// Per-link target service rates, strictly inside (0, 1).
class ServiceRateVector {
 public:
  explicit ServiceRateVector(std::vector<double> rates) : rates_(std::move(rates)) {
    for (std::size_t i = 0; i < rates_.size(); ++i) {
      if (!(rates_[i] > 0.0) || !(rates_[i] < 1.0)) {
        throw DegenerateRateError("service rate s_" + std::to_string(i) +
                                  " = " + std::to_string(rates_[i]) +
                                  " outside (0,1)");
      }
    }
  }
  static ServiceRateVector uniform(int n, double s) {
    return ServiceRateVector(std::vector<double>(n, s));
  }

  double operator[](std::size_t i) const { return rates_[i]; }
  std::size_t size() const { return rates_.size(); }
  const std::vector<double>& values() const { return rates_; }

 private:
  std::vector<double> rates_;
};

/// Global fugacities, held in log domain. Entries are finite for every
/// fugacity a solver produces; -infinity is admitted only as the lambda = 0
/// limit used by the oracle and simulator edge cases.
struct FugacityVector {
  std::vector<double> log_lambda;

  static FugacityVector from_lambda(const std::vector<double>& lambda) {
    FugacityVector v;
    v.log_lambda.reserve(lambda.size());
    for (double l : lambda) {
      if (l < 0.0 || std::isnan(l)) {
        throw StructuralError("fugacity must be >= 0");
      }
      v.log_lambda.push_back(l == 0.0
                                 ? -std::numeric_limits<double>::infinity()
                                 : std::log(l));
    }
    return v;
  }
  static FugacityVector from_log(std::vector<double> log_values) {
    FugacityVector v;
    v.log_lambda = std::move(log_values);
    return v;
  }

  std::size_t size() const { return log_lambda.size(); }
  double lambda(std::size_t i) const { return std::exp(log_lambda[i]); }
};

enum class SolverMethod { DampedNewton, GradientAscentBacktracking };
enum class SolverInit { Zero, Random };

struct SolverSettings {
  double tolerance = 1e-10;       // on the gradient infinity-norm
  int max_iters = 200;
  SolverMethod method = SolverMethod::DampedNewton;
  double divergence_norm = 50.0;  // infinity-norm of r signalling infeasible targets
  SolverInit init = SolverInit::Zero;
  std::uint64_t init_seed = 0;    // used when init == Random, in [-1, 1]
};

}  // namespace csma
