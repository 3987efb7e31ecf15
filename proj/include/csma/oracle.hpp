#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csma/fugacity.hpp"
#include "csma/interference.hpp"
#include "csma/utility.hpp"

namespace csma::oracle {

constexpr int kScheduleEnumerationCap = 24;

/// All globally feasible schedules, as bitmasks over link indices, sorted
/// ascending. Subset-closed: deactivating any link keeps a member feasible.
struct FeasibleScheduleSet {
  int n_links = 0;
  std::vector<std::uint32_t> masks;

  std::size_t count() const { return masks.size(); }
};

FeasibleScheduleSet enumerate_feasible_schedules(const Network& net,
                                                 const InterferenceGraph& graph);

/// Hex bitmask list (one mask per line, lowercase, 0x-prefixed) for golden
/// comparisons.
std::string to_hex_list(const FeasibleScheduleSet& schedules);

/// ln Z = ln sum_x prod_i lambda_i^{x_i}, log-sum-exp stable.
double exact_log_partition(const FugacityVector& lambda,
                           const FeasibleScheduleSet& schedules);

/// s_i = sum_{x : x_i = 1} p(x) under p(x) = prod lambda^{x_i} / Z.
/// May return boundary values (0 when lambda_i = 0).
std::vector<double> exact_marginals(const FugacityVector& lambda,
                                    const FeasibleScheduleSet& schedules);

/// Inverts s = E_lambda[x] by Newton ascent of the concave dual
/// sum s_i r_i - ln Z(e^r). Throws TargetOutsideCapacityError on divergence.
FugacityVector exact_fugacities(const std::vector<double>& s,
                                const FeasibleScheduleSet& schedules,
                                const SolverSettings& settings = {});

enum class Membership { Interior, Boundary, Outside };

struct CapacityReport {
  Membership where = Membership::Interior;
  /// Outside: distance to the hull. Interior: best margin found along the
  /// separating directions searched. Boundary: ~0.
  double margin = 0.0;
};

std::string to_string(Membership m);

CapacityReport capacity_membership(const std::vector<double>& s,
                                   const FeasibleScheduleSet& schedules);

struct BruteforceSettings {
  int max_iters = 200000;
  double tol = 1e-10;  // on the Frank-Wolfe duality gap
};

struct BruteforceOptimum {
  std::vector<double> rates;
  double value = 0.0;
};

/// max sum_j U_j(y_j) over y in conv(schedules), via exponentiated-gradient
/// ascent over schedule mixture weights. Intended for N <= 8.
BruteforceOptimum utility_optimum_bruteforce(const FeasibleScheduleSet& schedules,
                                             const UtilitySpec& utilities,
                                             const BruteforceSettings& settings = {});

}  // namespace csma::oracle
