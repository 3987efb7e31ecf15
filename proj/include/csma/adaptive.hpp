#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "csma/bethe.hpp"
#include "csma/sim.hpp"
#include "csma/utility.hpp"

namespace csma::adaptive {

/// A stochastic-gradient-descent schedule: step size alpha(j) and update
/// interval T(j) slots for iteration j >= 1.
struct SgdVariant {
  std::string name;
  std::function<double(std::uint64_t)> step_size;
  std::function<std::uint64_t(std::uint64_t)> update_interval;
};

/// SGD-1: alpha(j) = 1 / ((j+2) ln(j+2)), T(j) = j + 2.
SgdVariant sgd1();
/// SGD-2: alpha(j) = 1 / j, T(j) = ceil(exp(sqrt(j))).
SgdVariant sgd2();

enum class LambdaInit {
  One,      // ln lambda = 0 (lambda = 1)
  NearZero  // ln lambda = -20 (lambda ~ 0, the all-zero-fugacity convention)
};

struct SgdPoint {
  std::uint64_t slot = 0;
  double running_error = 0.0;
  std::vector<double> running_rates;  // cumulative time averages from slot 0
  std::vector<double> log_lambda;
};

/// Runs the CSMA chain under adaptively updated fugacities:
/// ln lambda_i += alpha(j) (s_i^target - shat_i(j)) after each window of
/// T(j) slots, where shat(j) is the window-averaged rate. The trajectory
/// samples the running error (cumulative averages from slot 0) every
/// sample_every slots.
std::vector<SgdPoint> sgd_run(const Network& net, const InterferenceGraph& graph,
                              const std::vector<LocalFeasibleSet>& feasible_sets,
                              const ServiceRateVector& target,
                              const SgdVariant& variant, std::uint64_t total_slots,
                              std::uint64_t seed, LambdaInit init = LambdaInit::One,
                              std::uint64_t sample_every = 0);

/// Dual state of the local utility-maximization algorithm: one local
/// fugacity beta_{jk} per ordered pair (j, k in N_j).
struct UmaxState {
  std::vector<std::vector<double>> betas;  // betas[j] aligned with N_j
  std::vector<double> rates;               // s_j(t)
  std::vector<std::vector<double>> marginals;  // m_{jk}(t), aligned with N_j
  int iteration = 0;
  double theta = 1.0;
  std::function<double(int)> step;  // alpha(t), t >= 1
};

UmaxState umax_init(const InterferenceGraph& graph, double theta,
                    std::function<double(int)> step_fn);

/// argmax_{q in [0,1]} theta U(q) - q c. Closed form for log / weighted-log /
/// linear utilities (linear ties resolve to 1), bisection otherwise.
double one_dim_utility_opt(const Utility& U, double theta, double c);

struct SubgradientReport {
  std::vector<std::vector<double>> g;  // g_{jk} = m_{jk} - s_k
  double norm = 0.0;
  int iteration = 0;
};

/// One synchronous round: every link computes s_j(t) from its incoming
/// betas, forms the local distribution over I_j, and updates
/// beta_{jk} += alpha(t) (s_k(t) - m_{jk}(t)).
SubgradientReport umax_step(UmaxState& state,
                            const std::vector<LocalFeasibleSet>& feasible_sets,
                            const UtilitySpec& utilities);

struct UmaxPoint {
  int iteration = 0;
  double subgradient_norm = 0.0;
  std::vector<double> rates;
};

struct UmaxResult {
  std::vector<UmaxPoint> trajectory;
  FugacityVector lambdas;           // from the final state
  std::vector<double> final_rates;
  std::vector<double> averaged_rates;  // ergodic mean of s(t)
  int iterations = 0;
};

UmaxResult umax_run(const Network& net, const InterferenceGraph& graph,
                    const std::vector<LocalFeasibleSet>& feasible_sets,
                    const UtilitySpec& utilities, double theta,
                    std::function<double(int)> step_fn, int max_iters,
                    double stop_norm);

/// Dual function D(beta) of the entropy-regularized utility problem
/// (desk-scale diagnostic; used to validate the subgradient).
double umax_dual_value(const UmaxState& state,
                       const std::vector<LocalFeasibleSet>& feasible_sets,
                       const UtilitySpec& utilities);

}  // namespace csma::adaptive
