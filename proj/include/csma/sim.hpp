#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "csma/fugacity.hpp"
#include "csma/interference.hpp"
#include "csma/rng.hpp"

namespace csma::sim {

/// State of one discrete-time Glauber-dynamics CSMA chain. The schedule is
/// globally feasible after every step.
struct SimState {
  Schedule schedule;
  std::uint64_t slot = 0;
  Xoshiro256pp rng;

  SimState(int n_links, std::uint64_t seed)
      : schedule(n_links, 0), rng(seed) {}
};

/// One Glauber update: pick a link uniformly at random; if activating it
/// keeps the schedule feasible, set it active with probability
/// lambda_i / (1 + lambda_i), else clear it; if activation is infeasible,
/// clear it. Reversible w.r.t. p(x) ~ prod lambda_i^{x_i} over feasible x.
void glauber_step(SimState& state, const FugacityVector& lambda,
                  const Network& net, const InterferenceGraph& graph,
                  const std::vector<LocalFeasibleSet>& feasible_sets);

struct ServiceRateStats {
  std::vector<double> achieved;
  std::vector<std::uint64_t> active_slots;
  std::uint64_t burn_in = 0;
  std::uint64_t measured = 0;
};

/// Runs the chain from the all-zero schedule for `slots` steps and averages
/// link activity over the (burn_in, slots] window. Deterministic in the seed.
ServiceRateStats simulate(const Network& net, const InterferenceGraph& graph,
                          const std::vector<LocalFeasibleSet>& feasible_sets,
                          const FugacityVector& lambda, std::uint64_t slots,
                          std::uint64_t burn_in, std::uint64_t seed);

/// As simulate(), invoking observe(slot, schedule) after every step.
ServiceRateStats simulate_observe(
    const Network& net, const InterferenceGraph& graph,
    const std::vector<LocalFeasibleSet>& feasible_sets,
    const FugacityVector& lambda, std::uint64_t slots, std::uint64_t burn_in,
    std::uint64_t seed,
    const std::function<void(std::uint64_t, const Schedule&)>& observe);

/// Mean absolute deviation between target and achieved rates.
double bethe_error(const std::vector<double>& target,
                   const std::vector<double>& achieved);

struct TrajectoryPoint {
  std::uint64_t slot = 0;
  double running_error = 0.0;
};

/// Static-fugacity run that samples the running Bethe error (cumulative
/// time-averaged rates from slot 0 against the target) every sample_every
/// slots.
std::vector<TrajectoryPoint> simulate_error_trajectory(
    const Network& net, const InterferenceGraph& graph,
    const std::vector<LocalFeasibleSet>& feasible_sets,
    const FugacityVector& lambda, const std::vector<double>& target,
    std::uint64_t slots, std::uint64_t sample_every, std::uint64_t seed);

}  // namespace csma::sim
