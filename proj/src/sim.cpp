#include "csma/sim.hpp"

#include <cassert>
#include <cmath>

namespace csma::sim {

namespace {

double activation_probability(double log_lambda) {
  // lambda / (1 + lambda) == sigmoid(ln lambda); exact 0 for the lambda = 0
  // limit (log_lambda = -inf).
  return 1.0 / (1.0 + std::exp(-log_lambda));
}

}  // namespace

void glauber_step(SimState& state, const FugacityVector& lambda,
                  const Network& net, const InterferenceGraph& graph,
                  const std::vector<LocalFeasibleSet>& feasible_sets) {
  const int n = net.size();
  const int i = static_cast<int>(state.rng.uniform_int(n));
  Schedule& x = state.schedule;

  // Would activating i keep the schedule feasible? Check i's own pattern and
  // every active neighbor whose SINR the activation could break.
  const std::uint32_t pattern_i =
      local_pattern(graph, x, i) | (1u << feasible_sets[i].owner_pos);
  bool can_activate = feasible_sets[i].contains(pattern_i);
  if (can_activate) {
    for (int k : graph.neighborhoods[i]) {
      if (k == i || !x[k]) continue;
      const std::uint32_t pattern_k =
          local_pattern(graph, x, k) | (1u << graph.pos_in(k, i));
      if (!feasible_sets[k].contains(pattern_k)) {
        can_activate = false;
        break;
      }
    }
  }

  if (can_activate) {
    x[i] = state.rng.uniform() < activation_probability(lambda.log_lambda[i])
               ? 1
               : 0;
  } else {
    x[i] = 0;
  }
  ++state.slot;
}

ServiceRateStats simulate(const Network& net, const InterferenceGraph& graph,
                          const std::vector<LocalFeasibleSet>& feasible_sets,
                          const FugacityVector& lambda, std::uint64_t slots,
                          std::uint64_t burn_in, std::uint64_t seed) {
  return simulate_observe(net, graph, feasible_sets, lambda, slots, burn_in,
                          seed, {});
}

ServiceRateStats simulate_observe(
    const Network& net, const InterferenceGraph& graph,
    const std::vector<LocalFeasibleSet>& feasible_sets,
    const FugacityVector& lambda, std::uint64_t slots, std::uint64_t burn_in,
    std::uint64_t seed,
    const std::function<void(std::uint64_t, const Schedule&)>& observe) {
  if (slots <= burn_in) {
    throw StructuralError("simulate requires slots > burn_in");
  }
  const int n = net.size();
  SimState state(n, seed);
  ServiceRateStats stats;
  stats.burn_in = burn_in;
  stats.measured = slots - burn_in;
  stats.active_slots.assign(n, 0);
  stats.achieved.assign(n, 0.0);

  for (std::uint64_t t = 1; t <= slots; ++t) {
    glauber_step(state, lambda, net, graph, feasible_sets);
    if (t > burn_in) {
      for (int i = 0; i < n; ++i) {
        stats.active_slots[i] += state.schedule[i];
      }
    }
    if (observe) observe(t, state.schedule);
  }
  for (int i = 0; i < n; ++i) {
    stats.achieved[i] = static_cast<double>(stats.active_slots[i]) /
                        static_cast<double>(stats.measured);
  }
  return stats;
}

double bethe_error(const std::vector<double>& target,
                   const std::vector<double>& achieved) {
  if (target.size() != achieved.size()) {
    throw StructuralError("bethe_error: length mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    total += std::abs(target[i] - achieved[i]);
  }
  return total / static_cast<double>(target.size());
}

std::vector<TrajectoryPoint> simulate_error_trajectory(
    const Network& net, const InterferenceGraph& graph,
    const std::vector<LocalFeasibleSet>& feasible_sets,
    const FugacityVector& lambda, const std::vector<double>& target,
    std::uint64_t slots, std::uint64_t sample_every, std::uint64_t seed) {
  const int n = net.size();
  if (sample_every == 0) sample_every = slots;
  SimState state(n, seed);
  std::vector<std::uint64_t> active(n, 0);
  std::vector<double> running(n, 0.0);
  std::vector<TrajectoryPoint> points;

  for (std::uint64_t t = 1; t <= slots; ++t) {
    glauber_step(state, lambda, net, graph, feasible_sets);
    for (int i = 0; i < n; ++i) active[i] += state.schedule[i];
    if (t % sample_every == 0 || t == slots) {
      for (int i = 0; i < n; ++i) {
        running[i] = static_cast<double>(active[i]) / static_cast<double>(t);
      }
      points.push_back({t, bethe_error(target, running)});
      if (t == slots) break;
    }
  }
  return points;
}

}  // namespace csma::sim
