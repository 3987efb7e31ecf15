#include "csma/adaptive.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace csma::adaptive {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

SgdVariant sgd1() {
  return SgdVariant{
      "sgd1",
      [](std::uint64_t j) {
        const double a = static_cast<double>(j) + 2.0;
        return 1.0 / (a * std::log(a));
      },
      [](std::uint64_t j) { return j + 2; }};
}

SgdVariant sgd2() {
  return SgdVariant{
      "sgd2", [](std::uint64_t j) { return 1.0 / static_cast<double>(j); },
      [](std::uint64_t j) {
        return static_cast<std::uint64_t>(
            std::ceil(std::exp(std::sqrt(static_cast<double>(j)))));
      }};
}

std::vector<SgdPoint> sgd_run(const Network& net, const InterferenceGraph& graph,
                              const std::vector<LocalFeasibleSet>& feasible_sets,
                              const ServiceRateVector& target,
                              const SgdVariant& variant, std::uint64_t total_slots,
                              std::uint64_t seed, LambdaInit init,
                              std::uint64_t sample_every) {
  const int n = net.size();
  if (total_slots < variant.update_interval(1)) {
    throw StructuralError("sgd_run: total_slots smaller than the first window");
  }
  if (sample_every == 0) sample_every = total_slots;

  std::vector<double> log_lambda(n, init == LambdaInit::One ? 0.0 : -20.0);
  FugacityVector lambda = FugacityVector::from_log(log_lambda);

  sim::SimState state(n, seed);
  std::vector<std::uint64_t> cumulative(n, 0), window(n, 0);
  std::vector<double> running(n, 0.0);
  std::vector<SgdPoint> points;

  std::uint64_t j = 1;
  std::uint64_t window_len = variant.update_interval(j);
  std::uint64_t window_slots = 0;

  for (std::uint64_t t = 1; t <= total_slots; ++t) {
    sim::glauber_step(state, lambda, net, graph, feasible_sets);
    ++window_slots;
    for (int i = 0; i < n; ++i) {
      cumulative[i] += state.schedule[i];
      window[i] += state.schedule[i];
    }
    if (window_slots == window_len) {
      const double alpha = variant.step_size(j);
      for (int i = 0; i < n; ++i) {
        const double observed = static_cast<double>(window[i]) /
                                static_cast<double>(window_len);
        lambda.log_lambda[i] += alpha * (target[i] - observed);
      }
      ++j;
      window_len = variant.update_interval(j);
      window_slots = 0;
      std::fill(window.begin(), window.end(), 0);
    }
    if (t % sample_every == 0 || t == total_slots) {
      for (int i = 0; i < n; ++i) {
        running[i] = static_cast<double>(cumulative[i]) / static_cast<double>(t);
      }
      points.push_back({t, sim::bethe_error(target.values(), running), running,
                        lambda.log_lambda});
      if (t == total_slots) break;
    }
  }
  return points;
}

UmaxState umax_init(const InterferenceGraph& graph, double theta,
                    std::function<double(int)> step_fn) {
  if (!(theta > 0.0)) throw StructuralError("umax requires theta > 0");
  UmaxState state;
  state.theta = theta;
  state.step = step_fn ? std::move(step_fn)
                       : [](int t) { return 1.0 / static_cast<double>(t); };
  state.iteration = 0;
  state.betas.resize(graph.size());
  state.marginals.resize(graph.size());
  state.rates.assign(graph.size(), 0.0);
  for (int j = 0; j < graph.size(); ++j) {
    state.betas[j].assign(graph.neighborhoods[j].size(), 0.0);
    state.marginals[j].assign(graph.neighborhoods[j].size(), 0.0);
  }
  return state;
}

double one_dim_utility_opt(const Utility& U, double theta, double c) {
  switch (U.kind) {
    case Utility::Kind::Log:
      return c <= 0.0 ? 1.0 : std::min(1.0, theta / c);
    case Utility::Kind::WeightedLog:
      return c <= 0.0 ? 1.0 : std::min(1.0, theta * U.weight / c);
    case Utility::Kind::Linear:
      return theta * U.weight >= c ? 1.0 : 0.0;
    case Utility::Kind::Generic: {
      auto slope = [&](double q) { return theta * U.deriv(q) - c; };
      if (slope(1.0) >= 0.0) return 1.0;
      double lo = 1e-15;
      if (slope(lo) <= 0.0) return 0.0;
      double hi = 1.0;
      while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (slope(mid) > 0.0 ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
  }
  return 0.0;
}

namespace {

// Marginals m_{jk} of the exponential-family distribution over I_j defined
// by the beta row, plus its log partition for the dual value.
void local_marginals(const LocalFeasibleSet& I, const std::vector<double>& beta,
                     std::vector<double>& marginals, double* log_z_out) {
  const int m = static_cast<int>(I.neighbors.size());
  auto score = [&](std::uint32_t y) {
    double v = 0.0;
    while (y) {
      v += beta[std::countr_zero(y)];
      y &= y - 1;
    }
    return v;
  };
  double max_score = -kInf;
  for (std::uint32_t y : I.patterns) max_score = std::max(max_score, score(y));
  double z = 0.0;
  marginals.assign(m, 0.0);
  for (std::uint32_t y : I.patterns) {
    const double w = std::exp(score(y) - max_score);
    z += w;
    std::uint32_t rest = y;
    while (rest) {
      marginals[std::countr_zero(rest)] += w;
      rest &= rest - 1;
    }
  }
  for (double& v : marginals) v /= z;
  if (log_z_out) *log_z_out = max_score + std::log(z);
}

}  // namespace

SubgradientReport umax_step(UmaxState& state,
                            const std::vector<LocalFeasibleSet>& feasible_sets,
                            const UtilitySpec& utilities) {
  const int n = static_cast<int>(state.betas.size());
  const int t_next = state.iteration + 1;
  const double alpha = state.step(t_next);

  // s_j(t) from the incoming betas (column j)
  for (int j = 0; j < n; ++j) {
    const auto& I = feasible_sets[j];
    double c = 0.0;
    for (std::size_t p = 0; p < I.neighbors.size(); ++p) {
      const int k = I.neighbors[p];
      const auto& nk = feasible_sets[k].neighbors;
      const auto it = std::lower_bound(nk.begin(), nk.end(), j);
      c += state.betas[k][it - nk.begin()];
    }
    state.rates[j] = one_dim_utility_opt(utilities[j], state.theta, c);
  }

  // m_{jk}(t) from the outgoing betas (row j)
  for (int j = 0; j < n; ++j) {
    local_marginals(feasible_sets[j], state.betas[j], state.marginals[j],
                    nullptr);
  }

  SubgradientReport report;
  report.iteration = t_next;
  report.g.resize(n);
  double norm_sq = 0.0;
  for (int j = 0; j < n; ++j) {
    const auto& I = feasible_sets[j];
    report.g[j].resize(I.neighbors.size());
    for (std::size_t p = 0; p < I.neighbors.size(); ++p) {
      const int k = I.neighbors[p];
      const double g = state.marginals[j][p] - state.rates[k];
      report.g[j][p] = g;
      norm_sq += g * g;
      state.betas[j][p] -= alpha * g;  // == beta + alpha (s_k - m_jk)
    }
  }
  report.norm = std::sqrt(norm_sq);
  state.iteration = t_next;
  return report;
}

UmaxResult umax_run(const Network& net, const InterferenceGraph& graph,
                    const std::vector<LocalFeasibleSet>& feasible_sets,
                    const UtilitySpec& utilities, double theta,
                    std::function<double(int)> step_fn, int max_iters,
                    double stop_norm) {
  if (max_iters < 1) throw StructuralError("umax_run requires max_iters >= 1");
  UmaxState state = umax_init(graph, theta, std::move(step_fn));
  UmaxResult result;
  std::vector<double> rate_sum(net.size(), 0.0);

  for (int it = 0; it < max_iters; ++it) {
    const SubgradientReport report = umax_step(state, feasible_sets, utilities);
    for (int i = 0; i < net.size(); ++i) rate_sum[i] += state.rates[i];
    result.trajectory.push_back({report.iteration, report.norm, state.rates});
    if (report.norm <= stop_norm) break;
  }
  result.iterations = state.iteration;
  result.final_rates = state.rates;
  result.averaged_rates.resize(net.size());
  for (int i = 0; i < net.size(); ++i) {
    result.averaged_rates[i] = rate_sum[i] / state.iteration;
  }

  // Final global fugacities from the converged local fugacities. Rates are
  // clamped away from {0,1} so the combination stays defined on truncated
  // runs whose one-dimensional optimizer still sits at a boundary.
  std::vector<double> log_lambda(net.size());
  for (int i = 0; i < net.size(); ++i) {
    const double s_i = std::clamp(state.rates[i], 1e-9, 1.0 - 1e-9);
    std::map<int, double> incoming;
    for (int k : graph.neighborhoods[i]) {
      const auto& nk = feasible_sets[k].neighbors;
      const auto it = std::lower_bound(nk.begin(), nk.end(), i);
      incoming[k] = state.betas[k][it - nk.begin()];
    }
    log_lambda[i] = bethe::combine_log_global_fugacity(
        s_i, graph.degrees[i], graph.neighborhoods[i], incoming);
  }
  result.lambdas = FugacityVector::from_log(std::move(log_lambda));
  return result;
}

double umax_dual_value(const UmaxState& state,
                       const std::vector<LocalFeasibleSet>& feasible_sets,
                       const UtilitySpec& utilities) {
  const int n = static_cast<int>(state.betas.size());
  double total = 0.0;
  std::vector<double> scratch;
  for (int j = 0; j < n; ++j) {
    const auto& I = feasible_sets[j];
    double c = 0.0;
    for (std::size_t p = 0; p < I.neighbors.size(); ++p) {
      const int k = I.neighbors[p];
      const auto& nk = feasible_sets[k].neighbors;
      const auto it = std::lower_bound(nk.begin(), nk.end(), j);
      c += state.betas[k][it - nk.begin()];
    }
    const double y = one_dim_utility_opt(utilities[j], state.theta, c);
    total += state.theta * utilities[j].value(y) - y * c;
    double log_z = 0.0;
    local_marginals(I, state.betas[j], scratch, &log_z);
    total += log_z;
  }
  return total;
}

}  // namespace csma::adaptive
