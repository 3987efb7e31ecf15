#include <doctest.h>

#include <cmath>

#include "csma/adaptive.hpp"
#include "csma/network.hpp"
#include "csma/oracle.hpp"
#include "csma/rng.hpp"

using namespace csma;
using namespace csma::adaptive;

namespace {

struct Instance {
  Network net;
  InterferenceGraph graph;
  std::vector<LocalFeasibleSet> sets;
};

Instance conflict_instance(const std::vector<std::vector<std::uint8_t>>& adj) {
  Instance inst;
  inst.net = build_conflict_graph_network(adj);
  inst.graph = build_interference_graph(inst.net);
  inst.sets = enumerate_all_local_feasible(inst.net, inst.graph);
  return inst;
}

// Fixed point of the single-link umax recursion with log utility and
// theta = 1: solve 1/beta = sigmoid(beta) by bisection.
double single_link_fixed_point_beta() {
  auto h = [](double b) { return 1.0 / b - 1.0 / (1.0 + std::exp(-b)); };
  double lo = 0.5, hi = 3.0;
  REQUIRE(h(lo) > 0.0);
  REQUIRE(h(hi) < 0.0);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("SGD schedules match their definitions") {
  const auto v1 = sgd1();
  CHECK(v1.update_interval(1) == 3);
  CHECK(v1.update_interval(10) == 12);
  CHECK(v1.step_size(1) == doctest::Approx(1.0 / (3.0 * std::log(3.0))).epsilon(1e-14));

  const auto v2 = sgd2();
  CHECK(v2.update_interval(1) == 3);   // ceil(e^1)
  CHECK(v2.update_interval(4) == 8);   // ceil(e^2)
  CHECK(v2.step_size(4) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("single-link SGD converges toward the exact fugacity") {
  const auto inst = conflict_instance(empty_adjacency(1));
  const auto target = ServiceRateVector({0.4});
  const auto traj = sgd_run(inst.net, inst.graph, inst.sets, target, sgd1(),
                            100000, 9, LambdaInit::One, 1000);
  REQUIRE(traj.size() >= 2);
  // error at 10^5 slots is below the error at 10^3 slots
  const double early = traj.front().running_error;
  const double late = traj.back().running_error;
  CHECK(traj.front().slot == 1000);
  CHECK(late < early);
  // ln lambda heads toward ln(2/3)
  CHECK(traj.back().log_lambda[0] ==
        doctest::Approx(std::log(2.0 / 3.0)).epsilon(0.25));
}

TEST_CASE("zero step size keeps the fugacity constant") {
  const auto inst = conflict_instance(empty_adjacency(1));
  SgdVariant frozen{"frozen", [](std::uint64_t) { return 0.0; },
                    [](std::uint64_t) { return std::uint64_t{10}; }};
  const auto traj = sgd_run(inst.net, inst.graph, inst.sets,
                            ServiceRateVector({0.3}), frozen, 5000, 4,
                            LambdaInit::One, 500);
  for (const auto& p : traj) CHECK(p.log_lambda[0] == 0.0);
}

TEST_CASE("SGD trajectories are seed-deterministic") {
  const auto inst = conflict_instance(path_adjacency(3));
  const auto target = ServiceRateVector::uniform(3, 0.2);
  const auto a = sgd_run(inst.net, inst.graph, inst.sets, target, sgd2(),
                         20000, 5, LambdaInit::One, 2000);
  const auto b = sgd_run(inst.net, inst.graph, inst.sets, target, sgd2(),
                         20000, 5, LambdaInit::One, 2000);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].running_error == b[i].running_error);
    CHECK(a[i].log_lambda == b[i].log_lambda);
  }
}

TEST_CASE("umax_init") {
  const auto inst = conflict_instance(path_adjacency(3));
  const auto state = umax_init(inst.graph, 1.0, nullptr);
  CHECK(state.iteration == 0);
  std::size_t pairs = 0;
  for (const auto& row : state.betas) {
    pairs += row.size();
    for (double b : row) CHECK(b == 0.0);
  }
  CHECK(pairs == 7);  // |N_0| + |N_1| + |N_2| = 2 + 3 + 2
  CHECK_THROWS_AS(umax_init(inst.graph, 0.0, nullptr), StructuralError);
  CHECK_THROWS_AS(umax_init(inst.graph, -1.0, nullptr), StructuralError);
}

TEST_CASE("one-dimensional utility optimization") {
  CHECK(one_dim_utility_opt(Utility::log(), 1.0, 4.0) == doctest::Approx(0.25));
  CHECK(one_dim_utility_opt(Utility::log(), 1.0, 0.5) == 1.0);
  CHECK(one_dim_utility_opt(Utility::log(), 1.0, -2.0) == 1.0);
  CHECK(one_dim_utility_opt(Utility::linear(1.0), 2.0, 1.0) == 1.0);
  CHECK(one_dim_utility_opt(Utility::linear(1.0), 1.0, 2.0) == 0.0);
  CHECK(one_dim_utility_opt(Utility::linear(1.0), 1.0, 1.0) == 1.0);  // tie -> 1
  CHECK(one_dim_utility_opt(Utility::weighted_log(2.0), 1.0, 4.0) ==
        doctest::Approx(0.5));
  // generic bisection agrees with the log closed form
  const Utility generic = Utility::generic(
      [](double q) { return std::log(q); }, [](double q) { return 1.0 / q; });
  CHECK(one_dim_utility_opt(generic, 1.0, 4.0) == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(one_dim_utility_opt(generic, 1.0, 0.5) == 1.0);
}

TEST_CASE("umax_step at the all-zero state") {
  const auto inst = conflict_instance(path_adjacency(3));
  auto state = umax_init(inst.graph, 1.0, [](int) { return 0.0; });
  const auto report = umax_step(state, inst.sets, log_utilities(3));
  // zero step: betas unchanged
  for (const auto& row : state.betas) {
    for (double b : row) CHECK(b == 0.0);
  }
  // under the uniform distribution the marginal of bit k is the member fraction
  // I_1 = {000, 001, 010, 100, 101}: link 0 active in 2 of 5
  CHECK(state.marginals[1][0] == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(state.marginals[1][1] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(state.marginals[1][2] == doctest::Approx(0.4).epsilon(1e-14));
  // with c = 0 the log-utility maximizer sits at 1
  for (double r : state.rates) CHECK(r == 1.0);
  CHECK(report.iteration == 1);
  CHECK(report.norm > 0.0);
}

TEST_CASE("umax converges to the single-link fixed point") {
  const auto inst = conflict_instance(empty_adjacency(1));
  const double beta_star = single_link_fixed_point_beta();
  const double s_star = 1.0 / beta_star;

  auto state = umax_init(inst.graph, 1.0, nullptr);  // alpha(t) = 1/t
  for (int t = 0; t < 4000; ++t) umax_step(state, inst.sets, log_utilities(1));
  CHECK(state.betas[0][0] == doctest::Approx(beta_star).epsilon(0.02));
  CHECK(state.rates[0] == doctest::Approx(s_star).epsilon(0.02));
}

TEST_CASE("umax marginals stay strictly inside (0,1)") {
  const auto inst = conflict_instance(cycle_adjacency(4));
  auto state = umax_init(inst.graph, 5.0, nullptr);
  for (int t = 0; t < 200; ++t) {
    umax_step(state, inst.sets, log_utilities(4));
    for (const auto& row : state.marginals) {
      for (double m : row) {
        CHECK(m > 0.0);
        CHECK(m < 1.0);
      }
    }
  }
}

TEST_CASE("subgradient validity: D(b') >= D(b) + g . (b' - b)") {
  const auto inst = conflict_instance(path_adjacency(3));
  const auto utilities = log_utilities(3);
  Xoshiro256pp rng(5150);

  for (int trial = 0; trial < 40; ++trial) {
    auto a = umax_init(inst.graph, 2.0, nullptr);
    auto b = umax_init(inst.graph, 2.0, nullptr);
    for (auto& row : a.betas) {
      for (double& v : row) v = 4.0 * rng.uniform() - 2.0;
    }
    for (auto& row : b.betas) {
      for (double& v : row) v = 4.0 * rng.uniform() - 2.0;
    }
    // g at a, from a zero-step probe
    auto probe = a;
    probe.step = [](int) { return 0.0; };
    const auto report = umax_step(probe, inst.sets, utilities);

    const double da = umax_dual_value(a, inst.sets, utilities);
    const double db = umax_dual_value(b, inst.sets, utilities);
    double inner = 0.0;
    for (std::size_t j = 0; j < report.g.size(); ++j) {
      for (std::size_t p = 0; p < report.g[j].size(); ++p) {
        inner += report.g[j][p] * (b.betas[j][p] - a.betas[j][p]);
      }
    }
    CHECK(db >= da + inner - 1e-9);
  }
}

TEST_CASE("umax_run reaches near-fair rates on the 2-clique at large theta") {
  const auto inst = conflict_instance(complete_adjacency(2));
  const auto result = umax_run(inst.net, inst.graph, inst.sets,
                               log_utilities(2), 100.0,
                               [](int) { return 1.0; }, 3000, 1e-4);
  CHECK(result.final_rates[0] == doctest::Approx(0.5).epsilon(0.04));
  CHECK(result.final_rates[1] == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("one-link umax with a constant step converges within 50 iterations") {
  const auto inst = conflict_instance(empty_adjacency(1));
  const double beta_star = single_link_fixed_point_beta();
  const auto result = adaptive::umax_run(inst.net, inst.graph, inst.sets,
                                         log_utilities(1), 1.0,
                                         [](int) { return 1.0; }, 50, 1e-6);
  CHECK(result.iterations < 50);
  CHECK(result.trajectory.back().subgradient_norm <= 1e-6);
  CHECK(result.final_rates[0] ==
        doctest::Approx(1.0 / beta_star).epsilon(1e-4));
}

TEST_CASE("umax_run trajectory basics") {
  const auto inst = conflict_instance(path_adjacency(3));
  SUBCASE("max_iters = 1 gives exactly one row") {
    const auto result = umax_run(inst.net, inst.graph, inst.sets,
                                 log_utilities(3), 1.0, nullptr, 1, 0.0);
    CHECK(result.trajectory.size() == 1);
    CHECK(result.iterations == 1);
    CHECK(result.lambdas.size() == 3);
  }
  SUBCASE("subgradient norm decreases overall") {
    const auto result = umax_run(inst.net, inst.graph, inst.sets,
                                 log_utilities(3), 1.0, nullptr, 300, 0.0);
    CHECK(result.trajectory.back().subgradient_norm <
          result.trajectory.front().subgradient_norm);
  }
}

TEST_CASE("utility optimality-gap bound holds at convergence") {
  Xoshiro256pp rng(31415);
  for (int trial = 0; trial < 4; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(4));  // up to 5
    auto adj = empty_adjacency(n);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (rng.uniform() < 0.5) adj[i][j] = adj[j][i] = 1;
      }
    }
    const auto inst = conflict_instance(adj);
    const auto utilities = log_utilities(n);
    const auto schedules =
        oracle::enumerate_feasible_schedules(inst.net, inst.graph);
    const auto opt = oracle::utility_optimum_bruteforce(schedules, utilities);

    for (double theta : {1.0, 10.0, 100.0}) {
      // step scaled to theta so the dual variables reach their O(theta) scale
      const auto step = [theta](int t) {
        return std::max(1.0, theta / 4.0) / static_cast<double>(t);
      };
      const auto result = umax_run(inst.net, inst.graph, inst.sets, utilities,
                                   theta, step, 8000, 1e-8);
      double slack = 0.0;
      for (int j = 0; j < n; ++j) {
        slack += std::log(static_cast<double>(inst.sets[j].size()));
      }
      double achieved = 0.0;
      for (int j = 0; j < n; ++j) {
        achieved += utilities[j].value(result.final_rates[j]);
      }
      CHECK(achieved >= opt.value - slack / theta - 1e-6);
    }
  }
}
