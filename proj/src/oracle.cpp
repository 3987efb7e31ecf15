#include "csma/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>

#include "csma/rng.hpp"

namespace csma::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double mask_score(const FugacityVector& lambda, std::uint32_t mask) {
  double v = 0.0;
  while (mask) {
    v += lambda.log_lambda[std::countr_zero(mask)];
    mask &= mask - 1;
  }
  return v;
}

}  // namespace

FeasibleScheduleSet enumerate_feasible_schedules(const Network& net,
                                                 const InterferenceGraph& graph) {
  const int n = net.size();
  if (n > kScheduleEnumerationCap) {
    throw EnumerationTooLargeError(
        -1, n,
        "global enumeration supports at most " +
            std::to_string(kScheduleEnumerationCap) + " links, got " +
            std::to_string(n));
  }

  FeasibleScheduleSet out;
  out.n_links = n;
  Schedule x(n, 0);

  // Adding a link can only break itself or active links in its neighborhood;
  // infeasible branches are pruned (feasibility is subset-closed).
  auto extend_ok = [&](int k) {
    x[k] = 1;
    bool ok = true;
    if (net.kind == NetworkKind::ConflictGraph) {
      for (int j : graph.neighborhoods[k]) {
        if (j != k && x[j]) {
          ok = false;
          break;
        }
      }
    } else {
      for (int j : graph.neighborhoods[k]) {
        if (!x[j]) continue;
        std::vector<int> active;
        for (int l : graph.neighborhoods[j]) {
          if (x[l]) active.push_back(l);
        }
        if (compute_sinr(net, j, active) < net.radio.sinr_threshold) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) x[k] = 0;
    return ok;
  };

  auto dfs = [&](auto&& self, std::uint32_t mask, int next) -> void {
    out.masks.push_back(mask);
    for (int k = next; k < n; ++k) {
      if (!extend_ok(k)) continue;
      self(self, mask | (1u << k), k + 1);
      x[k] = 0;
    }
  };
  dfs(dfs, 0, 0);
  std::sort(out.masks.begin(), out.masks.end());
  return out;
}

std::string to_hex_list(const FeasibleScheduleSet& schedules) {
  std::string out;
  char buf[16];
  for (std::uint32_t mask : schedules.masks) {
    std::snprintf(buf, sizeof(buf), "0x%x\n", mask);
    out += buf;
  }
  return out;
}

double exact_log_partition(const FugacityVector& lambda,
                           const FeasibleScheduleSet& schedules) {
  double max_score = -kInf;
  for (std::uint32_t mask : schedules.masks) {
    max_score = std::max(max_score, mask_score(lambda, mask));
  }
  double sum = 0.0;
  for (std::uint32_t mask : schedules.masks) {
    sum += std::exp(mask_score(lambda, mask) - max_score);
  }
  return max_score + std::log(sum);
}

std::vector<double> exact_marginals(const FugacityVector& lambda,
                                    const FeasibleScheduleSet& schedules) {
  const double log_z = exact_log_partition(lambda, schedules);
  std::vector<double> s(schedules.n_links, 0.0);
  for (std::uint32_t mask : schedules.masks) {
    const double w = std::exp(mask_score(lambda, mask) - log_z);
    std::uint32_t rest = mask;
    while (rest) {
      s[std::countr_zero(rest)] += w;
      rest &= rest - 1;
    }
  }
  return s;
}

FugacityVector exact_fugacities(const std::vector<double>& s,
                                const FeasibleScheduleSet& schedules,
                                const SolverSettings& settings) {
  const int n = schedules.n_links;
  if (static_cast<int>(s.size()) != n) {
    throw StructuralError("rate vector size does not match schedule set");
  }
  for (double v : s) {
    if (!(v > 0.0) || !(v < 1.0)) {
      throw DegenerateRateError("exact_fugacities requires rates in (0,1)");
    }
  }

  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  const Eigen::Map<const Eigen::VectorXd> target(s.data(), n);

  auto log_partition = [&](const Eigen::VectorXd& rv) {
    double max_score = -kInf;
    auto score = [&](std::uint32_t mask) {
      double v = 0.0;
      while (mask) {
        v += rv[std::countr_zero(mask)];
        mask &= mask - 1;
      }
      return v;
    };
    for (std::uint32_t mask : schedules.masks) {
      max_score = std::max(max_score, score(mask));
    }
    double sum = 0.0;
    for (std::uint32_t mask : schedules.masks) {
      sum += std::exp(score(mask) - max_score);
    }
    return max_score + std::log(sum);
  };
  auto dual_value = [&](const Eigen::VectorXd& rv) {
    return target.dot(rv) - log_partition(rv);
  };

  double f = dual_value(r);
  int bits[32];
  for (int iter = 0; iter < settings.max_iters; ++iter) {
    // moments under the current iterate
    const double log_z = log_partition(r);
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(n, n);
    for (std::uint32_t mask : schedules.masks) {
      double sc = 0.0;
      int nbits = 0;
      std::uint32_t rest = mask;
      while (rest) {
        const int b = std::countr_zero(rest);
        bits[nbits++] = b;
        sc += r[b];
        rest &= rest - 1;
      }
      const double w = std::exp(sc - log_z);
      for (int a = 0; a < nbits; ++a) {
        mu[bits[a]] += w;
        for (int b = 0; b < nbits; ++b) second(bits[a], bits[b]) += w;
      }
    }
    Eigen::VectorXd g = target - mu;
    if (g.lpNorm<Eigen::Infinity>() <= settings.tolerance) {
      return FugacityVector::from_log(
          std::vector<double>(r.data(), r.data() + n));
    }

    Eigen::MatrixXd cov = second - mu * mu.transpose();
    Eigen::VectorXd dir;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    if (ldlt.info() == Eigen::Success) dir = ldlt.solve(g);
    if (ldlt.info() != Eigen::Success || !dir.allFinite() || dir.dot(g) <= 0.0) {
      dir = g;
    }

    const double slope = g.dot(dir);
    const double floor = 1e-14 * (std::abs(f) + 1.0);
    double t = 1.0;
    double f_new = dual_value(r + t * dir);
    while (!(f_new >= f + 1e-4 * t * slope - floor) && t > 1e-14) {
      t *= 0.5;
      f_new = dual_value(r + t * dir);
    }
    r += t * dir;
    f = f_new;

    if (r.lpNorm<Eigen::Infinity>() > settings.divergence_norm) {
      throw TargetOutsideCapacityError(
          "target_outside_capacity_region: dual iterates diverged");
    }
  }
  throw TargetOutsideCapacityError(
      "target_outside_capacity_region: dual did not converge in " +
      std::to_string(settings.max_iters) + " iterations");
}

std::string to_string(Membership m) {
  switch (m) {
    case Membership::Interior: return "interior";
    case Membership::Boundary: return "boundary";
    case Membership::Outside: return "outside";
  }
  return "?";
}

namespace {

// Support function h(w) = max over schedules of w . x.
double support(const FeasibleScheduleSet& schedules, const Eigen::VectorXd& w,
               std::uint32_t* argmax = nullptr) {
  double best = -kInf;
  for (std::uint32_t mask : schedules.masks) {
    double v = 0.0;
    std::uint32_t rest = mask;
    while (rest) {
      v += w[std::countr_zero(rest)];
      rest &= rest - 1;
    }
    if (v > best) {
      best = v;
      if (argmax) *argmax = mask;
    }
  }
  return best;
}

Eigen::VectorXd mask_to_vec(std::uint32_t mask, int n) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  while (mask) {
    v[std::countr_zero(mask)] = 1.0;
    mask &= mask - 1;
  }
  return v;
}

}  // namespace

CapacityReport capacity_membership(const std::vector<double>& s,
                                   const FeasibleScheduleSet& schedules) {
  const int n = schedules.n_links;
  const Eigen::Map<const Eigen::VectorXd> target(s.data(), n);
  constexpr double kTol = 1e-9;

  // Gilbert's algorithm: project s onto the schedule hull. The separating
  // lower bound (w.s - h(w)) / |w| certifies "outside".
  Eigen::VectorXd x = mask_to_vec(schedules.masks.front(), n);
  {
    double best = (target - x).squaredNorm();
    for (std::uint32_t mask : schedules.masks) {
      Eigen::VectorXd v = mask_to_vec(mask, n);
      const double d2 = (target - v).squaredNorm();
      if (d2 < best) {
        best = d2;
        x = v;
      }
    }
  }
  double separation = 0.0;  // best lower bound on dist(s, hull)
  for (int iter = 0; iter < 5000; ++iter) {
    Eigen::VectorXd dir = target - x;
    const double dist = dir.norm();
    if (dist < 1e-14) break;
    std::uint32_t far_mask = 0;
    const double h = support(schedules, dir, &far_mask);
    separation = std::max(separation, (dir.dot(target) - h) / dist);
    const Eigen::VectorXd v = mask_to_vec(far_mask, n);
    const double gap = dir.dot(v - x);
    if (gap <= 1e-15) break;  // x is the projection
    const double denom = (v - x).squaredNorm();
    const double t = std::clamp(dir.dot(v - x) / denom, 0.0, 1.0);
    x += t * (v - x);
  }

  if (separation > kTol) {
    return {Membership::Outside, separation};
  }

  // In the hull. The hull is full-dimensional (it contains 0 and every
  // single-link schedule), so s is interior iff the max-entropy dual is
  // attained at a finite point. The tight tolerance forces boundary targets
  // to push |r| past the divergence threshold.
  bool interior = true;
  try {
    SolverSettings settings;
    settings.tolerance = 1e-14;
    settings.max_iters = 500;
    settings.divergence_norm = 25.0;
    (void)exact_fugacities(s, schedules, settings);
  } catch (const Error&) {
    interior = false;
  }
  if (!interior) {
    return {Membership::Boundary, (target - x).norm()};
  }

  // Margin: best distance to the boundary along the directions searched.
  auto normalized_slack = [&](const Eigen::VectorXd& w) {
    const double norm = w.norm();
    if (norm < 1e-14) return kInf;
    return (support(schedules, w) - w.dot(target)) / norm;
  };
  double margin = kInf;
  Eigen::VectorXd best_w;
  for (int i = 0; i < n; ++i) {
    for (double sign : {-1.0, 1.0}) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
      w[i] = sign;
      const double m = normalized_slack(w);
      if (m < margin) {
        margin = m;
        best_w = w;
      }
    }
  }
  Xoshiro256pp rng(0x9d2c5680);
  for (int trial = 0; trial < 64; ++trial) {
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w[i] = 2.0 * rng.uniform() - 1.0;
    const double m = normalized_slack(w);
    if (m < margin) {
      margin = m;
      best_w = w;
    }
  }
  // local polish: projected subgradient descent on the slack
  Eigen::VectorXd w = best_w.normalized();
  for (int iter = 1; iter <= 400; ++iter) {
    std::uint32_t far_mask = 0;
    support(schedules, w, &far_mask);
    Eigen::VectorXd grad = mask_to_vec(far_mask, n) - target;
    w -= (0.25 / iter) * grad;
    const double norm = w.norm();
    if (norm < 1e-14) break;
    w /= norm;
    margin = std::min(margin, normalized_slack(w));
  }
  return {Membership::Interior, margin};
}

BruteforceOptimum utility_optimum_bruteforce(const FeasibleScheduleSet& schedules,
                                             const UtilitySpec& utilities,
                                             const BruteforceSettings& settings) {
  const int n = schedules.n_links;
  const std::size_t v = schedules.count();
  std::vector<double> mu(v, 1.0 / static_cast<double>(v));

  auto rates_of = [&](const std::vector<double>& weights) {
    std::vector<double> y(n, 0.0);
    for (std::size_t idx = 0; idx < v; ++idx) {
      std::uint32_t rest = schedules.masks[idx];
      while (rest) {
        y[std::countr_zero(rest)] += weights[idx];
        rest &= rest - 1;
      }
    }
    return y;
  };
  auto objective = [&](const std::vector<double>& y) {
    double total = 0.0;
    for (int j = 0; j < n; ++j) total += utilities[j].value(y[j]);
    return total;
  };

  std::vector<double> y = rates_of(mu);
  double obj = objective(y);
  double eta = 1.0;
  std::vector<double> scores(v), trial(v);

  for (int iter = 0; iter < settings.max_iters; ++iter) {
    std::vector<double> grad(n);
    for (int j = 0; j < n; ++j) grad[j] = utilities[j].deriv(y[j]);
    double max_score = -kInf, avg_score = 0.0;
    for (std::size_t idx = 0; idx < v; ++idx) {
      double sc = 0.0;
      std::uint32_t rest = schedules.masks[idx];
      while (rest) {
        sc += grad[std::countr_zero(rest)];
        rest &= rest - 1;
      }
      scores[idx] = sc;
      max_score = std::max(max_score, sc);
      avg_score += mu[idx] * sc;
    }
    // Frank-Wolfe gap upper-bounds the optimality gap of the concave program.
    if (max_score - avg_score <= settings.tol) break;

    // exponentiated-gradient step with objective-based step control
    for (;;) {
      double z = 0.0;
      for (std::size_t idx = 0; idx < v; ++idx) {
        trial[idx] = mu[idx] * std::exp(eta * (scores[idx] - max_score));
        z += trial[idx];
      }
      for (std::size_t idx = 0; idx < v; ++idx) trial[idx] /= z;
      const std::vector<double> y_new = rates_of(trial);
      const double obj_new = objective(y_new);
      if (obj_new >= obj - 1e-15 || eta < 1e-12) {
        mu = trial;
        y = y_new;
        obj = obj_new;
        eta *= 1.05;
        break;
      }
      eta *= 0.5;
    }
  }
  return {y, obj};
}

}  // namespace csma::oracle
