#include "csma/bethe.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <limits>

#include "csma/rng.hpp"

namespace csma::bethe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double logit(double s) { return std::log(s) - std::log1p(-s); }

void check_rates_interior(const std::vector<double>& s) {
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (!(s[k] > 0.0) || !(s[k] < 1.0)) {
      throw DegenerateRateError("rate " + std::to_string(s[k]) +
                                " at position " + std::to_string(k) +
                                " outside (0,1)");
    }
  }
}

struct LocalObjective {
  const LocalFeasibleSet& I;
  const std::vector<double>& s;

  int dim() const { return static_cast<int>(I.neighbors.size()); }

  double log_partition(const Eigen::VectorXd& r) const {
    double max_score = -kInf;
    for (std::uint32_t y : I.patterns) {
      max_score = std::max(max_score, score(r, y));
    }
    double sum = 0.0;
    for (std::uint32_t y : I.patterns) {
      sum += std::exp(score(r, y) - max_score);
    }
    return max_score + std::log(sum);
  }

  double value(const Eigen::VectorXd& r) const {
    double lin = 0.0;
    for (int p = 0; p < dim(); ++p) lin += s[p] * r[p];
    return lin - log_partition(r);
  }

  // Mean and covariance of the pattern bits under b(y) ~ exp(y . r).
  void moments(const Eigen::VectorXd& r, Eigen::VectorXd& mu,
               Eigen::MatrixXd* cov) const {
    const int m = dim();
    const double log_z = log_partition(r);
    mu.setZero(m);
    Eigen::MatrixXd second;
    if (cov) second.setZero(m, m);
    int bits[32];
    for (std::uint32_t y : I.patterns) {
      const double w = std::exp(score(r, y) - log_z);
      int nbits = 0;
      std::uint32_t rest = y;
      while (rest) {
        bits[nbits++] = std::countr_zero(rest);
        rest &= rest - 1;
      }
      for (int a = 0; a < nbits; ++a) {
        mu[bits[a]] += w;
        if (cov) {
          for (int b = 0; b < nbits; ++b) second(bits[a], bits[b]) += w;
        }
      }
    }
    if (cov) *cov = second - mu * mu.transpose();
  }

 private:
  static double score(const Eigen::VectorXd& r, std::uint32_t y) {
    double v = 0.0;
    while (y) {
      v += r[std::countr_zero(y)];
      y &= y - 1;
    }
    return v;
  }
};

}  // namespace

double LocalFugacities::for_neighbor(int k) const {
  auto it = std::lower_bound(neighbors.begin(), neighbors.end(), k);
  if (it == neighbors.end() || *it != k) {
    throw StructuralError("link " + std::to_string(k) +
                          " is not a neighbor of " + std::to_string(owner));
  }
  return beta[it - neighbors.begin()];
}

double FactorMarginal::marginal_of_position(int p) const {
  double total = 0.0;
  for (std::size_t idx = 0; idx < patterns.size(); ++idx) {
    if (patterns[idx] & (1u << p)) total += probs[idx];
  }
  return total;
}

double FactorMarginal::marginal_of_link(int k) const {
  auto it = std::lower_bound(neighbors.begin(), neighbors.end(), k);
  if (it == neighbors.end() || *it != k) {
    throw StructuralError("link " + std::to_string(k) +
                          " is not a neighbor of " + std::to_string(owner));
  }
  return marginal_of_position(static_cast<int>(it - neighbors.begin()));
}

LocalFugacities solve_local_gibbsian(const LocalFeasibleSet& I,
                                     const std::vector<double>& s_local,
                                     const SolverSettings& settings) {
  const int m = static_cast<int>(I.neighbors.size());
  if (static_cast<int>(s_local.size()) != m) {
    throw StructuralError("s_local must have one rate per neighbor");
  }
  check_rates_interior(s_local);

  LocalObjective obj{I, s_local};
  Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
  if (settings.init == SolverInit::Random) {
    Xoshiro256pp rng(settings.init_seed +
                     0x9E3779B97F4A7C15ULL * (std::uint64_t(I.owner) + 1));
    for (int p = 0; p < m; ++p) r[p] = 2.0 * rng.uniform() - 1.0;
  }

  Eigen::VectorXd mu(m), s = Eigen::Map<const Eigen::VectorXd>(s_local.data(), m);
  Eigen::MatrixXd cov(m, m);
  double f = obj.value(r);

  for (int iter = 0; iter < settings.max_iters; ++iter) {
    const bool newton = settings.method == SolverMethod::DampedNewton;
    obj.moments(r, mu, newton ? &cov : nullptr);
    Eigen::VectorXd g = s - mu;
    if (g.lpNorm<Eigen::Infinity>() <= settings.tolerance) {
      LocalFugacities out;
      out.owner = I.owner;
      out.neighbors = I.neighbors;
      out.beta.assign(r.data(), r.data() + m);
      return out;
    }

    Eigen::VectorXd dir;
    if (newton) {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
      if (ldlt.info() == Eigen::Success) dir = ldlt.solve(g);
      if (ldlt.info() != Eigen::Success || !dir.allFinite() ||
          dir.dot(g) <= 0.0) {
        dir = g;  // near-singular Hessian: fall back to gradient ascent
      }
    } else {
      dir = g;
    }

    // Backtracking line search (Armijo, with a floor so steps whose
    // improvement is below machine precision still get accepted).
    const double slope = g.dot(dir);
    const double floor = 1e-14 * (std::abs(f) + 1.0);
    double t = 1.0;
    double f_new = obj.value(r + t * dir);
    while (!(f_new >= f + 1e-4 * t * slope - floor) && t > 1e-14) {
      t *= 0.5;
      f_new = obj.value(r + t * dir);
    }
    assert(f_new >= f - 1e-9 * (std::abs(f) + 1.0));
    r += t * dir;
    f = f_new;

    if (r.lpNorm<Eigen::Infinity>() > settings.divergence_norm) {
      throw InfeasibleLocalRatesError(
          I.owner, "local rates at link " + std::to_string(I.owner) +
                       " lie on or outside the local capacity region "
                       "(iterates diverged)");
    }
  }
  throw InfeasibleLocalRatesError(
      I.owner, "local Gibbsian solve at link " + std::to_string(I.owner) +
                   " did not reach tolerance in " +
                   std::to_string(settings.max_iters) + " iterations");
}

double combine_log_global_fugacity(double s_i, int d_i,
                                   const std::vector<int>& neighborhood,
                                   const std::map<int, double>& incoming_beta) {
  if (!(s_i > 0.0) || !(s_i < 1.0)) {
    throw DegenerateRateError("rate outside (0,1) in fugacity combination");
  }
  double sum = 0.0;
  for (int j : neighborhood) {
    auto it = incoming_beta.find(j);
    if (it == incoming_beta.end()) {
      throw StructuralError("missing incoming local fugacity from neighbor " +
                            std::to_string(j));
    }
    sum += it->second;
  }
  if (incoming_beta.size() != neighborhood.size()) {
    throw StructuralError("incoming local fugacities carry a key outside N_i");
  }
  return static_cast<double>(d_i - 1) * (-logit(s_i)) + sum;
}

BetheResult bethe_fugacities(const Network& net, const InterferenceGraph& graph,
                             const std::vector<LocalFeasibleSet>& feasible_sets,
                             const ServiceRateVector& s,
                             const SolverSettings& settings) {
  const int n = net.size();
  BetheResult result;
  result.locals.reserve(n);
  for (int i = 0; i < n; ++i) {
    const auto& I = feasible_sets[i];
    std::vector<double> s_local(I.neighbors.size());
    for (std::size_t p = 0; p < I.neighbors.size(); ++p) {
      s_local[p] = s[I.neighbors[p]];
    }
    result.locals.push_back(solve_local_gibbsian(I, s_local, settings));
  }

  std::vector<double> log_lambda(n);
  for (int i = 0; i < n; ++i) {
    std::map<int, double> incoming;
    for (int j : graph.neighborhoods[i]) {
      incoming[j] = result.locals[j].for_neighbor(i);
    }
    log_lambda[i] = combine_log_global_fugacity(s[i], graph.degrees[i],
                                                graph.neighborhoods[i], incoming);
  }
  result.lambdas = FugacityVector::from_log(std::move(log_lambda));
  return result;
}

namespace {

void check_conflict_pair(int i, int k, double s_i, double s_k) {
  if (!(s_i > 0.0) || !(s_i < 1.0) || !(s_k > 0.0) || !(s_k < 1.0)) {
    throw DegenerateRateError("conflict closed form requires rates in (0,1)");
  }
  if (s_i + s_k >= 1.0) {
    throw RatePairOverloadError(
        i, k, "rate pair overload: s_" + std::to_string(i) + " + s_" +
                  std::to_string(k) + " = " + std::to_string(s_i + s_k) +
                  " >= 1 on a conflict edge");
  }
}

}  // namespace

LocalFugacities conflict_local_fugacities(int owner, double s_i,
                                          const std::map<int, double>& neighbor_rates) {
  const int m = static_cast<int>(neighbor_rates.size()) + 1;
  if (!(s_i > 0.0) || !(s_i < 1.0)) {
    throw DegenerateRateError("conflict closed form requires rates in (0,1)");
  }
  LocalFugacities out;
  out.owner = owner;
  out.neighbors.reserve(m);
  for (const auto& [k, s_k] : neighbor_rates) {
    if (k == owner) throw StructuralError("neighbor_rates must not contain the owner");
    check_conflict_pair(owner, k, s_i, s_k);
    out.neighbors.push_back(k);
  }
  out.neighbors.push_back(owner);
  std::sort(out.neighbors.begin(), out.neighbors.end());

  double beta_ii = std::log(s_i) + (m - 2) * std::log1p(-s_i);
  for (const auto& [k, s_k] : neighbor_rates) {
    beta_ii -= std::log1p(-s_i - s_k);
  }
  out.beta.resize(m);
  for (int p = 0; p < m; ++p) {
    const int j = out.neighbors[p];
    out.beta[p] = j == owner ? beta_ii
                             : std::log(neighbor_rates.at(j)) -
                                   std::log1p(-s_i - neighbor_rates.at(j));
  }
  return out;
}

double conflict_log_global_fugacity_vertex(double s_i,
                                           const std::vector<double>& neighbor_rates) {
  const int m = static_cast<int>(neighbor_rates.size()) + 1;
  if (!(s_i > 0.0) || !(s_i < 1.0)) {
    throw DegenerateRateError("conflict closed form requires rates in (0,1)");
  }
  double v = std::log(s_i) + (2 * m - 3) * std::log1p(-s_i);
  for (double s_k : neighbor_rates) {
    check_conflict_pair(-1, -1, s_i, s_k);
    v -= 2.0 * std::log1p(-s_i - s_k);
  }
  return v;
}

double conflict_log_global_fugacity_edge(double s_i,
                                         const std::vector<double>& neighbor_rates) {
  const int m = static_cast<int>(neighbor_rates.size()) + 1;
  if (!(s_i > 0.0) || !(s_i < 1.0)) {
    throw DegenerateRateError("conflict closed form requires rates in (0,1)");
  }
  double v = std::log(s_i) + (m - 2) * std::log1p(-s_i);
  for (double s_k : neighbor_rates) {
    check_conflict_pair(-1, -1, s_i, s_k);
    v -= std::log1p(-s_i - s_k);
  }
  return v;
}

namespace {

FugacityVector conflict_fugacities_closed_form(const InterferenceGraph& graph,
                                               const ServiceRateVector& s,
                                               bool vertex_centric) {
  std::vector<double> log_lambda(graph.size());
  for (int i = 0; i < graph.size(); ++i) {
    std::vector<double> neighbor_rates;
    for (int k : graph.neighborhoods[i]) {
      if (k != i) neighbor_rates.push_back(s[k]);
    }
    log_lambda[i] = vertex_centric
                        ? conflict_log_global_fugacity_vertex(s[i], neighbor_rates)
                        : conflict_log_global_fugacity_edge(s[i], neighbor_rates);
  }
  return FugacityVector::from_log(std::move(log_lambda));
}

}  // namespace

FugacityVector conflict_fugacities_vertex(const InterferenceGraph& graph,
                                          const ServiceRateVector& s) {
  return conflict_fugacities_closed_form(graph, s, true);
}

FugacityVector conflict_fugacities_edge(const InterferenceGraph& graph,
                                        const ServiceRateVector& s) {
  return conflict_fugacities_closed_form(graph, s, false);
}

FactorMarginal factor_marginal_from_fugacities(const LocalFugacities& beta,
                                               const LocalFeasibleSet& I) {
  FactorMarginal fm;
  fm.owner = I.owner;
  fm.neighbors = I.neighbors;
  fm.patterns = I.patterns;
  fm.probs.resize(I.patterns.size());

  auto score = [&](std::uint32_t y) {
    double v = 0.0;
    while (y) {
      v += beta.beta[std::countr_zero(y)];
      y &= y - 1;
    }
    return v;
  };
  double max_score = -kInf;
  for (std::uint32_t y : I.patterns) max_score = std::max(max_score, score(y));
  double z = 0.0;
  for (std::size_t idx = 0; idx < I.patterns.size(); ++idx) {
    fm.probs[idx] = std::exp(score(I.patterns[idx]) - max_score);
    z += fm.probs[idx];
  }
  for (double& p : fm.probs) p /= z;
  return fm;
}

double bethe_free_energy(const std::vector<FactorMarginal>& factor_marginals,
                         const std::vector<double>& variable_marginals,
                         const FugacityVector& lambda,
                         const InterferenceGraph& graph,
                         const std::vector<LocalFeasibleSet>& feasible_sets,
                         double consistency_tol) {
  const int n = graph.size();
  auto entropy_term = [](double p) { return p > 0.0 ? -p * std::log(p) : 0.0; };

  // Mass on any infeasible pattern makes the average energy infinite.
  for (int i = 0; i < n; ++i) {
    const auto& fm = factor_marginals[i];
    for (std::size_t idx = 0; idx < fm.patterns.size(); ++idx) {
      if (fm.probs[idx] > 0.0 && !feasible_sets[i].contains(fm.patterns[idx])) {
        return kInf;
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    const auto& fm = factor_marginals[i];
    for (std::size_t p = 0; p < fm.neighbors.size(); ++p) {
      const double want = variable_marginals[fm.neighbors[p]];
      const double got = fm.marginal_of_position(static_cast<int>(p));
      if (std::abs(want - got) > consistency_tol) {
        throw InconsistentMarginalsError(
            "factor marginal " + std::to_string(i) +
            " disagrees with variable marginal " +
            std::to_string(fm.neighbors[p]) + " by " +
            std::to_string(std::abs(want - got)));
      }
    }
  }

  double f = 0.0;
  for (int i = 0; i < n; ++i) {
    const double b1 = variable_marginals[i];
    if (b1 > 0.0 && std::isinf(lambda.log_lambda[i]) &&
        lambda.log_lambda[i] < 0.0) {
      return kInf;  // positive activity under a zero fugacity
    }
    f -= b1 * lambda.log_lambda[i];
    double factor_entropy = 0.0;
    for (double p : factor_marginals[i].probs) factor_entropy += entropy_term(p);
    f -= factor_entropy;
    f += (graph.degrees[i] - 1) * (entropy_term(b1) + entropy_term(1.0 - b1));
  }
  return f;
}

StationarityReport check_stationarity(const Network& net,
                                      const InterferenceGraph& graph,
                                      const std::vector<LocalFeasibleSet>& feasible_sets,
                                      const ServiceRateVector& s,
                                      const FugacityVector& lambda, double tol) {
  (void)net;
  const int n = graph.size();
  StationarityReport report;
  report.entropy_residuals.resize(n);
  report.fugacity_residuals.resize(n);

  SolverSettings settings;
  settings.tolerance = std::min(1e-12, tol * 1e-3);

  std::vector<LocalFugacities> locals;
  locals.reserve(n);
  for (int i = 0; i < n; ++i) {
    const auto& I = feasible_sets[i];
    std::vector<double> s_local(I.neighbors.size());
    for (std::size_t p = 0; p < I.neighbors.size(); ++p) {
      s_local[p] = s[I.neighbors[p]];
    }
    locals.push_back(solve_local_gibbsian(I, s_local, settings));

    const FactorMarginal fm = factor_marginal_from_fugacities(locals[i], I);
    double residual = 0.0;
    for (std::size_t p = 0; p < I.neighbors.size(); ++p) {
      residual = std::max(residual, std::abs(fm.marginal_of_position(
                                        static_cast<int>(p)) -
                                    s_local[p]));
    }
    report.entropy_residuals[i] = residual;
  }

  for (int i = 0; i < n; ++i) {
    std::map<int, double> incoming;
    for (int j : graph.neighborhoods[i]) {
      incoming[j] = locals[j].for_neighbor(i);
    }
    const double combined = combine_log_global_fugacity(
        s[i], graph.degrees[i], graph.neighborhoods[i], incoming);
    report.fugacity_residuals[i] = std::abs(lambda.log_lambda[i] - combined);
  }

  report.max_entropy_residual =
      *std::max_element(report.entropy_residuals.begin(),
                        report.entropy_residuals.end());
  report.fugacity_residual =
      *std::max_element(report.fugacity_residuals.begin(),
                        report.fugacity_residuals.end());
  report.pass = report.max_entropy_residual <= tol &&
                report.fugacity_residual <= tol;
  return report;
}

}  // namespace csma::bethe
