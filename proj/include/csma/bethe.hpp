#pragma once

#include <map>
#include <vector>

#include "csma/fugacity.hpp"
#include "csma/interference.hpp"

namespace csma::bethe {

/// Local fugacities beta_i = [beta_{ik}]_{k in N_i} of one link, log domain,
/// aligned with the sorted neighborhood order of the owning feasible set.
struct LocalFugacities {
  int owner = 0;
  std::vector<int> neighbors;
  std::vector<double> beta;

  double for_neighbor(int k) const;
};

/// Exponential-family distribution over the members of a local feasible set.
struct FactorMarginal {
  int owner = 0;
  std::vector<int> neighbors;
  std::vector<std::uint32_t> patterns;
  std::vector<double> probs;

  /// Marginal probability that bit position p is active.
  double marginal_of_position(int p) const;
  /// Marginal probability that link k (a member of N_owner) is active.
  double marginal_of_link(int k) const;
};

/// Maximizes the concave local objective
///   sum_k s_k r_k - ln sum_{y in I_i} exp(sum_k y_k r_k)
/// by damped Newton with log-sum-exp-stable assembly (gradient-ascent
/// backtracking fallback). s_local is aligned with I.neighbors.
/// Throws InfeasibleLocalRatesError when the iterates diverge, which signals
/// local rates on or outside the local capacity region.
LocalFugacities solve_local_gibbsian(const LocalFeasibleSet& I,
                                     const std::vector<double>& s_local,
                                     const SolverSettings& settings = {});

/// ln lambda_i = (d_i - 1) ln((1-s_i)/s_i) + sum_{j in N_i} beta_{ji}.
/// incoming must hold exactly one entry per j in N_i (including j = i).
double combine_log_global_fugacity(double s_i, int d_i,
                                   const std::vector<int>& neighborhood,
                                   const std::map<int, double>& incoming_beta);

struct BetheResult {
  FugacityVector lambdas;
  std::vector<LocalFugacities> locals;
};

/// Full pipeline: one local Gibbsian solve per link, then the per-link
/// combination step. The result is the unique Bethe-approximated fugacity
/// vector for the target rates.
BetheResult bethe_fugacities(const Network& net, const InterferenceGraph& graph,
                             const std::vector<LocalFeasibleSet>& feasible_sets,
                             const ServiceRateVector& s,
                             const SolverSettings& settings = {});

/// Conflict-graph closed form for the local fugacities:
///   e^{beta_ii} = s_i (1-s_i)^{|N_i|-2} prod_k (1-s_i-s_k)^{-1}
///   e^{beta_ij} = s_j / (1-s_i-s_j)
/// neighbor_rates maps k in N_i \ {i} to s_k.
LocalFugacities conflict_local_fugacities(int owner, double s_i,
                                          const std::map<int, double>& neighbor_rates);

/// Vertex-centric closed form: lambda_i = s_i (1-s_i)^{2|N_i|-3} / prod (1-s_i-s_k)^2.
double conflict_log_global_fugacity_vertex(double s_i,
                                           const std::vector<double>& neighbor_rates);

/// Edge-centric closed form: lambda_i = s_i (1-s_i)^{|N_i|-2} / prod (1-s_i-s_k).
/// Exact on tree conflict graphs.
double conflict_log_global_fugacity_edge(double s_i,
                                         const std::vector<double>& neighbor_rates);

/// Whole-network closed-form pipelines (conflict-graph networks only).
FugacityVector conflict_fugacities_vertex(const InterferenceGraph& graph,
                                          const ServiceRateVector& s);
FugacityVector conflict_fugacities_edge(const InterferenceGraph& graph,
                                        const ServiceRateVector& s);

FactorMarginal factor_marginal_from_fugacities(const LocalFugacities& beta,
                                               const LocalFeasibleSet& I);

/// Bethe free energy
///   F_B = sum_i [ -b_i(1) ln lambda_i - H(factor_i) + (d_i - 1) H(b_i) ]
/// for marginals satisfying the feasibility constraints; returns +infinity
/// when a factor marginal puts mass on an infeasible pattern. Throws
/// InconsistentMarginalsError when local consistency is violated beyond
/// consistency_tol.
double bethe_free_energy(const std::vector<FactorMarginal>& factor_marginals,
                         const std::vector<double>& variable_marginals,
                         const FugacityVector& lambda,
                         const InterferenceGraph& graph,
                         const std::vector<LocalFeasibleSet>& feasible_sets,
                         double consistency_tol = 1e-7);

struct StationarityReport {
  std::vector<double> entropy_residuals;   // per link
  std::vector<double> fugacity_residuals;  // per link
  double max_entropy_residual = 0.0;
  double fugacity_residual = 0.0;
  bool pass = false;
};

/// Checks the two stationarity conditions of the BFE at (s, lambda): the
/// max-entropy condition (the solved factor marginal at each link reproduces
/// the target single-bit marginals) and the fugacity combination condition.
StationarityReport check_stationarity(const Network& net,
                                      const InterferenceGraph& graph,
                                      const std::vector<LocalFeasibleSet>& feasible_sets,
                                      const ServiceRateVector& s,
                                      const FugacityVector& lambda, double tol);

}  // namespace csma::bethe
