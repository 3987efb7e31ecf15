#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "csma/adaptive.hpp"
#include "csma/bethe.hpp"
#include "csma/network.hpp"
#include "csma/oracle.hpp"
#include "csma/sim.hpp"

namespace csma::harness {

struct TopologySpec {
  enum class Kind { RandomSinr, Grid, Complete, AdjacencyFile };
  Kind kind = Kind::Grid;

  // random_sinr
  int n_links = 20;
  double plane_side = 8.0;
  double link_length = 0.5;
  double path_loss_exponent = 3.0;
  double close_in_radius = 2.4;
  double sinr_threshold_db = 15.0;
  double noise_power = 0.0;
  std::uint64_t topology_seed = 1;
  bool as_conflict = false;  // keep geometry edges, switch to conflict kind

  // grid
  int rows = 4;
  int cols = 4;

  // complete
  int complete_n = 15;

  // adjacency_file: a serialized conflict-graph network
  std::string file;

  bool operator==(const TopologySpec&) const = default;
};

struct RateSpec {
  bool is_sweep = true;
  double start = 0.05;
  double stop = 0.25;
  double step = 0.05;
  std::vector<double> fixed;  // per-link targets; a single value broadcasts

  bool operator==(const RateSpec&) const = default;
};

struct ExperimentConfig {
  std::string experiment = "error_vs_load";
  TopologySpec topology;
  RateSpec rates;
  std::vector<std::string> methods = {"bethe_sinr"};
  std::uint64_t slots = 1000000;
  std::uint64_t burn_in = 100000;
  std::vector<std::uint64_t> seeds = {1};
  double theta = 1.0;
  std::uint64_t sample_every = 10000;
  int max_iters = 500;
  double stop_norm = 1e-2;
  double tol = 1e-6;
  std::string out = "out.csv";

  bool operator==(const ExperimentConfig&) const = default;
};

/// Flat INI-style config: [experiment] / [topology] / [rates] / [run]
/// sections. parse(serialize(cfg)) == cfg.
ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);
void validate_config(const ExperimentConfig& cfg);

Network build_topology(const TopologySpec& spec);

/// Convert a spatial network into the conflict graph induced by its
/// interference edges.
Network conflict_from_interference(const Network& net);

/// Fugacities for one static method: bethe_sinr (general solver pipeline),
/// bethe_vertex / bethe_edge (conflict closed forms), exact_oracle.
FugacityVector fugacities_for_method(const std::string& method,
                                     const Network& net,
                                     const InterferenceGraph& graph,
                                     const std::vector<LocalFeasibleSet>& feasible_sets,
                                     const ServiceRateVector& target);

// CSV emission. Every writer starts with "# schema: <name> v1" and a header
// row; identical configs and seeds produce byte-identical bytes.
void run_error_vs_load(const ExperimentConfig& cfg, std::ostream& out);
void run_error_vs_time(const ExperimentConfig& cfg, std::ostream& out);
void run_umax(const ExperimentConfig& cfg, std::ostream& out,
              std::ostream& fugacities_out);
void run_stationarity_audit(const ExperimentConfig& cfg, std::ostream& out);

/// Dispatches on cfg.experiment and writes cfg.out (plus <out>.fugacities.csv
/// for umax_convergence).
void run_experiment(const ExperimentConfig& cfg);

// Fugacity CSV round trip (schema: fugacities v1).
void write_fugacities_csv(std::ostream& out, const FugacityVector& lambda);
FugacityVector read_fugacities_csv(std::istream& in);

void write_local_fugacities_csv(std::ostream& out,
                                const std::vector<bethe::LocalFugacities>& locals);

void write_stats_csv(std::ostream& out, const std::vector<double>& target,
                     const sim::ServiceRateStats& stats);

std::string fmt_double(double v);  // shortest round-trip-exact form

}  // namespace csma::harness
