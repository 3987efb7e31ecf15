#include "csma/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace csma::harness {

std::string fmt_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

// ---------------------------------------------------------------------------
// config

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw StructuralError("config: bad number for " + key + ": '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::uint64_t u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw StructuralError("config: bad integer for " + key + ": '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw StructuralError("config: bad boolean for " + key + ": '" + v + "'");
}

TopologySpec::Kind topology_kind(const std::string& v) {
  if (v == "random_sinr") return TopologySpec::Kind::RandomSinr;
  if (v == "grid") return TopologySpec::Kind::Grid;
  if (v == "complete") return TopologySpec::Kind::Complete;
  if (v == "adjacency_file") return TopologySpec::Kind::AdjacencyFile;
  throw StructuralError("config: unknown topology kind '" + v + "'");
}

std::string topology_kind_name(TopologySpec::Kind k) {
  switch (k) {
    case TopologySpec::Kind::RandomSinr: return "random_sinr";
    case TopologySpec::Kind::Grid: return "grid";
    case TopologySpec::Kind::Complete: return "complete";
    case TopologySpec::Kind::AdjacencyFile: return "adjacency_file";
  }
  return "?";
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  cfg.methods.clear();
  cfg.seeds.clear();
  std::istringstream in(text);
  std::string line, section;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw StructuralError("config: expected key = value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (section == "experiment") {
      if (key == "name") cfg.experiment = value;
      else throw StructuralError("config: unknown key " + section + "." + key);
    } else if (section == "topology") {
      TopologySpec& t = cfg.topology;
      if (key == "kind") t.kind = topology_kind(value);
      else if (key == "n_links") t.n_links = static_cast<int>(to_u64(key, value));
      else if (key == "plane_side") t.plane_side = to_double(key, value);
      else if (key == "link_length") t.link_length = to_double(key, value);
      else if (key == "path_loss_exponent") t.path_loss_exponent = to_double(key, value);
      else if (key == "close_in_radius") t.close_in_radius = to_double(key, value);
      else if (key == "sinr_threshold_db") t.sinr_threshold_db = to_double(key, value);
      else if (key == "noise_power") t.noise_power = to_double(key, value);
      else if (key == "topology_seed") t.topology_seed = to_u64(key, value);
      else if (key == "as_conflict") t.as_conflict = to_bool(key, value);
      else if (key == "rows") t.rows = static_cast<int>(to_u64(key, value));
      else if (key == "cols") t.cols = static_cast<int>(to_u64(key, value));
      else if (key == "complete_n") t.complete_n = static_cast<int>(to_u64(key, value));
      else if (key == "file") t.file = value;
      else throw StructuralError("config: unknown key " + section + "." + key);
    } else if (section == "rates") {
      RateSpec& r = cfg.rates;
      if (key == "sweep") r.is_sweep = to_bool(key, value);
      else if (key == "start") r.start = to_double(key, value);
      else if (key == "stop") r.stop = to_double(key, value);
      else if (key == "step") r.step = to_double(key, value);
      else if (key == "fixed") {
        r.fixed.clear();
        for (const auto& item : split_list(value)) {
          r.fixed.push_back(to_double(key, item));
        }
      } else {
        throw StructuralError("config: unknown key " + section + "." + key);
      }
    } else if (section == "run") {
      if (key == "methods") cfg.methods = split_list(value);
      else if (key == "slots") cfg.slots = to_u64(key, value);
      else if (key == "burn_in") cfg.burn_in = to_u64(key, value);
      else if (key == "seeds") {
        cfg.seeds.clear();
        for (const auto& item : split_list(value)) {
          cfg.seeds.push_back(to_u64(key, item));
        }
      } else if (key == "theta") cfg.theta = to_double(key, value);
      else if (key == "sample_every") cfg.sample_every = to_u64(key, value);
      else if (key == "max_iters") cfg.max_iters = static_cast<int>(to_u64(key, value));
      else if (key == "stop_norm") cfg.stop_norm = to_double(key, value);
      else if (key == "tol") cfg.tol = to_double(key, value);
      else if (key == "out") cfg.out = value;
      else throw StructuralError("config: unknown key " + section + "." + key);
    } else {
      throw StructuralError("config: key outside a known section: " + line);
    }
  }
  validate_config(cfg);
  return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "[experiment]\n";
  out << "name = " << cfg.experiment << "\n\n";

  const TopologySpec& t = cfg.topology;
  out << "[topology]\n";
  out << "kind = " << topology_kind_name(t.kind) << "\n";
  out << "n_links = " << t.n_links << "\n";
  out << "plane_side = " << fmt_double(t.plane_side) << "\n";
  out << "link_length = " << fmt_double(t.link_length) << "\n";
  out << "path_loss_exponent = " << fmt_double(t.path_loss_exponent) << "\n";
  out << "close_in_radius = " << fmt_double(t.close_in_radius) << "\n";
  out << "sinr_threshold_db = " << fmt_double(t.sinr_threshold_db) << "\n";
  out << "noise_power = " << fmt_double(t.noise_power) << "\n";
  out << "topology_seed = " << t.topology_seed << "\n";
  out << "as_conflict = " << (t.as_conflict ? "true" : "false") << "\n";
  out << "rows = " << t.rows << "\n";
  out << "cols = " << t.cols << "\n";
  out << "complete_n = " << t.complete_n << "\n";
  out << "file = " << t.file << "\n\n";

  const RateSpec& r = cfg.rates;
  out << "[rates]\n";
  out << "sweep = " << (r.is_sweep ? "true" : "false") << "\n";
  out << "start = " << fmt_double(r.start) << "\n";
  out << "stop = " << fmt_double(r.stop) << "\n";
  out << "step = " << fmt_double(r.step) << "\n";
  out << "fixed = ";
  for (std::size_t i = 0; i < r.fixed.size(); ++i) {
    out << (i ? "," : "") << fmt_double(r.fixed[i]);
  }
  out << "\n\n";

  out << "[run]\n";
  out << "methods = ";
  for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
    out << (i ? "," : "") << cfg.methods[i];
  }
  out << "\n";
  out << "slots = " << cfg.slots << "\n";
  out << "burn_in = " << cfg.burn_in << "\n";
  out << "seeds = ";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    out << (i ? "," : "") << cfg.seeds[i];
  }
  out << "\n";
  out << "theta = " << fmt_double(cfg.theta) << "\n";
  out << "sample_every = " << cfg.sample_every << "\n";
  out << "max_iters = " << cfg.max_iters << "\n";
  out << "stop_norm = " << fmt_double(cfg.stop_norm) << "\n";
  out << "tol = " << fmt_double(cfg.tol) << "\n";
  out << "out = " << cfg.out << "\n";
  return out.str();
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StructuralError("cannot open config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void validate_config(const ExperimentConfig& cfg) {
  static const std::vector<std::string> known_experiments = {
      "error_vs_load", "error_vs_time", "umax_convergence", "sgd_compare",
      "stationarity_audit"};
  if (std::find(known_experiments.begin(), known_experiments.end(),
                cfg.experiment) == known_experiments.end()) {
    throw StructuralError("config: unknown experiment '" + cfg.experiment + "'");
  }
  if (cfg.rates.is_sweep) {
    if (!(cfg.rates.start > 0.0) || !(cfg.rates.stop < 1.0) ||
        !(cfg.rates.step > 0.0) || cfg.rates.stop < cfg.rates.start) {
      throw StructuralError("config: sweep bounds must satisfy 0 < start <= stop < 1, step > 0");
    }
  } else if (cfg.rates.fixed.empty()) {
    throw StructuralError("config: fixed rates requested but none given");
  }
  if (cfg.methods.empty()) throw StructuralError("config: at least one method required");
  if (cfg.seeds.empty()) throw StructuralError("config: seeds must be non-empty");
  if (cfg.slots <= cfg.burn_in) throw StructuralError("config: slots must exceed burn_in");
}

// ---------------------------------------------------------------------------
// topology and methods

Network conflict_from_interference(const Network& net) {
  const InterferenceGraph graph = build_interference_graph(net);
  std::vector<std::vector<std::uint8_t>> adj(
      net.size(), std::vector<std::uint8_t>(net.size(), 0));
  for (int i = 0; i < net.size(); ++i) {
    for (int j : graph.neighborhoods[i]) {
      if (j != i) adj[i][j] = adj[j][i] = 1;
    }
  }
  return build_conflict_graph_network(adj);
}

Network build_topology(const TopologySpec& spec) {
  switch (spec.kind) {
    case TopologySpec::Kind::RandomSinr: {
      RandomNetworkConfig cfg;
      cfg.n_links = spec.n_links;
      cfg.plane_side = spec.plane_side;
      cfg.link_length = spec.link_length;
      cfg.radio.path_loss_exponent = spec.path_loss_exponent;
      cfg.radio.close_in_radius = spec.close_in_radius;
      cfg.radio.sinr_threshold = sinr_threshold_from_db(spec.sinr_threshold_db);
      cfg.radio.noise_power = spec.noise_power;
      Network net = generate_random_network(cfg, spec.topology_seed);
      if (spec.as_conflict) return conflict_from_interference(net);
      return net;
    }
    case TopologySpec::Kind::Grid:
      return build_conflict_graph_network(grid_adjacency(spec.rows, spec.cols));
    case TopologySpec::Kind::Complete:
      return build_conflict_graph_network(complete_adjacency(spec.complete_n));
    case TopologySpec::Kind::AdjacencyFile:
      return load_network(spec.file);
  }
  throw StructuralError("unreachable topology kind");
}

FugacityVector fugacities_for_method(const std::string& method,
                                     const Network& net,
                                     const InterferenceGraph& graph,
                                     const std::vector<LocalFeasibleSet>& feasible_sets,
                                     const ServiceRateVector& target) {
  if (method == "bethe_sinr") {
    return bethe::bethe_fugacities(net, graph, feasible_sets, target).lambdas;
  }
  if (method == "bethe_vertex" || method == "bethe_edge") {
    if (net.kind != NetworkKind::ConflictGraph) {
      throw StructuralError("method " + method + " requires a conflict-graph network");
    }
    return method == "bethe_vertex" ? bethe::conflict_fugacities_vertex(graph, target)
                                    : bethe::conflict_fugacities_edge(graph, target);
  }
  if (method == "exact_oracle") {
    const auto schedules = oracle::enumerate_feasible_schedules(net, graph);
    return oracle::exact_fugacities(target.values(), schedules);
  }
  throw StructuralError("unknown fugacity method '" + method + "'");
}

// ---------------------------------------------------------------------------
// experiment drivers

namespace {

const char* error_tag(const Error& e) {
  if (dynamic_cast<const InfeasibleLocalRatesError*>(&e)) return "infeasible_local_rates";
  if (dynamic_cast<const RatePairOverloadError*>(&e)) return "rate_pair_overload";
  if (dynamic_cast<const DegenerateRateError*>(&e)) return "degenerate_rate";
  if (dynamic_cast<const TargetOutsideCapacityError*>(&e)) return "target_outside_capacity_region";
  if (dynamic_cast<const EnumerationTooLargeError*>(&e)) return "enumeration_too_large";
  return "structural_error";
}

std::vector<double> sweep_points(const RateSpec& r) {
  std::vector<double> points;
  if (r.is_sweep) {
    for (int k = 0;; ++k) {
      const double v = r.start + k * r.step;
      if (v > r.stop + 1e-12) break;
      points.push_back(v);
    }
  }
  return points;
}

std::vector<double> fixed_target(const RateSpec& r, int n) {
  if (r.fixed.size() == 1) return std::vector<double>(n, r.fixed[0]);
  if (static_cast<int>(r.fixed.size()) != n) {
    throw StructuralError("fixed rate vector length does not match link count");
  }
  return r.fixed;
}

bool is_sgd_method(const std::string& m) { return m == "sgd1" || m == "sgd2"; }

adaptive::SgdVariant sgd_variant(const std::string& m) {
  return m == "sgd1" ? adaptive::sgd1() : adaptive::sgd2();
}

}  // namespace

void run_error_vs_load(const ExperimentConfig& cfg, std::ostream& out) {
  const Network net = build_topology(cfg.topology);
  const InterferenceGraph graph = build_interference_graph(net);
  const auto feasible_sets = enumerate_all_local_feasible(net, graph);
  // a fixed-rate list acts as explicit uniform sweep points
  const auto points = cfg.rates.is_sweep ? sweep_points(cfg.rates) : cfg.rates.fixed;

  out << "# schema: error_vs_load v1\n";
  out << "rate,method,seed,bethe_error,status\n";
  for (std::uint64_t seed : cfg.seeds) {
    for (double rate : points) {
      const ServiceRateVector target = ServiceRateVector::uniform(net.size(), rate);
      for (const std::string& method : cfg.methods) {
        std::string status = "ok";
        double error = std::nan("");
        try {
          if (is_sgd_method(method)) {
            const auto traj = adaptive::sgd_run(net, graph, feasible_sets, target,
                                                sgd_variant(method), cfg.slots, seed);
            error = traj.back().running_error;
          } else {
            const FugacityVector lambda =
                fugacities_for_method(method, net, graph, feasible_sets, target);
            const auto stats = sim::simulate(net, graph, feasible_sets, lambda,
                                             cfg.slots, cfg.burn_in, seed);
            error = sim::bethe_error(target.values(), stats.achieved);
          }
        } catch (const Error& e) {
          status = error_tag(e);
        }
        out << fmt_double(rate) << "," << method << "," << seed << ","
            << (status == "ok" ? fmt_double(error) : "nan") << "," << status
            << "\n";
      }
    }
  }
}

void run_error_vs_time(const ExperimentConfig& cfg, std::ostream& out) {
  const Network net = build_topology(cfg.topology);
  const InterferenceGraph graph = build_interference_graph(net);
  const auto feasible_sets = enumerate_all_local_feasible(net, graph);
  const std::vector<double> target_values =
      cfg.rates.is_sweep ? std::vector<double>(net.size(), cfg.rates.start)
                         : fixed_target(cfg.rates, net.size());
  const ServiceRateVector target{target_values};

  out << "# schema: error_vs_time v1\n";
  out << "slot,method,seed,running_error\n";
  for (std::uint64_t seed : cfg.seeds) {
    for (const std::string& method : cfg.methods) {
      if (is_sgd_method(method)) {
        const auto traj =
            adaptive::sgd_run(net, graph, feasible_sets, target,
                              sgd_variant(method), cfg.slots, seed,
                              adaptive::LambdaInit::One, cfg.sample_every);
        for (const auto& p : traj) {
          out << p.slot << "," << method << "," << seed << ","
              << fmt_double(p.running_error) << "\n";
        }
      } else {
        const FugacityVector lambda =
            fugacities_for_method(method, net, graph, feasible_sets, target);
        const auto traj = sim::simulate_error_trajectory(
            net, graph, feasible_sets, lambda, target.values(), cfg.slots,
            cfg.sample_every, seed);
        for (const auto& p : traj) {
          out << p.slot << "," << method << "," << seed << ","
              << fmt_double(p.running_error) << "\n";
        }
      }
    }
  }
}

void run_umax(const ExperimentConfig& cfg, std::ostream& out,
              std::ostream& fugacities_out) {
  const Network net = build_topology(cfg.topology);
  const InterferenceGraph graph = build_interference_graph(net);
  const auto feasible_sets = enumerate_all_local_feasible(net, graph);
  const UtilitySpec utilities = log_utilities(net.size());

  const auto result = adaptive::umax_run(
      net, graph, feasible_sets, utilities, cfg.theta,
      [](int t) { return 1.0 / static_cast<double>(t); }, cfg.max_iters,
      cfg.stop_norm);

  out << "# schema: umax v1\n";
  out << "iteration,subgradient_norm";
  for (int i = 0; i < net.size(); ++i) out << ",rate_" << i;
  out << "\n";
  for (const auto& p : result.trajectory) {
    out << p.iteration << "," << fmt_double(p.subgradient_norm);
    for (double r : p.rates) out << "," << fmt_double(r);
    out << "\n";
  }
  write_fugacities_csv(fugacities_out, result.lambdas);
}

void run_stationarity_audit(const ExperimentConfig& cfg, std::ostream& out) {
  const Network net = build_topology(cfg.topology);
  const InterferenceGraph graph = build_interference_graph(net);
  const auto feasible_sets = enumerate_all_local_feasible(net, graph);
  const std::vector<double> target_values =
      cfg.rates.is_sweep ? std::vector<double>(net.size(), cfg.rates.start)
                         : fixed_target(cfg.rates, net.size());
  const ServiceRateVector target{target_values};

  const auto result = bethe::bethe_fugacities(net, graph, feasible_sets, target);
  const auto report = bethe::check_stationarity(net, graph, feasible_sets,
                                                target, result.lambdas, cfg.tol);

  out << "# schema: stationarity_audit v1\n";
  out << "link,max_entropy_residual,fugacity_residual\n";
  for (int i = 0; i < net.size(); ++i) {
    out << i << "," << fmt_double(report.entropy_residuals[i]) << ","
        << fmt_double(report.fugacity_residuals[i]) << "\n";
  }
}

void run_experiment(const ExperimentConfig& cfg) {
  std::ofstream out(cfg.out, std::ios::binary);
  if (!out) throw StructuralError("cannot open " + cfg.out + " for writing");
  if (cfg.experiment == "error_vs_load") {
    run_error_vs_load(cfg, out);
  } else if (cfg.experiment == "error_vs_time" || cfg.experiment == "sgd_compare") {
    run_error_vs_time(cfg, out);
  } else if (cfg.experiment == "umax_convergence") {
    std::ofstream fug(cfg.out + ".fugacities.csv", std::ios::binary);
    if (!fug) throw StructuralError("cannot open fugacity output");
    run_umax(cfg, out, fug);
  } else if (cfg.experiment == "stationarity_audit") {
    run_stationarity_audit(cfg, out);
  } else {
    throw StructuralError("unknown experiment " + cfg.experiment);
  }
}

// ---------------------------------------------------------------------------
// CSV round trips

void write_fugacities_csv(std::ostream& out, const FugacityVector& lambda) {
  out << "# schema: fugacities v1\n";
  out << "link_id,log_lambda,lambda\n";
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    out << i << "," << fmt_double(lambda.log_lambda[i]) << ","
        << fmt_double(lambda.lambda(i)) << "\n";
  }
}

FugacityVector read_fugacities_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# schema: fugacities", 0) != 0) {
    throw StructuralError("fugacity csv: bad schema line");
  }
  if (!std::getline(in, line)) throw StructuralError("fugacity csv: missing header");
  std::vector<double> log_values;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto items = split_list(line);
    if (items.size() != 3) throw StructuralError("fugacity csv: bad row '" + line + "'");
    if (to_u64("link_id", items[0]) != log_values.size()) {
      throw StructuralError("fugacity csv: link ids must be 0..N-1 in order");
    }
    log_values.push_back(to_double("log_lambda", items[1]));
  }
  return FugacityVector::from_log(std::move(log_values));
}

void write_local_fugacities_csv(std::ostream& out,
                                const std::vector<bethe::LocalFugacities>& locals) {
  out << "# schema: local_fugacities v1\n";
  out << "owner,neighbor,beta\n";
  for (const auto& lf : locals) {
    for (std::size_t p = 0; p < lf.neighbors.size(); ++p) {
      out << lf.owner << "," << lf.neighbors[p] << "," << fmt_double(lf.beta[p])
          << "\n";
    }
  }
}

void write_stats_csv(std::ostream& out, const std::vector<double>& target,
                     const sim::ServiceRateStats& stats) {
  out << "# schema: service_rate_stats v1\n";
  out << "link_id,target,achieved,active_slots,window\n";
  for (std::size_t i = 0; i < stats.achieved.size(); ++i) {
    const double t = i < target.size() ? target[i] : std::nan("");
    out << i << "," << fmt_double(t) << "," << fmt_double(stats.achieved[i])
        << "," << stats.active_slots[i] << "," << stats.measured << "\n";
  }
}

}  // namespace csma::harness
