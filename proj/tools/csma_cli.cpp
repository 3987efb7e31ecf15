// Command-line front end: topology generation, fugacity computation, CSMA
// simulation, SGD and utility-maximization runs, experiment sweeps, and the
// stationarity audit. Exit code 0 on success, 1 with a diagnostic on stderr
// for any structural error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "csma/experiments.hpp"

namespace {

using namespace csma;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StructuralError("cannot open " + path + " for writing");
  return out;
}

ServiceRateVector target_for(const Network& net, double rate,
                             const std::vector<double>& rates) {
  if (!rates.empty()) {
    if (rates.size() == 1) return ServiceRateVector::uniform(net.size(), rates[0]);
    return ServiceRateVector(rates);
  }
  return ServiceRateVector::uniform(net.size(), rate);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bethe-approximated CSMA fugacity toolkit"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "construct and save a network");
  harness::TopologySpec topo;
  std::string topo_kind = "random_sinr";
  std::string gen_out;
  std::uint64_t gen_seed = 1;
  gen->add_option("--kind", topo_kind, "random_sinr | grid | complete | adjacency_file");
  gen->add_option("--n", topo.n_links, "links (random_sinr) or nodes (complete)");
  gen->add_option("--side", topo.plane_side, "plane side");
  gen->add_option("--len", topo.link_length, "link length");
  gen->add_option("--alpha", topo.path_loss_exponent, "path loss exponent");
  gen->add_option("--ri", topo.close_in_radius, "close-in radius");
  gen->add_option("--tdb", topo.sinr_threshold_db, "SINR threshold in dB");
  gen->add_option("--noise", topo.noise_power, "noise power");
  gen->add_flag("--as-conflict", topo.as_conflict,
                "convert interference edges into a conflict graph");
  gen->add_option("--rows", topo.rows, "grid rows");
  gen->add_option("--cols", topo.cols, "grid cols");
  gen->add_option("--file", topo.file, "adjacency network file");
  gen->add_option("--seed", gen_seed, "topology seed")->required();
  gen->add_option("--out", gen_out, "output network file")->required();

  // fugacities
  auto* fug = app.add_subcommand("fugacities", "compute fugacities for target rates");
  std::string fug_net, fug_method = "bethe_sinr", fug_out, fug_locals_out;
  double fug_rate = 0.2;
  std::vector<double> fug_rates;
  fug->add_option("--network", fug_net, "network file")->required();
  fug->add_option("--method", fug_method,
                  "bethe_sinr | bethe_vertex | bethe_edge | exact_oracle");
  fug->add_option("--rate", fug_rate, "uniform target rate");
  fug->add_option("--rates", fug_rates, "per-link target rates")->delimiter(',');
  fug->add_option("--locals-out", fug_locals_out,
                  "also write local fugacities (bethe_sinr only)");
  fug->add_option("--out", fug_out, "output CSV")->required();

  // simulate
  auto* simc = app.add_subcommand("simulate", "run the CSMA chain under fixed fugacities");
  std::string sim_net, sim_fug, sim_out;
  std::uint64_t sim_slots = 1000000, sim_burn = 100000, sim_seed = 1;
  double sim_target = std::nan("");
  simc->add_option("--network", sim_net, "network file")->required();
  simc->add_option("--fugacities", sim_fug, "fugacity CSV")->required();
  simc->add_option("--slots", sim_slots, "total slots");
  simc->add_option("--burn-in", sim_burn, "burn-in slots");
  simc->add_option("--target", sim_target, "uniform target rate (reporting only)");
  std::string sim_traj_out;
  std::uint64_t sim_every = 10000;
  simc->add_option("--trajectory-out", sim_traj_out,
                   "also emit (slot, running error) samples; needs --target");
  simc->add_option("--sample-every", sim_every, "trajectory sampling interval");
  simc->add_option("--seed", sim_seed, "chain seed")->required();
  simc->add_option("--out", sim_out, "output CSV")->required();

  // sgd
  auto* sgd = app.add_subcommand("sgd", "stochastic-gradient fugacity adaptation");
  std::string sgd_net, sgd_variant = "sgd1", sgd_out, sgd_init = "zero";
  double sgd_rate = 0.2;
  std::uint64_t sgd_slots = 1000000, sgd_seed = 1, sgd_every = 10000;
  sgd->add_option("--network", sgd_net, "network file")->required();
  sgd->add_option("--variant", sgd_variant, "sgd1 | sgd2");
  sgd->add_option("--rate", sgd_rate, "uniform target rate");
  sgd->add_option("--slots", sgd_slots, "total slots");
  sgd->add_option("--sample-every", sgd_every, "error sampling interval");
  sgd->add_option("--init", sgd_init,
                  "zero (ln lambda = 0, lambda = 1) | paper_zero (lambda ~ 0)");
  sgd->add_option("--seed", sgd_seed, "chain seed")->required();
  sgd->add_option("--out", sgd_out, "output CSV")->required();

  // umax
  auto* umax = app.add_subcommand("umax", "local utility maximization (log utilities)");
  std::string umax_net, umax_out, umax_fug_out;
  double umax_theta = 1.0, umax_stop = 1e-2;
  int umax_iters = 500;
  umax->add_option("--network", umax_net, "network file")->required();
  umax->add_option("--theta", umax_theta, "entropy-scaling parameter");
  umax->add_option("--max-iters", umax_iters, "iteration cap");
  umax->add_option("--stop-norm", umax_stop, "subgradient-norm stop threshold");
  umax->add_option("--fugacities-out", umax_fug_out, "final fugacity CSV");
  umax->add_option("--out", umax_out, "trajectory CSV")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run a configured experiment");
  std::string sweep_config, sweep_out_override;
  sweep->add_option("--config", sweep_config, "experiment config file")->required();
  sweep->add_option("--out", sweep_out_override, "override the configured output path");

  // audit
  auto* audit = app.add_subcommand("audit", "Bethe stationarity audit");
  std::string audit_net, audit_out;
  double audit_rate = 0.2, audit_tol = 1e-6;
  audit->add_option("--network", audit_net, "network file")->required();
  audit->add_option("--rate", audit_rate, "uniform target rate");
  audit->add_option("--tol", audit_tol, "residual tolerance");
  audit->add_option("--out", audit_out, "output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      if (topo_kind == "random_sinr") topo.kind = harness::TopologySpec::Kind::RandomSinr;
      else if (topo_kind == "grid") topo.kind = harness::TopologySpec::Kind::Grid;
      else if (topo_kind == "complete") {
        topo.kind = harness::TopologySpec::Kind::Complete;
        topo.complete_n = topo.n_links;
      } else if (topo_kind == "adjacency_file") topo.kind = harness::TopologySpec::Kind::AdjacencyFile;
      else throw StructuralError("unknown topology kind " + topo_kind);
      topo.topology_seed = gen_seed;
      save_network(harness::build_topology(topo), gen_out);
    } else if (*fug) {
      const Network net = load_network(fug_net);
      const InterferenceGraph graph = build_interference_graph(net);
      const auto feasible_sets = enumerate_all_local_feasible(net, graph);
      const ServiceRateVector target = target_for(net, fug_rate, fug_rates);
      if (!fug_locals_out.empty()) {
        const auto result = bethe::bethe_fugacities(net, graph, feasible_sets, target);
        auto out = open_out(fug_out);
        harness::write_fugacities_csv(out, result.lambdas);
        auto lout = open_out(fug_locals_out);
        harness::write_local_fugacities_csv(lout, result.locals);
      } else {
        const FugacityVector lambda = harness::fugacities_for_method(
            fug_method, net, graph, feasible_sets, target);
        auto out = open_out(fug_out);
        harness::write_fugacities_csv(out, lambda);
      }
    } else if (*simc) {
      const Network net = load_network(sim_net);
      const InterferenceGraph graph = build_interference_graph(net);
      const auto feasible_sets = enumerate_all_local_feasible(net, graph);
      std::ifstream fin(sim_fug, std::ios::binary);
      if (!fin) throw StructuralError("cannot open " + sim_fug);
      const FugacityVector lambda = harness::read_fugacities_csv(fin);
      const auto stats = sim::simulate(net, graph, feasible_sets, lambda,
                                       sim_slots, sim_burn, sim_seed);
      auto out = open_out(sim_out);
      harness::write_stats_csv(
          out, std::vector<double>(net.size(), sim_target), stats);
      if (!sim_traj_out.empty()) {
        if (std::isnan(sim_target)) {
          throw StructuralError("--trajectory-out requires --target");
        }
        const auto traj = sim::simulate_error_trajectory(
            net, graph, feasible_sets, lambda,
            std::vector<double>(net.size(), sim_target), sim_slots, sim_every,
            sim_seed);
        auto tout = open_out(sim_traj_out);
        tout << "# schema: error_trajectory v1\n";
        tout << "slot,running_error\n";
        for (const auto& p : traj) {
          tout << p.slot << "," << harness::fmt_double(p.running_error) << "\n";
        }
      }
    } else if (*sgd) {
      const Network net = load_network(sgd_net);
      const InterferenceGraph graph = build_interference_graph(net);
      const auto feasible_sets = enumerate_all_local_feasible(net, graph);
      const ServiceRateVector target = ServiceRateVector::uniform(net.size(), sgd_rate);
      const auto variant = sgd_variant == "sgd2" ? adaptive::sgd2() : adaptive::sgd1();
      const auto init = sgd_init == "paper_zero" ? adaptive::LambdaInit::NearZero
                                                 : adaptive::LambdaInit::One;
      const auto traj = adaptive::sgd_run(net, graph, feasible_sets, target,
                                          variant, sgd_slots, sgd_seed, init,
                                          sgd_every);
      auto out = open_out(sgd_out);
      out << "# schema: sgd_trajectory v1\n";
      out << "slot";
      for (int i = 0; i < net.size(); ++i) out << ",rate_" << i;
      out << ",running_error\n";
      for (const auto& p : traj) {
        out << p.slot;
        for (double r : p.running_rates) out << "," << harness::fmt_double(r);
        out << "," << harness::fmt_double(p.running_error) << "\n";
      }
    } else if (*umax) {
      harness::ExperimentConfig cfg;
      cfg.experiment = "umax_convergence";
      cfg.topology.kind = harness::TopologySpec::Kind::AdjacencyFile;
      cfg.topology.file = umax_net;
      cfg.theta = umax_theta;
      cfg.max_iters = umax_iters;
      cfg.stop_norm = umax_stop;
      auto out = open_out(umax_out);
      auto fug_out = open_out(umax_fug_out.empty() ? umax_out + ".fugacities.csv"
                                                   : umax_fug_out);
      harness::run_umax(cfg, out, fug_out);
    } else if (*sweep) {
      harness::ExperimentConfig cfg = harness::load_config(sweep_config);
      if (!sweep_out_override.empty()) cfg.out = sweep_out_override;
      harness::run_experiment(cfg);
    } else if (*audit) {
      harness::ExperimentConfig cfg;
      cfg.experiment = "stationarity_audit";
      cfg.topology.kind = harness::TopologySpec::Kind::AdjacencyFile;
      cfg.topology.file = audit_net;
      cfg.rates.is_sweep = false;
      cfg.rates.fixed = {audit_rate};
      cfg.tol = audit_tol;
      auto out = open_out(audit_out);
      harness::run_stationarity_audit(cfg, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
