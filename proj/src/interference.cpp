#include "csma/interference.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "csma/errors.hpp"

namespace csma {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// P * d^{-alpha}; coincident points give infinite received power.
double received_power(const Network& net, int from_tx, Vec2 at) {
  const Link& src = net.links[from_tx];
  const double d = distance(src.tx, at);
  if (d == 0.0) return kInf;
  return src.power * std::pow(d, -net.radio.path_loss_exponent);
}

}  // namespace

int InterferenceGraph::pos_in(int i, int j) const {
  const auto& nb = neighborhoods[i];
  auto it = std::lower_bound(nb.begin(), nb.end(), j);
  if (it == nb.end() || *it != j) return -1;
  return static_cast<int>(it - nb.begin());
}

InterferenceGraph build_interference_graph(const Network& net) {
  const int n = net.size();
  InterferenceGraph g;
  g.neighborhoods.resize(n);
  g.degrees.resize(n);
  for (int i = 0; i < n; ++i) {
    auto& nb = g.neighborhoods[i];
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        nb.push_back(j);
        continue;
      }
      bool edge = false;
      if (net.kind == NetworkKind::ConflictGraph) {
        edge = net.conflicts(i, j);
      } else {
        const double r = net.radio.close_in_radius;
        edge = distance(net.links[j].tx, net.links[i].rx) <= r ||
               distance(net.links[i].tx, net.links[j].rx) <= r;
      }
      if (edge) nb.push_back(j);
    }
    g.degrees[i] = static_cast<int>(nb.size());
  }
  return g;
}

double compute_sinr(const Network& net, int receiver,
                    const std::vector<int>& active) {
  if (net.kind != NetworkKind::SinrSpatial) {
    throw StructuralError("compute_sinr requires a sinr_spatial network");
  }
  const Link& lk = net.links[receiver];
  const double signal = received_power(net, receiver, lk.rx);
  double denom = net.radio.noise_power;
  for (int k : active) {
    if (k == receiver) continue;
    denom += received_power(net, k, lk.rx);
  }
  if (denom == 0.0) return kInf;
  if (std::isinf(denom)) return 0.0;
  return signal / denom;
}

LocalFeasibleSet enumerate_local_feasible(const Network& net,
                                          const InterferenceGraph& graph,
                                          int i) {
  const auto& nb = graph.neighborhoods[i];
  const int m = static_cast<int>(nb.size());
  if (m > kLocalEnumerationCap) {
    throw EnumerationTooLargeError(
        i, m,
        "local enumeration too large at link " + std::to_string(i) +
            ": |N_i| = " + std::to_string(m) + " exceeds cap " +
            std::to_string(kLocalEnumerationCap));
  }

  LocalFeasibleSet set;
  set.owner = i;
  set.neighbors = nb;
  set.owner_pos = graph.pos_in(i, i);
  const std::uint32_t total = 1u << m;
  const std::uint32_t owner_bit = 1u << set.owner_pos;

  // Interference accumulated at rx_i per neighbor-only mask, built by the
  // lowest-set-bit recurrence.
  std::vector<double> interference;
  double signal = 0.0;
  const bool sinr = net.kind == NetworkKind::SinrSpatial;
  if (sinr) {
    interference.assign(total, 0.0);
    std::vector<double> contrib(m, 0.0);
    for (int p = 0; p < m; ++p) {
      if (nb[p] == i) continue;
      const double d = distance(net.links[nb[p]].tx, net.links[i].rx);
      contrib[p] = d == 0.0 ? std::numeric_limits<double>::infinity()
                            : net.links[nb[p]].power *
                                  std::pow(d, -net.radio.path_loss_exponent);
    }
    for (std::uint32_t mask = 1; mask < total; ++mask) {
      const int low = std::countr_zero(mask);
      interference[mask] = interference[mask & (mask - 1)] + contrib[low];
    }
    const double d_ii = distance(net.links[i].tx, net.links[i].rx);
    signal = d_ii == 0.0 ? std::numeric_limits<double>::infinity()
                         : net.links[i].power *
                               std::pow(d_ii, -net.radio.path_loss_exponent);
  }

  set.member_bits.assign((total + 63) / 64, 0);
  auto add = [&](std::uint32_t pattern) {
    set.patterns.push_back(pattern);
    set.member_bits[pattern >> 6] |= 1ull << (pattern & 63);
  };
  for (std::uint32_t pattern = 0; pattern < total; ++pattern) {
    if (!(pattern & owner_bit)) {
      add(pattern);
      continue;
    }
    bool ok;
    if (sinr) {
      const double denom =
          net.radio.noise_power + interference[pattern & ~owner_bit];
      // zero denominator = infinite SINR; infinite interference = SINR 0
      ok = denom == 0.0 ||
           (!std::isinf(denom) && signal / denom >= net.radio.sinr_threshold);
    } else {
      ok = (pattern & ~owner_bit) == 0;
    }
    if (ok) add(pattern);
  }
  return set;
}

std::vector<LocalFeasibleSet> enumerate_all_local_feasible(
    const Network& net, const InterferenceGraph& graph) {
  std::vector<LocalFeasibleSet> sets;
  sets.reserve(net.size());
  for (int i = 0; i < net.size(); ++i) {
    sets.push_back(enumerate_local_feasible(net, graph, i));
  }
  return sets;
}

std::uint32_t local_pattern(const InterferenceGraph& graph, const Schedule& x,
                            int i) {
  const auto& nb = graph.neighborhoods[i];
  std::uint32_t pattern = 0;
  for (std::size_t p = 0; p < nb.size(); ++p) {
    if (x[nb[p]]) pattern |= 1u << p;
  }
  return pattern;
}

bool is_feasible(const Network& net, const InterferenceGraph& graph,
                 const Schedule& x) {
  for (int j = 0; j < net.size(); ++j) {
    if (!x[j]) continue;
    if (net.kind == NetworkKind::ConflictGraph) {
      for (int k : graph.neighborhoods[j]) {
        if (k != j && x[k]) return false;
      }
    } else {
      std::vector<int> active;
      for (int k : graph.neighborhoods[j]) {
        if (x[k]) active.push_back(k);
      }
      if (compute_sinr(net, j, active) < net.radio.sinr_threshold) return false;
    }
  }
  return true;
}

}  // namespace csma
