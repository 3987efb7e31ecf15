#pragma once

#include <cstdint>
#include <vector>

#include "csma/network.hpp"

namespace csma {

/// Per-link neighborhoods N_i of the interference graph. Each N_i is sorted
/// ascending and always contains i itself; degrees[i] == |N_i| is the
/// factor-graph variable-node degree.
struct InterferenceGraph {
  std::vector<std::vector<int>> neighborhoods;
  std::vector<int> degrees;

  int size() const { return static_cast<int>(neighborhoods.size()); }
  /// Index of link j inside N_i, or -1 if j is not a neighbor of i.
  int pos_in(int i, int j) const;
};

/// For spatial networks an edge (i, j) is present iff d(tx_j, rx_i) <= R_I or
/// d(tx_i, rx_j) <= R_I; for conflict-graph networks the adjacency is used.
InterferenceGraph build_interference_graph(const Network& net);

/// SINR at the receiver of link j when the links in `active` transmit.
/// `active` must contain j and is expected to be restricted to N_j
/// (interference from farther links is ignored by construction). Returns
/// +infinity when noise and interference are both zero.
double compute_sinr(const Network& net, int receiver,
                    const std::vector<int>& active);

/// Global schedule: bits[i] is the activity of link i.
using Schedule = std::vector<std::uint8_t>;

constexpr int kLocalEnumerationCap = 22;

/// The local feasible set I_i: bitmask-encoded on/off patterns over N_i.
/// Bit p of a pattern is the activity of neighbors[p] (the sorted order of
/// N_i). Every pattern with the owner bit clear is a member; a pattern with
/// the owner active is a member iff the owner's constraint holds under it.
struct LocalFeasibleSet {
  int owner = 0;
  std::vector<int> neighbors;  // == graph.neighborhoods[owner]
  int owner_pos = 0;
  std::vector<std::uint32_t> patterns;  // ascending
  std::vector<std::uint64_t> member_bits;

  std::size_t size() const { return patterns.size(); }
  bool contains(std::uint32_t pattern) const {
    return (member_bits[pattern >> 6] >> (pattern & 63)) & 1u;
  }
};

LocalFeasibleSet enumerate_local_feasible(const Network& net,
                                          const InterferenceGraph& graph,
                                          int i);
std::vector<LocalFeasibleSet> enumerate_all_local_feasible(
    const Network& net, const InterferenceGraph& graph);

/// Restriction of a global schedule to N_i, as a local bitmask.
std::uint32_t local_pattern(const InterferenceGraph& graph, const Schedule& x,
                            int i);

/// True iff every active link meets its own constraint under x: SINR >= T
/// for spatial networks, no active conflict-neighbor for conflict graphs.
bool is_feasible(const Network& net, const InterferenceGraph& graph,
                 const Schedule& x);

}  // namespace csma
