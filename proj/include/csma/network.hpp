#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace csma {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Vec2 a, Vec2 b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Radio parameters of a spatial SINR network. The threshold is stored as a
/// linear ratio; use sinr_threshold_from_db to convert a configured dB value.
struct RadioParams {
  double path_loss_exponent = 3.0;
  double close_in_radius = 2.4;
  double sinr_threshold = 31.6227766016837933;  // 15 dB
  double noise_power = 0.0;
};

inline double sinr_threshold_from_db(double db) {
  return std::pow(10.0, db / 10.0);
}

struct Link {
  int id = 0;
  Vec2 tx;
  Vec2 rx;
  double power = 1.0;
};

enum class NetworkKind { SinrSpatial, ConflictGraph };

/// A set of links plus the interference substrate: either spatial geometry
/// with radio parameters, or an explicit symmetric conflict relation.
struct Network {
  NetworkKind kind = NetworkKind::SinrSpatial;
  std::vector<Link> links;
  RadioParams radio;                            // kind == SinrSpatial only
  std::vector<std::vector<std::uint8_t>> conflict;  // kind == ConflictGraph only

  int size() const { return static_cast<int>(links.size()); }
  bool conflicts(int i, int j) const { return conflict[i][j] != 0; }
};

struct RandomNetworkConfig {
  int n_links = 20;
  double plane_side = 8.0;
  double link_length = 0.5;
  RadioParams radio;
};

/// Transmitters i.i.d. uniform on [0, side]^2; each receiver at distance
/// link_length in a uniformly random direction. Draw order per link:
/// tx.x, tx.y, direction angle. Deterministic in the seed.
Network generate_random_network(const RandomNetworkConfig& cfg,
                                std::uint64_t seed);

/// Wraps a symmetric, irreflexive adjacency into a conflict-graph network.
/// Link geometry is synthetic (all positions zero, unit power).
Network build_conflict_graph_network(
    const std::vector<std::vector<std::uint8_t>>& adjacency);

// Common conflict topologies.
std::vector<std::vector<std::uint8_t>> grid_adjacency(int rows, int cols);
std::vector<std::vector<std::uint8_t>> complete_adjacency(int n);
std::vector<std::vector<std::uint8_t>> path_adjacency(int n);
std::vector<std::vector<std::uint8_t>> star_adjacency(int n);
std::vector<std::vector<std::uint8_t>> cycle_adjacency(int n);
std::vector<std::vector<std::uint8_t>> empty_adjacency(int n);

// Flat text serialization (format documented in the README). Stable field
// order; parse(serialize(net)) reproduces the network byte-identically.
std::string serialize_network(const Network& net);
Network parse_network(std::istream& in);
Network parse_network(const std::string& text);
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

}  // namespace csma
