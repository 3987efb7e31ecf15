#include "csma/network.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "csma/errors.hpp"
#include "csma/rng.hpp"

namespace csma {

namespace {

constexpr double kPi = 3.14159265358979323846;

void validate_adjacency(const std::vector<std::vector<std::uint8_t>>& adj) {
  const std::size_t n = adj.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (adj[i].size() != n) {
      throw StructuralError("adjacency matrix is not square");
    }
    if (adj[i][i]) {
      throw StructuralError("adjacency must be irreflexive (self-loop at " +
                            std::to_string(i) + ")");
    }
    for (std::size_t j = 0; j < n; ++j) {
      if ((adj[i][j] != 0) != (adj[j][i] != 0)) {
        throw StructuralError("adjacency must be symmetric (" +
                              std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Network generate_random_network(const RandomNetworkConfig& cfg,
                                std::uint64_t seed) {
  if (cfg.n_links < 1) throw StructuralError("n_links must be >= 1");
  if (!(cfg.plane_side > 0.0)) throw StructuralError("plane_side must be > 0");
  if (!(cfg.link_length > 0.0)) throw StructuralError("link_length must be > 0");

  Xoshiro256pp rng(seed);
  Network net;
  net.kind = NetworkKind::SinrSpatial;
  net.radio = cfg.radio;
  net.links.reserve(cfg.n_links);
  for (int i = 0; i < cfg.n_links; ++i) {
    Link link;
    link.id = i;
    link.tx = {cfg.plane_side * rng.uniform(), cfg.plane_side * rng.uniform()};
    const double angle = 2.0 * kPi * rng.uniform();
    link.rx = {link.tx.x + cfg.link_length * std::cos(angle),
               link.tx.y + cfg.link_length * std::sin(angle)};
    link.power = 1.0;
    net.links.push_back(link);
  }
  return net;
}

Network build_conflict_graph_network(
    const std::vector<std::vector<std::uint8_t>>& adjacency) {
  validate_adjacency(adjacency);
  Network net;
  net.kind = NetworkKind::ConflictGraph;
  net.conflict = adjacency;
  net.links.resize(adjacency.size());
  for (std::size_t i = 0; i < adjacency.size(); ++i) {
    net.links[i].id = static_cast<int>(i);
    net.links[i].power = 1.0;
  }
  return net;
}

std::vector<std::vector<std::uint8_t>> grid_adjacency(int rows, int cols) {
  const int n = rows * cols;
  std::vector<std::vector<std::uint8_t>> adj(n, std::vector<std::uint8_t>(n, 0));
  auto at = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) adj[at(r, c)][at(r, c + 1)] = adj[at(r, c + 1)][at(r, c)] = 1;
      if (r + 1 < rows) adj[at(r, c)][at(r + 1, c)] = adj[at(r + 1, c)][at(r, c)] = 1;
    }
  }
  return adj;
}

std::vector<std::vector<std::uint8_t>> complete_adjacency(int n) {
  std::vector<std::vector<std::uint8_t>> adj(n, std::vector<std::uint8_t>(n, 1));
  for (int i = 0; i < n; ++i) adj[i][i] = 0;
  return adj;
}

std::vector<std::vector<std::uint8_t>> path_adjacency(int n) {
  std::vector<std::vector<std::uint8_t>> adj(n, std::vector<std::uint8_t>(n, 0));
  for (int i = 0; i + 1 < n; ++i) adj[i][i + 1] = adj[i + 1][i] = 1;
  return adj;
}

std::vector<std::vector<std::uint8_t>> star_adjacency(int n) {
  std::vector<std::vector<std::uint8_t>> adj(n, std::vector<std::uint8_t>(n, 0));
  for (int i = 1; i < n; ++i) adj[0][i] = adj[i][0] = 1;
  return adj;
}

std::vector<std::vector<std::uint8_t>> cycle_adjacency(int n) {
  auto adj = path_adjacency(n);
  if (n > 2) adj[0][n - 1] = adj[n - 1][0] = 1;
  return adj;
}

std::vector<std::vector<std::uint8_t>> empty_adjacency(int n) {
  return std::vector<std::vector<std::uint8_t>>(n, std::vector<std::uint8_t>(n, 0));
}

std::string serialize_network(const Network& net) {
  std::ostringstream out;
  out << "# csma-network v1\n";
  if (net.kind == NetworkKind::SinrSpatial) {
    out << "kind sinr_spatial\n";
    out << "path_loss_exponent " << fmt(net.radio.path_loss_exponent) << "\n";
    out << "close_in_radius " << fmt(net.radio.close_in_radius) << "\n";
    out << "sinr_threshold " << fmt(net.radio.sinr_threshold) << "\n";
    out << "noise_power " << fmt(net.radio.noise_power) << "\n";
  } else {
    out << "kind conflict_graph\n";
  }
  out << "links " << net.size() << "\n";
  for (const Link& l : net.links) {
    out << l.id << " " << fmt(l.tx.x) << " " << fmt(l.tx.y) << " "
        << fmt(l.rx.x) << " " << fmt(l.rx.y) << " " << fmt(l.power) << "\n";
  }
  if (net.kind == NetworkKind::ConflictGraph) {
    std::size_t edges = 0;
    for (int i = 0; i < net.size(); ++i)
      for (int j = i + 1; j < net.size(); ++j)
        if (net.conflict[i][j]) ++edges;
    out << "edges " << edges << "\n";
    for (int i = 0; i < net.size(); ++i)
      for (int j = i + 1; j < net.size(); ++j)
        if (net.conflict[i][j]) out << i << " " << j << "\n";
  }
  return out.str();
}

Network parse_network(std::istream& in) {
  std::string tok;
  auto next = [&](const char* what) {
    if (!(in >> tok)) throw StructuralError(std::string("network file: missing ") + what);
    return tok;
  };
  // header comment line
  std::string line;
  std::getline(in, line);
  if (line.rfind("# csma-network", 0) != 0) {
    throw StructuralError("network file: bad magic line");
  }

  Network net;
  if (next("kind") != "kind") throw StructuralError("network file: expected 'kind'");
  const std::string kind = next("kind value");
  int n = 0;
  if (kind == "sinr_spatial") {
    net.kind = NetworkKind::SinrSpatial;
    for (;;) {
      const std::string key = next("key");
      if (key == "links") break;
      double value = 0.0;
      if (!(in >> value)) throw StructuralError("network file: bad value for " + key);
      if (key == "path_loss_exponent") net.radio.path_loss_exponent = value;
      else if (key == "close_in_radius") net.radio.close_in_radius = value;
      else if (key == "sinr_threshold") net.radio.sinr_threshold = value;
      else if (key == "noise_power") net.radio.noise_power = value;
      else throw StructuralError("network file: unknown key " + key);
    }
  } else if (kind == "conflict_graph") {
    net.kind = NetworkKind::ConflictGraph;
    if (next("links") != "links") throw StructuralError("network file: expected 'links'");
  } else {
    throw StructuralError("network file: unknown kind " + kind);
  }
  if (!(in >> n) || n < 0) throw StructuralError("network file: bad link count");
  net.links.resize(n);
  for (int i = 0; i < n; ++i) {
    Link& l = net.links[i];
    if (!(in >> l.id >> l.tx.x >> l.tx.y >> l.rx.x >> l.rx.y >> l.power)) {
      throw StructuralError("network file: truncated link row");
    }
    if (l.id != i) throw StructuralError("network file: link ids must be 0..N-1 in order");
  }
  if (net.kind == NetworkKind::ConflictGraph) {
    if (next("edges") != "edges") throw StructuralError("network file: expected 'edges'");
    std::size_t m = 0;
    if (!(in >> m)) throw StructuralError("network file: bad edge count");
    net.conflict.assign(n, std::vector<std::uint8_t>(n, 0));
    for (std::size_t e = 0; e < m; ++e) {
      int i = 0, j = 0;
      if (!(in >> i >> j)) throw StructuralError("network file: truncated edge row");
      if (i < 0 || j < 0 || i >= n || j >= n || i == j) {
        throw StructuralError("network file: bad edge " + std::to_string(i) +
                              "," + std::to_string(j));
      }
      net.conflict[i][j] = net.conflict[j][i] = 1;
    }
  }
  return net;
}

Network parse_network(const std::string& text) {
  std::istringstream in(text);
  return parse_network(in);
}

void save_network(const Network& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StructuralError("cannot open " + path + " for writing");
  out << serialize_network(net);
}

Network load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StructuralError("cannot open " + path);
  return parse_network(in);
}

}  // namespace csma
