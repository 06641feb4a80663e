#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "decman/numerics.hpp"
#include "decman/parallel.hpp"

namespace decman {

enum class Topology { Ring, Complete, ErdosRenyi };

struct TopologySpec {
  Topology kind = Topology::Ring;
  double p = 0.0;  // ErdosRenyi edge probability
};

/// Undirected simple graph on agents 0..n-1. Edges are stored once with
/// i < j, sorted.
class Graph {
 public:
  Graph(int n, std::vector<std::pair<int, int>> edges);

  int n() const { return n_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  std::vector<int> degrees() const;
  bool connected() const;
  bool has_edge(int i, int j) const;

  /// "n" on the first line, then one "i j" pair per line.
  std::string to_edge_list() const;
  static Graph from_edge_list(const std::string& text);

 private:
  int n_;
  std::vector<std::pair<int, int>> edges_;
};

/// ErdosRenyi graphs that come out disconnected get ring edges (i, i+1 mod n)
/// added in order of i until connected.
Graph build_graph(const TopologySpec& topology, int n, std::uint64_t seed);

/// Symmetric doubly stochastic W with positive diagonal, its second-largest
/// singular value, and the number of gossip rounds t applied per iteration.
class MixingMatrix {
 public:
  /// Validates every invariant; throws InvalidInput otherwise.
  MixingMatrix(Matrix w, int t = 1);

  int n() const { return static_cast<int>(w_.rows()); }
  const Matrix& weights() const { return w_; }
  double sigma2() const { return sigma2_; }
  int t() const { return t_; }
  MixingMatrix with_steps(int t) const;

  /// Nonzero entries of row i as (column, weight), columns ascending.
  const std::vector<std::pair<int, double>>& row(int i) const { return rows_[i]; }

 private:
  Matrix w_;
  double sigma2_ = 0.0;
  int t_ = 1;
  std::vector<std::vector<std::pair<int, double>>> rows_;
};

/// W_ij = 1 / (1 + max(deg_i, deg_j)) on edges, diagonal takes the rest.
MixingMatrix metropolis_weights(const Graph& g, int t = 1);

using StackedState = std::vector<Matrix>;

/// y_i = sum_j (W^steps)_ij x_j, applied as `steps` single rounds with a
/// fixed summation order.
StackedState mix(const MixingMatrix& m, const StackedState& x, int steps, WorkerPool* pool = nullptr);

/// Smallest integer t with t > ceil(log_sigma2(gamma / (24 sqrt(n) zeta))) and
/// t > ceil(log_sigma2(1/2)). Returns 1 when sigma2 == 0.
int consensus_radius_t(double sigma2, double gamma, double zeta, int n);

}  // namespace decman
