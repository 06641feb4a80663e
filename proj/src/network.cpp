#include "decman/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "decman/errors.hpp"

namespace decman {

Graph::Graph(int n, std::vector<std::pair<int, int>> edges) : n_(n) {
  if (n < 2) throw InvalidInput("graph: need at least 2 agents");
  for (auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw InvalidInput("graph: edge (" + std::to_string(i) + "," + std::to_string(j) +
                         ") out of range");
    }
    if (i == j) throw InvalidInput("graph: self-loop at " + std::to_string(i));
    if (i > j) std::swap(i, j);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);
}

std::vector<int> Graph::degrees() const {
  std::vector<int> deg(n_, 0);
  for (const auto& [i, j] : edges_) {
    ++deg[i];
    ++deg[j];
  }
  return deg;
}

bool Graph::has_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return std::binary_search(edges_.begin(), edges_.end(), std::make_pair(i, j));
}

bool Graph::connected() const {
  std::vector<int> parent(n_);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  int components = n_;
  for (const auto& [i, j] : edges_) {
    const int a = find(i), b = find(j);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

std::string Graph::to_edge_list() const {
  std::ostringstream out;
  out << n_ << '\n';
  for (const auto& [i, j] : edges_) out << i << ' ' << j << '\n';
  return out.str();
}

Graph Graph::from_edge_list(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  int n = -1;
  std::vector<std::pair<int, int>> edges;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    if (n < 0) {
      if (!(fields >> n) || n < 2) throw FormatError("edge list: bad agent count", lineno);
      continue;
    }
    int i = 0, j = 0;
    if (!(fields >> i >> j)) throw FormatError("edge list: expected 'i j'", lineno);
    std::string rest;
    if (fields >> rest) throw FormatError("edge list: trailing token '" + rest + "'", lineno);
    if (i < 0 || j < 0 || i >= n || j >= n || i == j) {
      throw FormatError("edge list: invalid edge", lineno);
    }
    edges.emplace_back(i, j);
  }
  if (n < 0) throw FormatError("edge list: empty input");
  return Graph(n, std::move(edges));
}

Graph build_graph(const TopologySpec& topology, int n, std::uint64_t seed) {
  if (n < 2) throw InvalidInput("build_graph: n must be >= 2");
  std::vector<std::pair<int, int>> edges;
  switch (topology.kind) {
    case Topology::Ring:
      for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
      return Graph(n, std::move(edges));
    case Topology::Complete:
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
      return Graph(n, std::move(edges));
    case Topology::ErdosRenyi: {
      if (!(topology.p > 0.0 && topology.p <= 1.0)) {
        throw InvalidInput("build_graph: ErdosRenyi probability must lie in (0, 1]");
      }
      Rng rng(seed);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (unit(rng) < topology.p) edges.emplace_back(i, j);
      Graph g(n, edges);
      for (int i = 0; i < n && !g.connected(); ++i) {
        edges.emplace_back(i, (i + 1) % n);
        g = Graph(n, edges);
      }
      return g;
    }
  }
  throw InvalidInput("build_graph: unknown topology");
}

MixingMatrix::MixingMatrix(Matrix w, int t) : w_(std::move(w)), t_(t) {
  const Eigen::Index n = w_.rows();
  if (n < 1 || w_.cols() != n) throw InvalidInput("mixing matrix must be square");
  if (t_ < 1) throw InvalidInput("mixing matrix: t must be >= 1");
  if (!w_.allFinite()) throw InvalidInput("mixing matrix has non-finite entries");
  if ((w_ - w_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw InvalidInput("mixing matrix is not symmetric");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(w_.row(i).sum() - 1.0) > 1e-12) {
      throw InvalidInput("mixing matrix row " + std::to_string(i) + " does not sum to 1");
    }
    if (!(w_(i, i) > 0.0)) throw InvalidInput("mixing matrix diagonal must be positive");
    if (w_.row(i).minCoeff() < 0.0) throw InvalidInput("mixing matrix has negative weights");
  }
  const SymEig eig = sym_eig(w_);
  if (eig.values(0) <= -1.0 + 1e-10 || eig.values(n - 1) > 1.0 + 1e-10) {
    throw InvalidInput("mixing matrix eigenvalues must lie in (-1, 1]");
  }
  // Singular values of a symmetric matrix are |eigenvalues|.
  std::vector<double> sv(eig.values.data(), eig.values.data() + n);
  for (double& s : sv) s = std::abs(s);
  std::sort(sv.begin(), sv.end(), std::greater<>());
  sigma2_ = n > 1 ? sv[1] : 0.0;
  if (!(sigma2_ < 1.0)) throw InvalidInput("mixing matrix: sigma2 must be < 1 (graph disconnected?)");

  rows_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (w_(i, j) != 0.0) rows_[i].emplace_back(static_cast<int>(j), w_(i, j));
    }
  }
}

MixingMatrix MixingMatrix::with_steps(int t) const {
  MixingMatrix copy = *this;
  if (t < 1) throw InvalidInput("mixing matrix: t must be >= 1");
  copy.t_ = t;
  return copy;
}

MixingMatrix metropolis_weights(const Graph& g, int t) {
  if (!g.connected()) throw InvalidInput("metropolis_weights: graph is disconnected");
  const int n = g.n();
  const std::vector<int> deg = g.degrees();
  Matrix w = Matrix::Zero(n, n);
  for (const auto& [i, j] : g.edges()) {
    const double wij = 1.0 / (1.0 + std::max(deg[i], deg[j]));
    w(i, j) = wij;
    w(j, i) = wij;
  }
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) off += w(i, j);
    w(i, i) = 1.0 - off;
  }
  return MixingMatrix(std::move(w), t);
}

StackedState mix(const MixingMatrix& m, const StackedState& x, int steps, WorkerPool* pool) {
  if (static_cast<int>(x.size()) != m.n()) {
    throw InvalidInput("mix: got " + std::to_string(x.size()) + " blocks for " +
                       std::to_string(m.n()) + " agents");
  }
  if (steps < 0) throw InvalidInput("mix: steps must be >= 0");
  for (const Matrix& block : x) {
    if (block.rows() != x[0].rows() || block.cols() != x[0].cols()) {
      throw InvalidInput("mix: blocks have different shapes");
    }
  }
  StackedState current = x;
  StackedState next(x.size());
  for (int s = 0; s < steps; ++s) {
    auto body = [&](std::size_t i) {
      Matrix acc = Matrix::Zero(x[0].rows(), x[0].cols());
      for (const auto& [j, wij] : m.row(static_cast<int>(i))) acc.noalias() += wij * current[j];
      next[i] = std::move(acc);
    };
    if (pool) {
      pool->parallel_for(x.size(), body);
    } else {
      for (std::size_t i = 0; i < x.size(); ++i) body(i);
    }
    std::swap(current, next);
  }
  return current;
}

int consensus_radius_t(double sigma2, double gamma, double zeta, int n) {
  if (!(sigma2 >= 0.0 && sigma2 < 1.0)) throw InvalidInput("consensus_radius_t: sigma2 must lie in [0, 1)");
  if (!(gamma > 0.0) || !(zeta > 0.0) || n < 1) {
    throw InvalidInput("consensus_radius_t: gamma, zeta and n must be positive");
  }
  if (sigma2 == 0.0) return 1;
  const double lg = std::log(sigma2);
  const double target = gamma / (24.0 * std::sqrt(static_cast<double>(n)) * zeta);
  const double a = std::ceil(std::log(target) / lg);
  const double b = std::ceil(std::log(0.5) / lg);
  const double bound = std::max({a, b, 0.0});
  return static_cast<int>(bound) + 1;
}

}  // namespace decman
