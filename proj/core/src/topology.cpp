#include "decsgd/topology.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace decsgd {

Graph build_ring(int n) {
  if (n < 2) throw std::invalid_argument("ring topology requires n >= 2");
  Graph g;
  g.n = n;
  g.neighbors.resize(n);
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    g.edges.emplace_back(std::min(i, j), std::max(i, j));
    const int prev = (i - 1 + n) % n;
    const int next = (i + 1) % n;
    g.neighbors[i].push_back(prev);
    if (next != prev) g.neighbors[i].push_back(next);
    std::sort(g.neighbors[i].begin(), g.neighbors[i].end());
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

Graph build_complete(int n) {
  if (n < 1) throw std::invalid_argument("complete topology requires n >= 1");
  Graph g;
  g.n = n;
  g.neighbors.resize(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      g.edges.emplace_back(i, j);
      g.neighbors[i].push_back(j);
      g.neighbors[j].push_back(i);
    }
  for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());
  return g;
}

bool is_connected(const Graph& g) {
  if (g.n <= 0) return false;
  std::vector<char> seen(g.n, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : g.neighbors[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        q.push(v);
      }
  }
  return reached == g.n;
}

double lambda2_of(const Eigen::MatrixXd& W) {
  const int n = static_cast<int>(W.rows());
  if (n <= 1) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(W);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  const auto& ev = solver.eigenvalues();  // ascending
  return std::max(std::abs(ev(0)), std::abs(ev(n - 2)));
}

MixingMatrix metropolis_weights(const Graph& g) {
  if (!is_connected(g))
    throw std::invalid_argument("metropolis weights require a connected graph");
  const int n = g.n;
  MixingMatrix m;
  m.W = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j : g.neighbors[i]) {
      const double deg_i = static_cast<double>(g.neighbors[i].size());
      const double deg_j = static_cast<double>(g.neighbors[j].size());
      const double w = 1.0 / (1.0 + std::max(deg_i, deg_j));
      m.W(i, j) = w;
      off += w;
    }
    m.W(i, i) = 1.0 - off;
  }
  m.lambda2 = lambda2_of(m.W);
  m.p = 1.0 - m.lambda2 * m.lambda2;
  return m;
}

MixingMatrix uniform_complete_weights(int n) {
  if (n < 1) throw std::invalid_argument("uniform weights require n >= 1");
  MixingMatrix m;
  m.W = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  m.lambda2 = 0.0;
  m.p = 1.0;
  return m;
}

}  // namespace decsgd
