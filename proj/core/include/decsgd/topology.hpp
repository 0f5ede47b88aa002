#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace decsgd {

struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;       // unordered pairs, i < j
  std::vector<std::vector<int>> neighbors;      // per-agent, excludes self
};

struct MixingMatrix {
  Eigen::MatrixXd W;   // doubly stochastic, symmetric
  double lambda2 = 0;  // second-largest eigenvalue magnitude
  double p = 1;        // spectral constant 1 - lambda2^2
};

// Ring over n >= 2 agents; throws std::invalid_argument otherwise.
Graph build_ring(int n);

// Complete graph over n >= 1 agents; throws std::invalid_argument otherwise.
Graph build_complete(int n);

bool is_connected(const Graph& g);

// Metropolis-Hastings weights w_ij = 1/(1 + max(deg_i, deg_j)) for j ~ i,
// w_ii = 1 - sum of off-diagonals. Throws std::invalid_argument when the
// graph is disconnected. lambda2 comes from a dense symmetric eigensolve.
MixingMatrix metropolis_weights(const Graph& g);

// W = (1/n) * ones: the exact-averaging matrix. lambda2 = 0, p = 1.
MixingMatrix uniform_complete_weights(int n);

// Second-largest eigenvalue magnitude of a symmetric stochastic matrix.
double lambda2_of(const Eigen::MatrixXd& W);

}  // namespace decsgd
