#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "decsgd/rng.hpp"
#include "decsgd/topology.hpp"

using namespace decsgd;

namespace {

Eigen::MatrixXd random_models(int d, int n, std::uint64_t seed) {
  RngStream rng(seed, 0, 0, StreamPurpose::data);
  Eigen::MatrixXd X(d, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < d; ++i) X(i, j) = rng.gaussian();
  return X;
}

}  // namespace

TEST_CASE("ring of three agents is the complete triangle") {
  const MixingMatrix mix = metropolis_weights(build_ring(3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(mix.W(i, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(mix.lambda2 <= 1e-12);
  CHECK(mix.p == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("singleton graph mixes trivially") {
  const MixingMatrix mix = metropolis_weights(build_complete(1));
  REQUIRE(mix.W.rows() == 1);
  CHECK(mix.W(0, 0) == 1.0);
  CHECK(mix.lambda2 == 0.0);
  CHECK(mix.p == 1.0);
}

TEST_CASE("golden second eigenvalues for rings") {
  CHECK(metropolis_weights(build_ring(4)).lambda2 ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  const MixingMatrix ring8 = metropolis_weights(build_ring(8));
  CHECK(ring8.lambda2 ==
        doctest::Approx(0.8047378541243649).epsilon(1e-12));
  CHECK(ring8.p == doctest::Approx(0.35239698613931236).epsilon(1e-12));
}

TEST_CASE("uniform averaging weights") {
  const MixingMatrix m8 = uniform_complete_weights(8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) CHECK(m8.W(i, j) == 0.125);
  CHECK(m8.lambda2 == 0.0);
  CHECK(m8.p == 1.0);

  const MixingMatrix m2 = uniform_complete_weights(2);
  CHECK(m2.W(0, 0) == 0.5);
  CHECK(m2.W(0, 1) == 0.5);
  CHECK(m2.lambda2 == 0.0);

  const MixingMatrix m1 = uniform_complete_weights(1);
  CHECK(m1.W(0, 0) == 1.0);
}

TEST_CASE("rows and columns of every mixing matrix sum to one") {
  for (int n = 2; n <= 32; ++n) {
    const MixingMatrix mix = metropolis_weights(build_ring(n));
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(mix.W.row(i).sum() - 1.0) <= 1e-12);
      CHECK(std::abs(mix.W.col(i).sum() - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("mixing contracts disagreement by lambda2") {
  const int d = 6, n = 8;
  const MixingMatrix mix = metropolis_weights(build_ring(n));
  for (std::uint64_t rep = 0; rep < 5; ++rep) {
    const Eigen::MatrixXd X = random_models(d, n, 100 + rep);
    const Eigen::VectorXd xbar = X.rowwise().mean();
    const Eigen::MatrixXd centered = X.colwise() - xbar;
    const Eigen::MatrixXd mixed = X * mix.W;
    const Eigen::MatrixXd mixed_centered = mixed.colwise() - xbar;
    CHECK(mixed_centered.norm() <=
          mix.lambda2 * centered.norm() + 1e-9 * X.norm());
  }
}

TEST_CASE("ring spectra stay below one and widen with n") {
  double prev = 0.0;
  for (int n = 3; n <= 32; ++n) {
    const double l2 = metropolis_weights(build_ring(n)).lambda2;
    CHECK(l2 < 1.0);
    CHECK(l2 >= prev - 1e-14);
    prev = l2;
  }
  CHECK(metropolis_weights(build_ring(2)).lambda2 < 1.0);
}

TEST_CASE("disconnected graphs are rejected") {
  Graph g;
  g.n = 4;
  g.edges = {{0, 1}, {2, 3}};
  g.neighbors = {{1}, {0}, {3}, {2}};
  CHECK(!is_connected(g));
  CHECK_THROWS_AS(metropolis_weights(g), std::invalid_argument);
  CHECK_THROWS_AS(build_ring(1), std::invalid_argument);
}
