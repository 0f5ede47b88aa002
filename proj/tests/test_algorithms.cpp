#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "decsgd/algorithms.hpp"
#include "decsgd/objectives.hpp"
#include "decsgd/rng.hpp"
#include "decsgd/topology.hpp"

#ifndef DECSGD_FIXTURE_DIR
#define DECSGD_FIXTURE_DIR "."
#endif

using namespace decsgd;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

bool same_bits(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  return A.rows() == B.rows() && A.cols() == B.cols() &&
         (A.array() == B.array()).all();
}

MixingMatrix identity_mixing(int n) {
  MixingMatrix mix;
  mix.W = Eigen::MatrixXd::Identity(n, n);
  mix.lambda2 = 1.0;
  mix.p = 0.0;
  return mix;
}

Eigen::MatrixXd gaussian_models(int d, int n, std::uint64_t seed) {
  Eigen::MatrixXd X(d, n);
  for (int j = 0; j < n; ++j) {
    RngStream rng(seed, static_cast<std::uint64_t>(j), 0, StreamPurpose::init);
    for (int i = 0; i < d; ++i) X(i, j) = rng.gaussian();
  }
  return X;
}

// Plain sequential SGD for one agent, drawing the same per-iteration streams
// the steppers use.
Eigen::VectorXd sgd_reference(const ObjectiveSuite& suite,
                              const NoiseModel& noise, std::uint64_t seed,
                              double alpha, long long T) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(suite.dim());
  Eigen::VectorXd g(suite.dim());
  for (long long t = 0; t < T; ++t) {
    RngStream rng(seed, 0, static_cast<std::uint64_t>(t),
                  StreamPurpose::gradient);
    stochastic_gradient(suite, noise, 0, x, rng, g);
    x -= alpha * g;
  }
  return x;
}

}  // namespace

TEST_CASE("consensus error at hand-checked states") {
  Eigen::MatrixXd equal(2, 3);
  equal << 1, 1, 1, 2, 2, 2;
  CHECK(consensus_error(equal) == 0.0);

  Eigen::MatrixXd split(2, 2);
  split << 1, -1, 0, 0;
  CHECK(consensus_error(split) == 2.0);

  const Eigen::MatrixXd X = gaussian_models(5, 7, 123);
  const Eigen::VectorXd xbar = X.rowwise().mean();
  double naive = 0;
  for (int j = 0; j < 7; ++j)
    for (int i = 0; i < 5; ++i) {
      const double dv = X(i, j) - xbar(i);
      naive += dv * dv;
    }
  CHECK(std::abs(consensus_error(X) - naive) <= 1e-12 * std::max(1.0, naive));
}

TEST_CASE("overlapping consensus hand-unrolled on two agents") {
  QuadraticSuite suite(1.0, 1.0, {vec2(2, 0), vec2(0, 0)});
  NoiseModel zero_noise;
  Hyperparams hp;
  hp.alpha = 0.1;
  hp.tau = 2;
  hp.T = 2;
  hp.seed = 1;
  const MixingMatrix mix = uniform_complete_weights(2);
  auto stepper = make_stepper("oldsgd", suite, zero_noise, mix,
                              Eigen::MatrixXd::Zero(2, 2), hp);
  stepper->step();
  stepper->step();
  const Eigen::VectorXd xbar = stepper->xbar();
  CHECK(std::abs(xbar(0) - 0.19) <= 1e-15);
  CHECK(std::abs(xbar(1)) <= 1e-15);
}

TEST_CASE("single-agent trajectories reduce to plain SGD") {
  QuadraticSuite suite(4, 1, 1.0, 2.0, 0.0, 0.8, 44);
  NoiseModel noise;
  noise.sigma = 0.5;
  const MixingMatrix mix = uniform_complete_weights(1);
  const Eigen::MatrixXd X0 = Eigen::MatrixXd::Zero(4, 1);

  SUBCASE("local consensus family") {
    for (const char* alg : {"oldsgd", "ldsgd", "dsgd", "lsgd"}) {
      for (int tau : {1, 3}) {
        Hyperparams hp;
        hp.alpha = 0.05;
        hp.tau = tau;
        hp.T = 51;
        hp.seed = 7;
        auto stepper = make_stepper(alg, suite, noise, mix, X0, hp);
        for (int t = 0; t < 51; ++t) stepper->step();
        const Eigen::VectorXd ref =
            sgd_reference(suite, noise, hp.seed, hp.alpha, 51);
        CHECK((stepper->X().col(0) - ref).norm() <=
              1e-12 * std::max(1.0, ref.norm()));
      }
    }
  }

  SUBCASE("diffusion first round matches SGD before the correction kicks in") {
    Hyperparams hp;
    hp.alpha = 0.05;
    hp.tau = 4;
    hp.T = 4;
    hp.seed = 7;
    hp.beta = 1.0;
    auto stepper = make_stepper("oled", suite, noise, mix, X0, hp);
    for (int t = 0; t < 4; ++t) stepper->step();
    const Eigen::VectorXd ref =
        sgd_reference(suite, noise, hp.seed, hp.alpha, 4);
    CHECK(same_bits(stepper->X(), ref));
  }
}

TEST_CASE("overlapping equals plain decentralized SGD at one local step") {
  QuadraticSuite suite(6, 5, 1.0, 3.0, 2.0, 1.0, 12);
  NoiseModel noise;
  noise.sigma = 1.0;
  const MixingMatrix mix = metropolis_weights(build_ring(5));
  const Eigen::MatrixXd X0 = gaussian_models(6, 5, 9);
  Hyperparams hp;
  hp.alpha = 0.03;
  hp.tau = 1;
  hp.T = 100;
  hp.seed = 5;
  auto a = make_stepper("oldsgd", suite, noise, mix, X0, hp);
  auto b = make_stepper("dsgd", suite, noise, mix, X0, hp);
  for (int t = 0; t < 100; ++t) {
    a->step();
    b->step();
    REQUIRE(same_bits(a->X(), b->X()));
  }
}

TEST_CASE("local decentralized SGD with uniform weights is local SGD") {
  QuadraticSuite suite(5, 6, 1.0, 2.0, 1.0, 0.5, 13);
  NoiseModel noise;
  noise.sigma = 0.7;
  const MixingMatrix mix = uniform_complete_weights(6);
  const Eigen::MatrixXd X0 = gaussian_models(5, 6, 10);
  Hyperparams hp;
  hp.alpha = 0.04;
  hp.tau = 5;
  hp.T = 60;
  hp.seed = 6;
  auto a = make_stepper("ldsgd", suite, noise, mix, X0, hp);
  auto b = make_stepper("lsgd", suite, noise, mix, X0, hp);
  for (int t = 0; t < 60; ++t) {
    a->step();
    b->step();
    REQUIRE(same_bits(a->X(), b->X()));
  }
}

TEST_CASE("exact averaging leaves no consensus error after mixing") {
  QuadraticSuite suite(5, 4, 1.0, 2.0, 1.0, 0.5, 14);
  NoiseModel noise;
  noise.sigma = 1.0;
  Hyperparams hp;
  hp.alpha = 0.02;
  hp.tau = 3;
  hp.T = 30;
  hp.seed = 8;
  auto stepper = make_stepper("lsgd", suite, noise, uniform_complete_weights(4),
                              gaussian_models(5, 4, 11), hp);
  for (int t = 1; t <= 30; ++t) {
    stepper->step();
    if (t % hp.tau == 0) CHECK(stepper->consensus_error() <= 1e-12);
  }
}

TEST_CASE("average model follows the SGD-like recursion") {
  NoiseModel noise;
  noise.sigma = 0.7;
  for (const char* alg : {"oldsgd", "ldsgd", "dsgd", "lsgd"}) {
    for (int tau : {1, 3, 5}) {
      for (int n : {4, 5, 8}) {
        QuadraticSuite suite(6, n, 1.0, 3.0, 1.5, 1.0, 15);
        const MixingMatrix mix = n == 4 ? uniform_complete_weights(4)
                                        : metropolis_weights(build_ring(n));
        Hyperparams hp;
        hp.alpha = 0.03;
        hp.tau = tau;
        hp.T = 3 * tau + 2;
        hp.seed = 16;
        auto stepper =
            make_stepper(alg, suite, noise, mix, gaussian_models(6, n, 12), hp);
        Eigen::VectorXd xref = stepper->xbar();
        for (long long t = 0; t < hp.T; ++t) {
          stepper->step();
          xref -= (hp.alpha / n) * stepper->last_gradient_sum();
          const Eigen::VectorXd xbar = stepper->xbar();
          CHECK((xbar - xref).norm() <= 1e-12 * std::max(1.0, xbar.norm()));
        }
      }
    }
  }
}

TEST_CASE("zero step size mixes consensus error down by lambda2 squared") {
  QuadraticSuite suite(6, 8, 1.0, 2.0, 1.0, 0.5, 17);
  NoiseModel noise;
  noise.sigma = 1.0;
  const MixingMatrix mix = metropolis_weights(build_ring(8));
  const double rate = mix.lambda2 * mix.lambda2;

  SUBCASE("every exchange contracts") {
    Hyperparams hp;
    hp.alpha = 0.0;
    hp.tau = 1;
    hp.T = 50;
    hp.seed = 18;
    auto stepper =
        make_stepper("dsgd", suite, noise, mix, gaussian_models(6, 8, 13), hp);
    double prev = stepper->consensus_error();
    for (int t = 0; t < 50; ++t) {
      stepper->step();
      const double cur = stepper->consensus_error();
      CHECK(cur <= rate * prev + 1e-9);
      prev = cur;
    }
  }

  SUBCASE("per round with local steps in between") {
    Hyperparams hp;
    hp.alpha = 0.0;
    hp.tau = 3;
    hp.T = 60;
    hp.seed = 18;
    auto stepper = make_stepper("oldsgd", suite, noise, mix,
                                gaussian_models(6, 8, 13), hp);
    double prev = stepper->consensus_error();
    for (int round = 0; round < 20; ++round) {
      for (int s = 0; s < 3; ++s) stepper->step();
      const double cur = stepper->consensus_error();
      CHECK(cur <= rate * prev + 1e-9);
      prev = cur;
    }
  }
}

TEST_CASE("both gradient tracking variants coincide at one local step") {
  QuadraticSuite suite(5, 4, 1.0, 3.0, 2.0, 1.0, 19);
  NoiseModel noise;
  noise.sigma = 0.5;
  const MixingMatrix mix = metropolis_weights(build_ring(4));
  const Eigen::MatrixXd X0 = gaussian_models(5, 4, 14);
  Hyperparams hp;
  hp.alpha = 0.01;
  hp.tau = 1;
  hp.T = 40;
  hp.seed = 20;
  hp.eta = 1.0;
  auto a = make_stepper("olgt", suite, noise, mix, X0, hp);
  auto b = make_stepper("lugt", suite, noise, mix, X0, hp);
  for (int t = 0; t < 40; ++t) {
    a->step();
    b->step();
    REQUIRE(same_bits(a->X(), b->X()));
  }
}

TEST_CASE("gradient tracking cancels heterogeneity bias exactly") {
  QuadraticSuite suite(5, 4, 1.0, 3.0, 4.0, 1.0, 21);
  NoiseModel zero_noise;
  const MixingMatrix mix = metropolis_weights(build_ring(4));
  Hyperparams hp;
  hp.alpha = 0.02;
  hp.tau = 5;
  hp.T = 10000;
  hp.seed = 22;
  hp.eta = 1.0;
  auto stepper = make_stepper("lugt", suite, zero_noise, mix,
                              Eigen::MatrixXd::Zero(5, 4), hp);
  for (int t = 0; t < 10000; ++t) stepper->step();
  const Eigen::VectorXd xs = suite.xstar();
  for (int i = 0; i < 4; ++i)
    CHECK((stepper->X().col(i) - xs).norm() <= 1e-8);
}

TEST_CASE("overlapping tracking solves the homogeneous problem") {
  QuadraticSuite suite(4, 2, 1.0, 2.0, 0.0, 1.0, 23);
  NoiseModel zero_noise;
  const MixingMatrix mix = metropolis_weights(build_ring(2));
  Hyperparams hp;
  hp.alpha = 0.02;
  hp.tau = 5;
  hp.T = 10000;
  hp.seed = 24;
  hp.eta = 1.0;
  auto stepper = make_stepper("olgt", suite, zero_noise, mix,
                              Eigen::MatrixXd::Zero(4, 2), hp);
  for (int t = 0; t < 10000; ++t) stepper->step();
  const Eigen::VectorXd xs = suite.xstar();
  for (int i = 0; i < 2; ++i)
    CHECK((stepper->X().col(i) - xs).norm() <= 1e-6);
}

TEST_CASE("tracking variables conserve the drawn gradient sum") {
  QuadraticSuite suite(5, 4, 1.0, 3.0, 2.0, 1.0, 25);
  NoiseModel noise;
  noise.sigma = 0.5;
  const MixingMatrix mix = metropolis_weights(build_ring(4));
  for (const char* alg : {"olgt", "lugt"}) {
    Hyperparams hp;
    hp.alpha = 0.01;
    hp.tau = 4;
    hp.T = 60;
    hp.seed = 26;
    hp.eta = 0.8;
    auto stepper =
        make_stepper(alg, suite, noise, mix, gaussian_models(5, 4, 15), hp);
    REQUIRE(stepper->has_tracking());
    for (int t = 0; t <= 60; ++t) {
      const Eigen::VectorXd ysum = stepper->tracking_sum();
      const Eigen::VectorXd gsum =
          hp.alpha * stepper->tracked_gradient_sum();
      CHECK((ysum - gsum).norm() <= 1e-10 * std::max(1.0, gsum.norm()));
      if (t < 60) stepper->step();
    }
  }
}

TEST_CASE("stale boundary models slow tracking on the committed dataset") {
  const LogisticSuite suite = load_logistic_file(
      std::string(DECSGD_FIXTURE_DIR) + "/gt_instance.json");
  NoiseModel zero_noise;
  const MixingMatrix mix = metropolis_weights(build_ring(suite.agents()));
  const Eigen::MatrixXd X0 =
      Eigen::MatrixXd::Zero(suite.dim(), suite.agents());
  Hyperparams hp;
  hp.alpha = 0.01;
  hp.tau = 5;
  hp.T = 600;
  hp.seed = 1;
  hp.eta = 1.32;
  auto stale = make_stepper("olgt", suite, zero_noise, mix, X0, hp);
  auto fresh = make_stepper("lugt", suite, zero_noise, mix, X0, hp);
  for (int t = 0; t < 600; ++t) {
    stale->step();
    fresh->step();
  }
  CHECK(suite.global_loss(stale->xbar()) > suite.global_loss(fresh->xbar()));
}

TEST_CASE("diffusion with the correction disabled is local SGD") {
  QuadraticSuite suite(4, 3, 1.0, 2.0, 1.0, 0.5, 27);
  NoiseModel noise;
  noise.sigma = 0.3;
  Hyperparams hp;
  hp.alpha = 0.05;
  hp.tau = 4;
  hp.T = 12;
  hp.seed = 28;
  hp.beta = 0.0;
  auto stepper = make_stepper("oled", suite, noise, identity_mixing(3),
                              Eigen::MatrixXd::Zero(4, 3), hp);
  for (int t = 0; t < 12; ++t) stepper->step();

  Eigen::MatrixXd manual = Eigen::MatrixXd::Zero(4, 3);
  Eigen::VectorXd g(4);
  for (long long t = 0; t < 12; ++t)
    for (int i = 0; i < 3; ++i) {
      RngStream rng(hp.seed, static_cast<std::uint64_t>(i),
                    static_cast<std::uint64_t>(t), StreamPurpose::gradient);
      Eigen::VectorXd xi = manual.col(i);
      stochastic_gradient(suite, noise, i, xi, rng, g);
      manual.col(i) = xi - hp.alpha * g;
    }
  CHECK(same_bits(stepper->X(), manual));
}

TEST_CASE("divergence freezes the swarm instead of throwing") {
  QuadraticSuite suite(4.0, 4.0, {vec2(1, 1), vec2(1, -1), vec2(-1, 1)});
  NoiseModel zero_noise;
  Hyperparams hp;
  hp.alpha = 0.6;
  hp.tau = 1;
  hp.T = 200;
  hp.seed = 29;
  auto stepper = make_stepper("dsgd", suite, zero_noise,
                              metropolis_weights(build_ring(3)),
                              Eigen::MatrixXd::Zero(2, 3), hp);
  int flagged_at = -1;
  for (int t = 1; t <= 200; ++t) {
    stepper->step();
    if (stepper->diverged()) {
      flagged_at = t;
      break;
    }
  }
  REQUIRE(flagged_at > 0);
  const Eigen::MatrixXd frozen = stepper->X();
  stepper->step();
  CHECK(same_bits(stepper->X(), frozen));
  CHECK(frozen.allFinite());
}

TEST_CASE("steppers replay identically") {
  QuadraticSuite suite(5, 4, 1.0, 3.0, 2.0, 1.0, 30);
  NoiseModel noise;
  noise.sigma = 1.0;
  const MixingMatrix mix = metropolis_weights(build_ring(4));
  const Eigen::MatrixXd X0 = gaussian_models(5, 4, 16);
  Hyperparams hp;
  hp.alpha = 0.01;
  hp.tau = 5;
  hp.T = 50;
  hp.seed = 31;
  auto a = make_stepper("olgt", suite, noise, mix, X0, hp);
  auto b = make_stepper("olgt", suite, noise, mix, X0, hp);
  for (int t = 0; t < 50; ++t) {
    a->step();
    b->step();
  }
  CHECK(same_bits(a->X(), b->X()));
}

TEST_CASE("configuration errors are rejected") {
  QuadraticSuite suite(3, 2, 1.0, 1.0, 0.0, 1.0, 32);
  NoiseModel noise;
  const MixingMatrix mix = uniform_complete_weights(2);
  Hyperparams hp;

  CHECK(is_algorithm_id("oldsgd"));
  CHECK(is_algorithm_id("led"));
  CHECK(!is_algorithm_id("kgt"));
  CHECK(!is_algorithm_id(""));

  CHECK_THROWS_AS(make_stepper("kgt", suite, noise, mix,
                               Eigen::MatrixXd::Zero(3, 2), hp),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_stepper("oldsgd", suite, noise, mix,
                               Eigen::MatrixXd::Zero(3, 5), hp),
                  std::invalid_argument);
  Hyperparams bad_tau;
  bad_tau.tau = 0;
  CHECK_THROWS_AS(make_stepper("oldsgd", suite, noise, mix,
                               Eigen::MatrixXd::Zero(3, 2), bad_tau),
                  std::invalid_argument);
}
