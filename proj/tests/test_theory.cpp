#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "decsgd/theory.hpp"

using namespace decsgd;

namespace {

TheoryConstants reference_point() {
  TheoryConstants tc;
  tc.L = 1;
  tc.M = 0;
  tc.P = 0;
  tc.n = 4;
  tc.tau = 5;
  tc.p = 1;
  return tc;
}

}  // namespace

TEST_CASE("bound constants at a hand-checked point") {
  TheoryConstants tc = reference_point();
  CHECK(constant_C(tc) == 480.0);
  tc.zeta2 = 1;
  tc.sigma2 = 1;
  CHECK(constant_D(tc) == 264.0);
  tc.zeta2 = 0;
  CHECK(constant_D(tc) == 24.0);
}

TEST_CASE("step size cap at a hand-checked point") {
  const TheoryConstants tc = reference_point();
  CHECK(max_step_size(tc) == doctest::Approx(0.00090210979560879033)
                                 .epsilon(1e-15));
}

TEST_CASE("relative noise zero disables the M caps") {
  TheoryConstants tc = reference_point();
  const double c1 = 1.0 / tc.L;
  const double c4 =
      tc.p / (16.0 * tc.L * std::sqrt(3.0 * tc.tau * (2.0 * tc.tau + tc.M)));
  const double c5 = std::sqrt(tc.p * tc.n / (2.0 * constant_C(tc) * tc.tau)) /
                    (32.0 * tc.L);
  CHECK(max_step_size(tc) == std::min({c1, c4, c5}));
}

TEST_CASE("doubling smoothness halves the cap exactly") {
  TheoryConstants tc = reference_point();
  tc.M = 0.5;
  tc.sigma2 = 1;
  const double base = max_step_size(tc);
  tc.L = 2;
  CHECK(max_step_size(tc) == base / 2.0);
}

TEST_CASE("bound value at a hand-checked point") {
  TheoryConstants tc = reference_point();
  tc.sigma2 = 1;
  tc.f0 = 10;
  tc.fstar = 0;
  const double v = theorem1_rhs_value(tc, 0.01, 10000);
  CHECK(v == doctest::Approx(3.8820000000000001).epsilon(1e-15));
  CHECK_THROWS_AS(theorem1_rhs(tc, 0.01, 10000), std::invalid_argument);
  const double a = max_step_size(tc);
  CHECK(theorem1_rhs(tc, a, 10000) == theorem1_rhs_value(tc, a, 10000));
}

TEST_CASE("noise-free bound collapses to the optimization term") {
  TheoryConstants tc = reference_point();
  tc.f0 = 3;
  tc.fstar = 1;
  const double a = max_step_size(tc) / 2;
  CHECK(theorem1_rhs(tc, a, 500) == 8.0 * 2.0 / (a * 500.0));
}

TEST_CASE("iteration floor at a hand-checked point") {
  TheoryConstants tc = reference_point();
  tc.tau = 1;
  CHECK(corollary1_min_T(tc) == 196608LL);
}

TEST_CASE("iteration floor grows with local steps") {
  TheoryConstants tc = reference_point();
  long long prev = 0;
  for (int tau : {1, 2, 5, 10, 20}) {
    tc.tau = tau;
    const long long cur = corollary1_min_T(tc);
    CHECK(cur >= prev);
    prev = cur;
  }
}

TEST_CASE("relative noise zero drops the M terms from the floor") {
  TheoryConstants tc = reference_point();
  tc.tau = 3;
  const double window = tc.tau * (2.0 * tc.tau + tc.M);
  const double expect =
      std::max({static_cast<double>(tc.n) * tc.L * tc.L,
                768.0 * tc.n * tc.L * tc.L * window / (tc.p * tc.p),
                24576.0 * tc.n * tc.L * tc.L * window * (tc.P + 1.0) /
                    (tc.p * tc.p)});
  CHECK(corollary1_min_T(tc) ==
        static_cast<long long>(std::ceil(expect)));
}

TEST_CASE("bound constants scale linearly in n and inversely in p") {
  TheoryConstants tc = reference_point();
  tc.zeta2 = 2;
  tc.sigma2 = 3;
  const double c0 = constant_C(tc);
  const double d0 = constant_D(tc);
  tc.n *= 3;
  CHECK(constant_C(tc) == doctest::Approx(3 * c0).epsilon(1e-15));
  CHECK(constant_D(tc) == doctest::Approx(3 * d0).epsilon(1e-15));
  tc.n = 4;
  tc.p = 0.5;
  CHECK(constant_C(tc) == doctest::Approx(2 * c0).epsilon(1e-15));
  CHECK(constant_D(tc) == doctest::Approx(2 * d0).epsilon(1e-15));
}

TEST_CASE("invalid constants are rejected") {
  TheoryConstants tc = reference_point();
  tc.L = 0;
  CHECK_THROWS_AS(max_step_size(tc), std::invalid_argument);
  tc.L = 1;
  tc.p = 0;
  CHECK_THROWS_AS(max_step_size(tc), std::invalid_argument);
  CHECK_THROWS_AS(corollary1_min_T(tc), std::invalid_argument);
}
