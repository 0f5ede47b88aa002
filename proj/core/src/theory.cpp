#include "decsgd/theory.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace decsgd {

namespace {

void require_valid(const TheoryConstants& tc) {
  if (tc.L <= 0) throw std::invalid_argument("L must be > 0");
  if (tc.p <= 0) throw std::invalid_argument("p must be > 0");
  if (tc.tau < 1) throw std::invalid_argument("tau must be >= 1");
  if (tc.n < 1) throw std::invalid_argument("n must be >= 1");
  if (tc.sigma2 < 0 || tc.M < 0 || tc.zeta2 < 0 || tc.P < 0)
    throw std::invalid_argument("noise and heterogeneity constants must be >= 0");
}

}  // namespace

double constant_C(const TheoryConstants& tc) {
  return 12.0 * (2.0 * tc.tau + tc.M) * tc.n * (tc.P + 1.0) / tc.p;
}

double constant_D(const TheoryConstants& tc) {
  return 6.0 * ((2.0 * tc.tau + tc.M) * tc.n * tc.zeta2 + tc.n * tc.sigma2) /
         tc.p;
}

double max_step_size(const TheoryConstants& tc) {
  require_valid(tc);
  const double inf = std::numeric_limits<double>::infinity();
  const double cap1 = 1.0 / tc.L;
  // M = 0 makes the M-scaled caps non-binding.
  const double cap2 =
      tc.M > 0 ? tc.n / (4.0 * tc.L * tc.M * (tc.P + 1.0)) : inf;
  const double cap3 = tc.M > 0 ? tc.n / (tc.L * tc.M) : inf;
  const double cap4 =
      tc.p / (16.0 * tc.L * std::sqrt(3.0 * tc.tau * (2.0 * tc.tau + tc.M)));
  const double cap5 =
      std::sqrt(tc.p * tc.n / (2.0 * constant_C(tc) * tc.tau)) / (32.0 * tc.L);
  return std::min({cap1, cap2, cap3, cap4, cap5});
}

double theorem1_rhs_value(const TheoryConstants& tc, double alpha,
                          long long T) {
  require_valid(tc);
  if (alpha <= 0) throw std::invalid_argument("alpha must be > 0");
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  const double Td = static_cast<double>(T);
  const double term1 = 8.0 * (tc.f0 - tc.fstar) / (alpha * Td);
  const double term2 =
      8.0 * alpha * tc.L / tc.n * (tc.sigma2 / 2.0 + tc.M * tc.zeta2);
  const double term3 = 1024.0 * tc.L * tc.L / tc.n *
                       (constant_D(tc) * tc.tau / tc.p) * alpha * alpha;
  return term1 + term2 + term3;
}

double theorem1_rhs(const TheoryConstants& tc, double alpha, long long T) {
  const double cap = max_step_size(tc);
  if (!(alpha > 0) || alpha > cap)
    throw std::invalid_argument(
        "alpha outside (0, max_step_size]: the bound is not guaranteed");
  return theorem1_rhs_value(tc, alpha, T);
}

long long corollary1_min_T(const TheoryConstants& tc) {
  require_valid(tc);
  const double L2 = tc.L * tc.L;
  const double n = static_cast<double>(tc.n);
  const double window = tc.tau * (2.0 * tc.tau + tc.M);
  const double p2 = tc.p * tc.p;
  const double t1 = n * L2;
  const double t2 = 16.0 * L2 * tc.M * tc.M * (tc.P + 1.0) * (tc.P + 1.0) / n;
  const double t3 = L2 * tc.M * tc.M / n;
  const double t4 = 768.0 * n * L2 * window / p2;
  const double t5 = 24576.0 * n * L2 * window * (tc.P + 1.0) / p2;
  const double worst = std::max({t1, t2, t3, t4, t5});
  return static_cast<long long>(std::ceil(worst));
}

}  // namespace decsgd
