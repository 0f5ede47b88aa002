#pragma once

namespace decsgd {

// Constants entering the convergence bound. M = 0 makes the M-dependent
// step-size caps non-binding (treated as +infinity).
struct TheoryConstants {
  double L = 1;       // smoothness
  double sigma2 = 0;  // gradient noise variance
  double M = 0;       // relative gradient-noise scale
  double zeta2 = 0;   // heterogeneity offset
  double P = 0;       // heterogeneity slope
  double p = 1;       // spectral constant of the mixing matrix
  int tau = 1;        // local steps per round
  int n = 1;          // agents
  double f0 = 0;      // loss of the initial average model
  double fstar = 0;   // global minimum value
};

double constant_C(const TheoryConstants& tc);  // 12(2tau+M) n (P+1) / p
double constant_D(const TheoryConstants& tc);  // 6((2tau+M) n zeta2 + n sigma2) / p

// Minimum of the five step-size caps:
//   1/L, n/(4LM(P+1)), n/(LM), p/(16L sqrt(3 tau (2tau+M))),
//   (1/(32L)) sqrt(p n / (2 C tau)).
// Throws std::invalid_argument when L <= 0 or p <= 0.
double max_step_size(const TheoryConstants& tc);

// Bound on (1/T) sum_t E||grad f(xbar_t)||^2:
//   8(f0-f*)/(alpha T) + (8 alpha L / n)(sigma2/2 + M zeta2)
//   + (1024 L^2 / n)(D tau / p) alpha^2.
// Checked form: throws std::invalid_argument when alpha is not in
// (0, max_step_size] (the bound is not guaranteed there).
double theorem1_rhs(const TheoryConstants& tc, double alpha, long long T);
// Same arithmetic without the step-size precondition.
double theorem1_rhs_value(const TheoryConstants& tc, double alpha,
                          long long T);

// Ceiling of max{ nL^2, 16 L^2 M^2 (P+1)^2 / n, L^2 M^2 / n,
//                 768 n L^2 tau (2tau+M) / p^2,
//                 24576 n L^2 tau (2tau+M)(P+1) / p^2 }.
long long corollary1_min_T(const TheoryConstants& tc);

}  // namespace decsgd
