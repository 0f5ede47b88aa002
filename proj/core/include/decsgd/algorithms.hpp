#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "decsgd/objectives.hpp"
#include "decsgd/topology.hpp"

namespace decsgd {

struct Hyperparams {
  double alpha = 0.01;   // local step size
  int tau = 1;           // local steps per communication round
  long long T = 1;       // iteration budget
  std::uint64_t seed = 1;
  double eta = 1.0;      // outer step size (gradient-tracking methods)
  double beta = 1.0;     // correction gain (exact-diffusion methods)
  bool ldsgd_literal_cta = false;  // alternate reading of the LDSGD consensus
};

// Sum over agents of ||x_i - xbar||^2 for column-per-agent X.
double consensus_error(const Eigen::MatrixXd& X);

// Lock-step synchronous simulator for one algorithm. Models sit in a d x n
// matrix, one column per agent. step() advances exactly one iteration; after
// a divergence flag the state freezes and step() is a no-op.
class Stepper {
 public:
  virtual ~Stepper() = default;

  virtual void step() = 0;

  long long t() const { return t_; }
  const Eigen::MatrixXd& X() const { return X_; }
  Eigen::VectorXd xbar() const { return X_.rowwise().mean(); }
  double consensus_error() const { return decsgd::consensus_error(X_); }
  bool diverged() const { return diverged_; }

  // Sum over agents of the gradients drawn while producing the current
  // iterate; drives the average-update identity check.
  const Eigen::VectorXd& last_gradient_sum() const { return gsum_; }

  // Sum over agents of the tracking variable y_i and of the most recent
  // per-agent gradient evaluations (gradient-tracking steppers only).
  virtual bool has_tracking() const { return false; }
  virtual Eigen::VectorXd tracking_sum() const;
  virtual Eigen::VectorXd tracked_gradient_sum() const;

 protected:
  Stepper(const ObjectiveSuite& suite, const NoiseModel& noise,
          Eigen::MatrixXd X0, Hyperparams hp);

  void draw_gradients(const Eigen::MatrixXd& at, long long stream_iter,
                      Eigen::MatrixXd& out);
  void check_divergence();

  const ObjectiveSuite& suite_;
  NoiseModel noise_;
  Hyperparams hp_;
  Eigen::MatrixXd X_;
  Eigen::VectorXd gsum_;
  long long t_ = 0;
  bool diverged_ = false;
  double init_scale_ = 1.0;
};

// Algorithm ids: "oldsgd" | "ldsgd" | "dsgd" | "lsgd" | "olgt" | "lugt" |
// "oled" | "led". Unknown id throws std::invalid_argument. lsgd ignores the
// given mixing matrix and averages exactly; dsgd communicates every
// iteration regardless of hp.tau.
std::unique_ptr<Stepper> make_stepper(std::string_view algorithm,
                                      const ObjectiveSuite& suite,
                                      const NoiseModel& noise,
                                      const MixingMatrix& mix,
                                      const Eigen::MatrixXd& X0,
                                      const Hyperparams& hp);

bool is_algorithm_id(std::string_view algorithm);

}  // namespace decsgd
