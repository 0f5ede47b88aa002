#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "decsgd/rng.hpp"

namespace decsgd {

struct Heterogeneity {
  double zeta2 = 0;  // (1/n) sum_i ||grad f_i - grad f||^2 offset
  double P = 0;      // slope against ||grad f||^2
  bool exact = true; // false when fitted empirically
};

class ObjectiveSuite {
 public:
  virtual ~ObjectiveSuite() = default;

  virtual int dim() const = 0;
  virtual int agents() const = 0;

  virtual double loss(int agent, const Eigen::VectorXd& x) const = 0;
  // Exact analytic gradient of f_agent at x; throws std::domain_error on
  // non-finite input.
  virtual void full_gradient(int agent, const Eigen::VectorXd& x,
                             Eigen::VectorXd& out) const = 0;

  virtual double smoothness_constant() const = 0;
  virtual Heterogeneity heterogeneity_constants() const = 0;

  virtual bool has_minimum() const { return false; }
  virtual double fstar() const;
  virtual Eigen::VectorXd xstar() const;

  // Mean-over-samples gradient of a random minibatch; only data-backed
  // suites support it.
  virtual void minibatch_gradient(int agent, const Eigen::VectorXd& x,
                                  int batch_size, RngStream& rng,
                                  Eigen::VectorXd& out) const;

  // f(x) = (1/n) sum_i f_i(x) and its gradient.
  double global_loss(const Eigen::VectorXd& x) const;
  void global_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& out) const;
};

// f_i(x) = 1/2 x'Ax - b_i'x with A = diag(linspace(lambda_min, lambda_max, d))
// shared by all agents. L = lambda_max, P = 0, zeta^2 exact by construction.
class QuadraticSuite : public ObjectiveSuite {
 public:
  // Seeded generator: bbar is a seeded direction scaled to bbar_norm; the
  // per-agent offsets are centered seeded Gaussians scaled so that
  // (1/n) sum ||b_i - bbar||^2 equals zeta2. Requires n >= 2 when zeta2 > 0.
  QuadraticSuite(int d, int n, double lambda_min, double lambda_max,
                 double zeta2, double bbar_norm, std::uint64_t seed);
  // Explicit offsets, for hand-built instances.
  QuadraticSuite(double lambda_min, double lambda_max,
                 std::vector<Eigen::VectorXd> b);

  int dim() const override { return d_; }
  int agents() const override { return static_cast<int>(b_.size()); }
  double loss(int agent, const Eigen::VectorXd& x) const override;
  void full_gradient(int agent, const Eigen::VectorXd& x,
                     Eigen::VectorXd& out) const override;
  double smoothness_constant() const override;
  Heterogeneity heterogeneity_constants() const override;
  bool has_minimum() const override { return true; }
  double fstar() const override;
  Eigen::VectorXd xstar() const override;

  const Eigen::VectorXd& spectrum() const { return diag_; }
  const Eigen::VectorXd& offset(int agent) const { return b_[agent]; }
  const Eigen::VectorXd& mean_offset() const { return bbar_; }

 private:
  void finish_construction();

  int d_ = 0;
  Eigen::VectorXd diag_;
  std::vector<Eigen::VectorXd> b_;
  Eigen::VectorXd bbar_;
};

// Per-agent ridge-regularized logistic regression on synthetic clustered
// data: agent i's features are center_i + standard normal draws, labels come
// from a planted linear model. L uses the documented bound
// (1/4) max_i mean_k ||a_k||^2 + mu.
class LogisticSuite : public ObjectiveSuite {
 public:
  struct AgentData {
    Eigen::MatrixXd features;       // one sample per row
    std::vector<int> labels;        // entries in {-1, +1}
  };

  LogisticSuite(int d, int n, int samples_per_agent, double cluster_spread,
                double mu, std::uint64_t seed);
  LogisticSuite(std::vector<AgentData> data, double mu, std::uint64_t seed);

  int dim() const override { return d_; }
  int agents() const override { return static_cast<int>(data_.size()); }
  double loss(int agent, const Eigen::VectorXd& x) const override;
  void full_gradient(int agent, const Eigen::VectorXd& x,
                     Eigen::VectorXd& out) const override;
  double smoothness_constant() const override;
  Heterogeneity heterogeneity_constants() const override;
  void minibatch_gradient(int agent, const Eigen::VectorXd& x, int batch_size,
                          RngStream& rng, Eigen::VectorXd& out) const override;

  const AgentData& agent_data(int agent) const { return data_[agent]; }
  double ridge() const { return mu_; }
  std::uint64_t seed() const { return seed_; }

 private:
  int d_ = 0;
  double mu_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<AgentData> data_;
};

// Dataset JSON round-trip (schema: schema_version, kind, seed, d, n, mu,
// per-agent feature rows and +/-1 labels).
std::string logistic_to_json(const LogisticSuite& suite);
LogisticSuite logistic_from_json(const std::string& json_text);
LogisticSuite load_logistic_file(const std::string& path);

struct NoiseModel {
  enum class Kind { additive, multiplicative, minibatch };
  Kind kind = Kind::additive;
  double sigma = 0;    // additive scale, E||g - grad f||^2 = sigma^2
  double m = 0;        // multiplicative relative scale, M = m^2
  int batch_size = 1;  // minibatch size
};

// One stochastic gradient draw with E[g] = grad f_i(x); the variance contract
// per kind is documented on NoiseModel.
void stochastic_gradient(const ObjectiveSuite& suite, const NoiseModel& noise,
                         int agent, const Eigen::VectorXd& x, RngStream& rng,
                         Eigen::VectorXd& out);

struct Partition {
  std::vector<std::vector<int>> assignment;  // per-agent sample indices
  double skew = 0;
};

// Assigns floor(skew * quota) samples per agent from that agent's designated
// label group (labels cycle round-robin over agents when there are more
// agents than labels), remainder uniformly from the leftover pool.
Partition partition_dataset(const std::vector<int>& labels, int n, double skew,
                            std::uint64_t seed);

}  // namespace decsgd
