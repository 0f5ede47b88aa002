#include "decsgd/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace decsgd {

namespace {

void require_finite(const Eigen::VectorXd& x) {
  if (!x.allFinite())
    throw std::domain_error("gradient evaluation at non-finite point");
}

Eigen::VectorXd draw_gaussian_vector(RngStream& rng, int d) {
  Eigen::VectorXd v(d);
  for (int k = 0; k < d; ++k) v(k) = rng.gaussian();
  return v;
}

}  // namespace

double ObjectiveSuite::fstar() const {
  throw std::logic_error("objective has no analytic minimum");
}

Eigen::VectorXd ObjectiveSuite::xstar() const {
  throw std::logic_error("objective has no analytic minimizer");
}

void ObjectiveSuite::minibatch_gradient(int, const Eigen::VectorXd&, int,
                                        RngStream&, Eigen::VectorXd&) const {
  throw std::logic_error("objective has no sample-backed minibatch gradient");
}

double ObjectiveSuite::global_loss(const Eigen::VectorXd& x) const {
  double total = 0.0;
  for (int i = 0; i < agents(); ++i) total += loss(i, x);
  return total / static_cast<double>(agents());
}

void ObjectiveSuite::global_gradient(const Eigen::VectorXd& x,
                                     Eigen::VectorXd& out) const {
  Eigen::VectorXd g(dim());
  out.setZero(dim());
  for (int i = 0; i < agents(); ++i) {
    full_gradient(i, x, g);
    out += g;
  }
  out /= static_cast<double>(agents());
}

QuadraticSuite::QuadraticSuite(int d, int n, double lambda_min,
                               double lambda_max, double zeta2,
                               double bbar_norm, std::uint64_t seed)
    : d_(d) {
  if (d < 1) throw std::invalid_argument("quadratic suite requires d >= 1");
  if (n < 1) throw std::invalid_argument("quadratic suite requires n >= 1");
  if (zeta2 < 0) throw std::invalid_argument("zeta2 must be non-negative");
  if (zeta2 > 0 && n < 2)
    throw std::invalid_argument(
        "heterogeneity zeta2 > 0 is unrealizable with a single agent");
  diag_ = Eigen::VectorXd::LinSpaced(d, lambda_min, lambda_max);

  Eigen::VectorXd bbar = Eigen::VectorXd::Zero(d);
  if (bbar_norm != 0.0) {
    RngStream dir_rng(seed, static_cast<std::uint64_t>(n), 0,
                      StreamPurpose::data);
    bbar = draw_gaussian_vector(dir_rng, d);
    bbar *= bbar_norm / bbar.norm();
  }

  b_.assign(n, bbar);
  if (zeta2 > 0) {
    std::vector<Eigen::VectorXd> delta(n);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < n; ++i) {
      RngStream rng(seed, static_cast<std::uint64_t>(i), 0,
                    StreamPurpose::data);
      delta[i] = draw_gaussian_vector(rng, d);
      mean += delta[i];
    }
    mean /= static_cast<double>(n);
    double sumsq = 0.0;
    for (auto& dv : delta) {
      dv -= mean;
      sumsq += dv.squaredNorm();
    }
    if (sumsq <= 0)
      throw std::runtime_error("degenerate heterogeneity draw");
    const double scale = std::sqrt(static_cast<double>(n) * zeta2 / sumsq);
    for (int i = 0; i < n; ++i) b_[i] += scale * delta[i];
  }
  finish_construction();
}

QuadraticSuite::QuadraticSuite(double lambda_min, double lambda_max,
                               std::vector<Eigen::VectorXd> b)
    : b_(std::move(b)) {
  if (b_.empty()) throw std::invalid_argument("at least one agent required");
  d_ = static_cast<int>(b_[0].size());
  for (const auto& bi : b_)
    if (bi.size() != d_)
      throw std::invalid_argument("offset dimensions disagree");
  diag_ = Eigen::VectorXd::LinSpaced(d_, lambda_min, lambda_max);
  finish_construction();
}

void QuadraticSuite::finish_construction() {
  bbar_ = Eigen::VectorXd::Zero(d_);
  for (const auto& bi : b_) bbar_ += bi;
  bbar_ /= static_cast<double>(b_.size());
}

double QuadraticSuite::loss(int agent, const Eigen::VectorXd& x) const {
  return 0.5 * x.dot(diag_.cwiseProduct(x)) - b_[agent].dot(x);
}

void QuadraticSuite::full_gradient(int agent, const Eigen::VectorXd& x,
                                   Eigen::VectorXd& out) const {
  require_finite(x);
  out = diag_.cwiseProduct(x) - b_[agent];
}

double QuadraticSuite::smoothness_constant() const { return diag_.maxCoeff(); }

Heterogeneity QuadraticSuite::heterogeneity_constants() const {
  Heterogeneity h;
  h.P = 0;
  h.exact = true;
  double sum = 0.0;
  for (const auto& bi : b_) sum += (bi - bbar_).squaredNorm();
  h.zeta2 = sum / static_cast<double>(b_.size());
  return h;
}

double QuadraticSuite::fstar() const { return -0.5 * bbar_.dot(xstar()); }

Eigen::VectorXd QuadraticSuite::xstar() const {
  if (diag_.minCoeff() <= 0)
    throw std::logic_error("minimizer requires a positive-definite spectrum");
  return bbar_.cwiseQuotient(diag_);
}

LogisticSuite::LogisticSuite(int d, int n, int samples_per_agent,
                             double cluster_spread, double mu,
                             std::uint64_t seed)
    : d_(d), mu_(mu), seed_(seed) {
  if (d < 1 || n < 1 || samples_per_agent < 1)
    throw std::invalid_argument("logistic suite requires d, n, samples >= 1");
  if (mu < 0) throw std::invalid_argument("ridge coefficient must be >= 0");
  RngStream planted_rng(seed, static_cast<std::uint64_t>(n), 0,
                        StreamPurpose::data);
  const Eigen::VectorXd wstar = draw_gaussian_vector(planted_rng, d);
  data_.resize(n);
  for (int i = 0; i < n; ++i) {
    RngStream center_rng(seed, static_cast<std::uint64_t>(i), 0,
                         StreamPurpose::data);
    const Eigen::VectorXd center =
        cluster_spread * draw_gaussian_vector(center_rng, d);
    RngStream feat_rng(seed, static_cast<std::uint64_t>(i), 1,
                       StreamPurpose::data);
    data_[i].features.resize(samples_per_agent, d);
    data_[i].labels.resize(samples_per_agent);
    for (int k = 0; k < samples_per_agent; ++k) {
      for (int c = 0; c < d; ++c)
        data_[i].features(k, c) = center(c) + feat_rng.gaussian();
      const double score = data_[i].features.row(k).dot(wstar);
      data_[i].labels[k] = score >= 0 ? 1 : -1;
    }
  }
}

LogisticSuite::LogisticSuite(std::vector<AgentData> data, double mu,
                             std::uint64_t seed)
    : mu_(mu), seed_(seed), data_(std::move(data)) {
  if (data_.empty()) throw std::invalid_argument("at least one agent required");
  if (mu < 0) throw std::invalid_argument("ridge coefficient must be >= 0");
  d_ = static_cast<int>(data_[0].features.cols());
  for (const auto& ad : data_) {
    if (ad.features.cols() != d_ || ad.features.rows() == 0)
      throw std::invalid_argument("agent datasets disagree on dimension");
    if (static_cast<Eigen::Index>(ad.labels.size()) != ad.features.rows())
      throw std::invalid_argument("label count mismatch");
    for (int y : ad.labels)
      if (y != 1 && y != -1)
        throw std::invalid_argument("labels must be +/-1");
  }
}

double LogisticSuite::loss(int agent, const Eigen::VectorXd& x) const {
  const AgentData& ad = data_[agent];
  const Eigen::Index s = ad.features.rows();
  double total = 0.0;
  for (Eigen::Index k = 0; k < s; ++k) {
    const double z = ad.labels[k] * ad.features.row(k).dot(x);
    total += z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
  }
  return total / static_cast<double>(s) + 0.5 * mu_ * x.squaredNorm();
}

void LogisticSuite::full_gradient(int agent, const Eigen::VectorXd& x,
                                  Eigen::VectorXd& out) const {
  require_finite(x);
  const AgentData& ad = data_[agent];
  const Eigen::Index s = ad.features.rows();
  out.setZero(d_);
  for (Eigen::Index k = 0; k < s; ++k) {
    const double z = ad.labels[k] * ad.features.row(k).dot(x);
    const double sig = z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z))
                              : 1.0 / (1.0 + std::exp(z));
    out -= (ad.labels[k] * sig) * ad.features.row(k).transpose();
  }
  out /= static_cast<double>(s);
  out += mu_ * x;
}

double LogisticSuite::smoothness_constant() const {
  double worst = 0.0;
  for (const auto& ad : data_) {
    const double mean_sq = ad.features.rowwise().squaredNorm().mean();
    worst = std::max(worst, mean_sq);
  }
  return 0.25 * worst + mu_;
}

Heterogeneity LogisticSuite::heterogeneity_constants() const {
  // Empirical upper-bound fit over probe points; flagged as an estimate.
  Heterogeneity h;
  h.exact = false;
  const int n = agents();
  std::vector<double> us, vs;
  RngStream probe_rng(seed_ ^ 0xA5A5A5A5ULL, 0, 0, StreamPurpose::data);
  Eigen::VectorXd g(d_), gbar(d_);
  for (double scale : {0.3, 1.0, 3.0}) {
    for (int rep = 0; rep < 16; ++rep) {
      const Eigen::VectorXd x = scale * draw_gaussian_vector(probe_rng, d_);
      global_gradient(x, gbar);
      double v = 0.0;
      for (int i = 0; i < n; ++i) {
        full_gradient(i, x, g);
        v += (g - gbar).squaredNorm();
      }
      us.push_back(gbar.squaredNorm());
      vs.push_back(v / static_cast<double>(n));
    }
  }
  const double K = static_cast<double>(us.size());
  const double umean = std::accumulate(us.begin(), us.end(), 0.0) / K;
  const double vmean = std::accumulate(vs.begin(), vs.end(), 0.0) / K;
  double cov = 0.0, var = 0.0;
  for (std::size_t k = 0; k < us.size(); ++k) {
    cov += (us[k] - umean) * (vs[k] - vmean);
    var += (us[k] - umean) * (us[k] - umean);
  }
  h.P = var > 0 ? std::max(0.0, cov / var) : 0.0;
  h.zeta2 = 0.0;
  for (std::size_t k = 0; k < us.size(); ++k)
    h.zeta2 = std::max(h.zeta2, vs[k] - h.P * us[k]);
  return h;
}

void LogisticSuite::minibatch_gradient(int agent, const Eigen::VectorXd& x,
                                       int batch_size, RngStream& rng,
                                       Eigen::VectorXd& out) const {
  require_finite(x);
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  const AgentData& ad = data_[agent];
  const std::uint64_t s = static_cast<std::uint64_t>(ad.features.rows());
  out.setZero(d_);
  for (int b = 0; b < batch_size; ++b) {
    const Eigen::Index k = static_cast<Eigen::Index>(rng.next_u64() % s);
    const double z = ad.labels[k] * ad.features.row(k).dot(x);
    const double sig = z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z))
                              : 1.0 / (1.0 + std::exp(z));
    out -= (ad.labels[k] * sig) * ad.features.row(k).transpose();
  }
  out /= static_cast<double>(batch_size);
  out += mu_ * x;
}

std::string logistic_to_json(const LogisticSuite& suite) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = "logistic";
  j["seed"] = suite.seed();
  j["d"] = suite.dim();
  j["n"] = suite.agents();
  j["mu"] = suite.ridge();
  nlohmann::json agents = nlohmann::json::array();
  for (int i = 0; i < suite.agents(); ++i) {
    const auto& ad = suite.agent_data(i);
    nlohmann::json a;
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index k = 0; k < ad.features.rows(); ++k) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < ad.features.cols(); ++c)
        row.push_back(ad.features(k, c));
      rows.push_back(std::move(row));
    }
    a["features"] = std::move(rows);
    a["labels"] = ad.labels;
    agents.push_back(std::move(a));
  }
  j["agents"] = std::move(agents);
  return j.dump();
}

LogisticSuite logistic_from_json(const std::string& json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  if (j.at("schema_version").get<int>() != 1)
    throw std::invalid_argument("unsupported dataset schema version");
  if (j.at("kind").get<std::string>() != "logistic")
    throw std::invalid_argument("dataset kind must be \"logistic\"");
  const int d = j.at("d").get<int>();
  const int n = j.at("n").get<int>();
  const double mu = j.at("mu").get<double>();
  const std::uint64_t seed = j.at("seed").get<std::uint64_t>();
  const auto& agents = j.at("agents");
  if (static_cast<int>(agents.size()) != n)
    throw std::invalid_argument("agent count mismatch in dataset");
  std::vector<LogisticSuite::AgentData> data(n);
  for (int i = 0; i < n; ++i) {
    const auto& rows = agents[i].at("features");
    const auto& labels = agents[i].at("labels");
    data[i].features.resize(rows.size(), d);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (static_cast<int>(rows[k].size()) != d)
        throw std::invalid_argument("feature dimension mismatch in dataset");
      for (int c = 0; c < d; ++c)
        data[i].features(k, c) = rows[k][c].get<double>();
    }
    data[i].labels.reserve(labels.size());
    for (const auto& y : labels)
      data[i].labels.push_back(y.get<int>() > 0 ? 1 : -1);
  }
  return LogisticSuite(std::move(data), mu, seed);
}

LogisticSuite load_logistic_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return logistic_from_json(buf.str());
  } catch (const std::exception& e) {
    throw std::runtime_error("failed to load dataset " + path + ": " +
                             e.what());
  }
}

void stochastic_gradient(const ObjectiveSuite& suite, const NoiseModel& noise,
                         int agent, const Eigen::VectorXd& x, RngStream& rng,
                         Eigen::VectorXd& out) {
  switch (noise.kind) {
    case NoiseModel::Kind::additive: {
      suite.full_gradient(agent, x, out);
      if (noise.sigma > 0) {
        const int d = suite.dim();
        const double scale = noise.sigma / std::sqrt(static_cast<double>(d));
        for (int k = 0; k < d; ++k) out(k) += scale * rng.gaussian();
      }
      return;
    }
    case NoiseModel::Kind::multiplicative: {
      suite.full_gradient(agent, x, out);
      if (noise.m > 0) out *= 1.0 + noise.m * rng.gaussian();
      return;
    }
    case NoiseModel::Kind::minibatch:
      suite.minibatch_gradient(agent, x, noise.batch_size, rng, out);
      return;
  }
  throw std::logic_error("unreachable noise kind");
}

Partition partition_dataset(const std::vector<int>& labels, int n, double skew,
                            std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("partition requires n >= 1");
  if (skew < 0 || skew > 1)
    throw std::invalid_argument("skew must lie in [0, 1]");
  if (labels.empty()) throw std::invalid_argument("dataset has no labels");

  std::vector<int> distinct(labels);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()),
                 distinct.end());

  // Group sample indices by label, each group independently shuffled.
  std::vector<std::vector<int>> groups(distinct.size());
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const auto g = std::lower_bound(distinct.begin(), distinct.end(),
                                    labels[k]) -
                   distinct.begin();
    groups[g].push_back(static_cast<int>(k));
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    RngStream rng(seed, g, 0, StreamPurpose::partition);
    for (std::size_t k = groups[g].size(); k > 1; --k)
      std::swap(groups[g][k - 1], groups[g][rng.next_u64() % k]);
  }

  const int total = static_cast<int>(labels.size());
  std::vector<int> quota(n, total / n);
  for (int i = 0; i < total % n; ++i) ++quota[i];

  Partition part;
  part.skew = skew;
  part.assignment.resize(n);
  for (int i = 0; i < n; ++i) {
    auto& group = groups[i % groups.size()];  // designated label, round-robin
    // Robust floor: 0.7 * 10 lands just below 7.0 in binary, and the intent
    // is floor of the exact product.
    int want = static_cast<int>(std::floor(skew * quota[i] + 1e-9));
    want = std::min(want, static_cast<int>(group.size()));
    for (int k = 0; k < want; ++k) {
      part.assignment[i].push_back(group.back());
      group.pop_back();
    }
  }
  std::vector<int> leftover;
  for (const auto& g : groups) leftover.insert(leftover.end(), g.begin(), g.end());
  RngStream pool_rng(seed, 0xFFFFULL, 0, StreamPurpose::partition);
  for (std::size_t k = leftover.size(); k > 1; --k)
    std::swap(leftover[k - 1], leftover[pool_rng.next_u64() % k]);
  for (int i = 0; i < n; ++i) {
    while (static_cast<int>(part.assignment[i].size()) < quota[i]) {
      part.assignment[i].push_back(leftover.back());
      leftover.pop_back();
    }
  }
  return part;
}

}  // namespace decsgd
