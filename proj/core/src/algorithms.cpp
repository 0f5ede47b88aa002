#include "decsgd/algorithms.hpp"

#include <cmath>
#include <stdexcept>

namespace decsgd {

double consensus_error(const Eigen::MatrixXd& X) {
  const Eigen::VectorXd xbar = X.rowwise().mean();
  return (X.colwise() - xbar).squaredNorm();
}

Stepper::Stepper(const ObjectiveSuite& suite, const NoiseModel& noise,
                 Eigen::MatrixXd X0, Hyperparams hp)
    : suite_(suite), noise_(noise), hp_(hp), X_(std::move(X0)) {
  if (X_.rows() != suite.dim() || X_.cols() != suite.agents())
    throw std::invalid_argument("initial model dimensions mismatch the suite");
  if (hp_.alpha < 0) throw std::invalid_argument("alpha must be >= 0");
  if (hp_.tau < 1) throw std::invalid_argument("tau must be >= 1");
  gsum_ = Eigen::VectorXd::Zero(suite.dim());
  double max_norm = 0.0;
  for (Eigen::Index i = 0; i < X_.cols(); ++i)
    max_norm = std::max(max_norm, X_.col(i).norm());
  init_scale_ = std::max(1.0, max_norm);
}

Eigen::VectorXd Stepper::tracking_sum() const {
  throw std::logic_error("algorithm has no tracking variable");
}

Eigen::VectorXd Stepper::tracked_gradient_sum() const {
  throw std::logic_error("algorithm has no tracking variable");
}

void Stepper::draw_gradients(const Eigen::MatrixXd& at, long long stream_iter,
                             Eigen::MatrixXd& out) {
  const int n = suite_.agents();
  out.resize(suite_.dim(), n);
  Eigen::VectorXd g(suite_.dim());
  for (int i = 0; i < n; ++i) {
    RngStream rng(hp_.seed, static_cast<std::uint64_t>(i),
                  static_cast<std::uint64_t>(stream_iter),
                  StreamPurpose::gradient);
    stochastic_gradient(suite_, noise_, i, at.col(i), rng, g);
    out.col(i) = g;
  }
  gsum_ = out.rowwise().sum();
}

void Stepper::check_divergence() {
  if (!X_.allFinite()) {
    diverged_ = true;
    return;
  }
  for (Eigen::Index i = 0; i < X_.cols(); ++i)
    if (X_.col(i).norm() > 1e6 * init_scale_) {
      diverged_ = true;
      return;
    }
}

namespace {

// oldsgd / dsgd (stale inbox, combine with accumulated own gradients) and
// ldsgd / lsgd (fresh models). dsgd is the tau = 1 special case of the stale
// path; lsgd is the fresh path under the exact-averaging matrix.
class LocalConsensusStepper : public Stepper {
 public:
  enum class Mode { overlap_stale, fresh };

  LocalConsensusStepper(const ObjectiveSuite& suite, const NoiseModel& noise,
                        const Eigen::MatrixXd& W, const Eigen::MatrixXd& X0,
                        const Hyperparams& hp, Mode mode, int tau)
      : Stepper(suite, noise, X0, hp), W_(W), mode_(mode), tau_(tau) {
    if (W_.rows() != X_.cols() || W_.cols() != X_.cols())
      throw std::invalid_argument("mixing matrix size mismatches agent count");
    if (mode_ == Mode::overlap_stale) {
      inbox_ = X_;  // models sent at t = 0
      accum_ = Eigen::MatrixXd::Zero(X_.rows(), X_.cols());
    }
  }

  void step() override {
    if (diverged_) return;
    const long long t_next = t_ + 1;
    draw_gradients(X_, t_, G_);
    if (mode_ == Mode::overlap_stale) {
      accum_ += G_;
      if (t_next % tau_ != 0) {
        X_ -= hp_.alpha * G_;
      } else {
        X_ = inbox_ * W_ - hp_.alpha * accum_;
        inbox_ = X_;
        accum_.setZero();
      }
    } else {
      if (t_next % tau_ != 0) {
        X_ -= hp_.alpha * G_;
      } else if (hp_.ldsgd_literal_cta) {
        X_ = X_ * W_ - hp_.alpha * G_;
      } else {
        X_ = (X_ - hp_.alpha * G_) * W_;
      }
    }
    t_ = t_next;
    check_divergence();
  }

 private:
  Eigen::MatrixXd W_;
  Eigen::MatrixXd inbox_;
  Eigen::MatrixXd accum_;
  Eigen::MatrixXd G_;
  Mode mode_;
  int tau_;
};

// olgt / lugt. Boundaries sit at iteration indices k in {0, T0, 2T0, ...}
// and produce x^{k+1}; the overlapping variant mixes the snapshots taken at
// the previous boundary and applies the window sum of tracking variables,
// the fresh variant mixes current state with a one-step window (the form
// that preserves sum_i y_i = alpha sum_i g_i).
class TrackingStepper : public Stepper {
 public:
  TrackingStepper(const ObjectiveSuite& suite, const NoiseModel& noise,
                  const Eigen::MatrixXd& W, const Eigen::MatrixXd& X0,
                  const Hyperparams& hp, bool overlap)
      : Stepper(suite, noise, X0, hp), W_(W), overlap_(overlap) {
    if (W_.rows() != X_.cols() || W_.cols() != X_.cols())
      throw std::invalid_argument("mixing matrix size mismatches agent count");
    draw_gradients(X_, 0, lastG_);
    Y_ = hp_.alpha * lastG_;
    snapX_ = X_;
    snapY_ = Y_;
    snapG_ = lastG_;
    Yacc_ = Y_;
  }

  void step() override {
    if (diverged_) return;
    Eigen::MatrixXd Xn, Gn;
    if (t_ % hp_.tau == 0) {
      const Eigen::MatrixXd& xin = overlap_ ? snapX_ : X_;
      const Eigen::MatrixXd& yin = overlap_ ? snapY_ : Y_;
      const Eigen::MatrixXd& ywin = overlap_ ? Yacc_ : Y_;
      const Eigen::MatrixXd& gref = overlap_ ? snapG_ : lastG_;
      Xn = xin * W_ - hp_.eta * ywin;
      draw_gradients(Xn, t_ + 1, Gn);
      Y_ = yin * W_ + hp_.alpha * (Gn - gref);
      X_ = std::move(Xn);
      lastG_ = std::move(Gn);
      snapX_ = X_;
      snapY_ = Y_;
      snapG_ = lastG_;
      Yacc_ = Y_;
    } else {
      Xn = X_ - hp_.eta * Y_;
      draw_gradients(Xn, t_ + 1, Gn);
      Y_ += hp_.alpha * (Gn - lastG_);
      X_ = std::move(Xn);
      lastG_ = std::move(Gn);
      Yacc_ += Y_;
    }
    ++t_;
    check_divergence();
  }

  bool has_tracking() const override { return true; }
  Eigen::VectorXd tracking_sum() const override { return Y_.rowwise().sum(); }
  Eigen::VectorXd tracked_gradient_sum() const override {
    return lastG_.rowwise().sum();
  }

 private:
  Eigen::MatrixXd W_;
  Eigen::MatrixXd Y_, lastG_;
  Eigen::MatrixXd snapX_, snapY_, snapG_, Yacc_;
  bool overlap_;
};

// oled / led. Rounds of tau inner corrected-SGD steps; the boundary mixes
// stale round-start models (oled) or post-local models (led) and updates the
// correction with full-gradient differences.
class DiffusionStepper : public Stepper {
 public:
  DiffusionStepper(const ObjectiveSuite& suite, const NoiseModel& noise,
                   const Eigen::MatrixXd& W, const Eigen::MatrixXd& X0,
                   const Hyperparams& hp, bool led)
      : Stepper(suite, noise, X0, hp), W_(W), led_(led) {
    if (W_.rows() != X_.cols() || W_.cols() != X_.cols())
      throw std::invalid_argument("mixing matrix size mismatches agent count");
    Y_ = X_ - X_ * W_;
    Xr_ = X_;
    full_gradients(X_, lastFullG_);
  }

  void step() override {
    if (diverged_) return;
    const int s = static_cast<int>(t_ % hp_.tau) + 1;
    draw_gradients(X_, t_, G_);
    X_ -= hp_.alpha * G_ + hp_.beta * Y_;
    if (s == hp_.tau) {
      Eigen::MatrixXd Xnew =
          led_ ? Eigen::MatrixXd(X_ * W_)
               : Eigen::MatrixXd(Xr_ * W_ + (X_ - Xr_));
      Eigen::MatrixXd newG;
      full_gradients(Xnew, newG);
      Y_ += newG - lastFullG_;
      lastFullG_ = std::move(newG);
      Xr_ = Xnew;
      X_ = std::move(Xnew);
    }
    ++t_;
    check_divergence();
  }

 private:
  void full_gradients(const Eigen::MatrixXd& at, Eigen::MatrixXd& out) {
    out.resize(at.rows(), at.cols());
    Eigen::VectorXd g(at.rows());
    for (Eigen::Index i = 0; i < at.cols(); ++i) {
      suite_.full_gradient(static_cast<int>(i), at.col(i), g);
      out.col(i) = g;
    }
  }

  Eigen::MatrixXd W_;
  Eigen::MatrixXd Y_, Xr_, lastFullG_, G_;
  bool led_;
};

}  // namespace

bool is_algorithm_id(std::string_view algorithm) {
  return algorithm == "oldsgd" || algorithm == "ldsgd" || algorithm == "dsgd" ||
         algorithm == "lsgd" || algorithm == "olgt" || algorithm == "lugt" ||
         algorithm == "oled" || algorithm == "led";
}

std::unique_ptr<Stepper> make_stepper(std::string_view algorithm,
                                      const ObjectiveSuite& suite,
                                      const NoiseModel& noise,
                                      const MixingMatrix& mix,
                                      const Eigen::MatrixXd& X0,
                                      const Hyperparams& hp) {
  using Mode = LocalConsensusStepper::Mode;
  if (algorithm == "oldsgd")
    return std::make_unique<LocalConsensusStepper>(suite, noise, mix.W, X0, hp,
                                                   Mode::overlap_stale,
                                                   hp.tau);
  if (algorithm == "dsgd")
    return std::make_unique<LocalConsensusStepper>(suite, noise, mix.W, X0, hp,
                                                   Mode::overlap_stale, 1);
  if (algorithm == "ldsgd")
    return std::make_unique<LocalConsensusStepper>(suite, noise, mix.W, X0, hp,
                                                   Mode::fresh, hp.tau);
  if (algorithm == "lsgd") {
    const MixingMatrix uniform = uniform_complete_weights(suite.agents());
    return std::make_unique<LocalConsensusStepper>(suite, noise, uniform.W, X0,
                                                   hp, Mode::fresh, hp.tau);
  }
  if (algorithm == "olgt")
    return std::make_unique<TrackingStepper>(suite, noise, mix.W, X0, hp,
                                             true);
  if (algorithm == "lugt")
    return std::make_unique<TrackingStepper>(suite, noise, mix.W, X0, hp,
                                             false);
  if (algorithm == "oled")
    return std::make_unique<DiffusionStepper>(suite, noise, mix.W, X0, hp,
                                              false);
  if (algorithm == "led")
    return std::make_unique<DiffusionStepper>(suite, noise, mix.W, X0, hp,
                                              true);
  throw std::invalid_argument("unknown algorithm id: " +
                              std::string(algorithm));
}

}  // namespace decsgd
