#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "decsgd/algorithms.hpp"
#include "decsgd/objectives.hpp"
#include "decsgd/theory.hpp"
#include "decsgd/timemodel.hpp"
#include "decsgd/topology.hpp"

namespace decsgd {

struct TopologySpec {
  std::string kind = "ring";  // "ring" | "complete"
  int n = 8;
};

struct ObjectiveSpec {
  std::string kind = "quadratic";  // "quadratic" | "logistic" | "logistic_file"
  int d = 50;
  // quadratic: A = diag(linspace(lambda_min, lambda_max, d))
  double lambda_min = 1.0;
  double lambda_max = 1.0;
  double zeta2 = 0.0;
  double bbar_norm = 1.0;
  // logistic
  int samples_per_agent = 50;
  double spread = 1.0;
  double mu = 0.1;
  std::string path;  // logistic_file: committed dataset JSON
};

struct NoiseSpec {
  std::string kind = "additive";  // "additive" | "multiplicative" | "minibatch"
  double sigma = 0.0;
  double m = 0.0;
  int batch_size = 1;
};

struct InitSpec {
  std::string kind = "zeros";  // "zeros" | "gaussian"
  double scale = 1.0;
};

struct RunConfig {
  int schema_version = 1;
  std::string algorithm = "oldsgd";
  TopologySpec topology;
  ObjectiveSpec objective;
  NoiseSpec noise;
  InitSpec init;
  std::string alpha_mode = "fixed";  // "fixed" | "theory" (alpha = step-size cap)
  double alpha = 0.01;
  int tau = 5;
  long long iterations = 20000;
  std::uint64_t seed = 1;
  double c = 1.0;
  long long cadence = 1;
  double eta = 1.0;
  double beta = 1.0;
  std::string ldsgd_rule = "atc";  // "atc" | "cta" (literal printed form)
  std::optional<double> target_loss;
  bool stop_at_target = false;
  std::string output;  // CSV path; written atomically when non-empty
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
// Deterministic (sorted-key) JSON; parse(to_json(c)) round-trips.
std::string run_config_to_json(const RunConfig& config);

enum class RunStatus { converged, budget_exhausted, diverged, failed };
std::string to_string(RunStatus status);

struct TraceRow {
  long long iteration;
  double simulated_time;
  double f_xbar;
  double grad_norm_sq;
  double consensus_error;
  bool diverged;
};

struct RunTrace {
  RunConfig config;  // resolved (alpha substituted when alpha_mode="theory")
  std::vector<TraceRow> rows;
  RunStatus status = RunStatus::budget_exhausted;
  std::string error;  // non-empty only when status == failed
  long long iterations_run = 0;
  double mean_grad_norm_sq = 0;  // (1/T) sum_{t=0}^{T-1} ||grad f(xbar_t)||^2
  double max_identity_dev = 0;   // average-update identity deviation (SGD family)
  double final_loss = 0;
};

// Materialized experiment pieces shared by run() and the theory bridge.
struct Instance {
  std::unique_ptr<ObjectiveSuite> suite;
  MixingMatrix mix;
  NoiseModel noise;
  Eigen::MatrixXd X0;
};
Instance build_instance(const RunConfig& config);

// Analytic constants of the configured instance (throws when the objective
// or noise model has no analytic constants and they are required).
TheoryConstants constants_for(const RunConfig& config);
// config.alpha, or the step-size cap when alpha_mode == "theory".
double resolve_alpha(const RunConfig& config);

RunTrace run(const RunConfig& config);

std::string trace_to_csv(const RunTrace& trace);
void write_trace_file(const RunTrace& trace, const std::string& path);
RunTrace read_trace_file(const std::string& path);

struct SweepGrid {
  std::vector<std::string> algorithm;
  std::vector<int> tau;
  std::vector<double> c;
  std::vector<std::uint64_t> seed;
};

// One run per grid point in grid order (algorithm, tau, c, seed); per-point
// seeds are derived from (base seed, tau index, c index, seed index) and
// deliberately exclude the algorithm so algorithms are paired draw-for-draw.
// Points run on a pool of DECSGD_WORKERS threads (default 1); results merge
// in grid order. Per-point failures become status=failed entries.
std::vector<RunTrace> sweep(const RunConfig& base, const SweepGrid& grid);

// Simulated time of the first row with f(xbar) <= target.
std::optional<double> time_to_target(const RunTrace& trace, double target_loss);

struct SpeedupEntry {
  std::string algorithm;
  double c;
  int best_tau;     // argmin over tau of time-to-target
  double time;      // min over tau of time-to-target
  double speedup;   // time / oldsgd's time at the same c
  bool reachable;
};

struct SpeedupReport {
  double target_loss;
  std::vector<SpeedupEntry> entries;
  // Per algorithm: geometric mean of its speedups across c settings,
  // excluding unreachable entries.
  std::vector<std::pair<std::string, double>> geomean;
};

SpeedupReport speedup_report(const std::vector<RunTrace>& traces,
                             double target_loss);
std::string speedup_report_to_json(const SpeedupReport& report);

double geometric_mean(const std::vector<double>& values);

struct ScalabilityRow {
  int n;
  std::optional<double> time;
  double speedup;  // time(n=1) / time(n)
};

std::vector<ScalabilityRow> scalability_report(const RunConfig& base,
                                               const std::vector<int>& n_list,
                                               double target_loss);
std::string scalability_to_json(const std::vector<ScalabilityRow>& rows);

struct BoundCheck {
  double lhs;  // seed-averaged (1/T) sum ||grad f(xbar_t)||^2
  double rhs;  // theorem bound at the resolved alpha
  double slack_ratio;
  int seeds;
};
BoundCheck verify_bound(const RunConfig& base, int seeds);
std::string bound_check_to_json(const BoundCheck& check);

struct InvariantReport {
  double identity_dev = 0;       // SGD-family average-update identity
  double conservation_dev = 0;   // tracking-variable conservation (GT family)
  double consensus_oracle_dev = 0;
  bool determinism_ok = false;
  bool pass = false;
};
InvariantReport verify_invariants(const RunConfig& base);
std::string invariant_report_to_json(const InvariantReport& report);

// 17-significant-digit, locale-independent float formatting used everywhere
// numbers are serialized.
std::string format_double(double value);

}  // namespace decsgd
