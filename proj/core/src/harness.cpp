#include "decsgd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <system_error>
#include <thread>

#include <json.hpp>

namespace decsgd {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::converged: return "converged";
    case RunStatus::budget_exhausted: return "budget_exhausted";
    case RunStatus::diverged: return "diverged";
    case RunStatus::failed: return "failed";
  }
  return "unknown";
}

namespace {

using nlohmann::json;

json config_to_json_obj(const RunConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["algorithm"] = c.algorithm;
  j["topology"] = {{"kind", c.topology.kind}, {"n", c.topology.n}};
  j["objective"] = {{"kind", c.objective.kind},
                    {"d", c.objective.d},
                    {"lambda_min", c.objective.lambda_min},
                    {"lambda_max", c.objective.lambda_max},
                    {"zeta2", c.objective.zeta2},
                    {"bbar_norm", c.objective.bbar_norm},
                    {"samples_per_agent", c.objective.samples_per_agent},
                    {"spread", c.objective.spread},
                    {"mu", c.objective.mu},
                    {"path", c.objective.path}};
  j["noise"] = {{"kind", c.noise.kind},
                {"sigma", c.noise.sigma},
                {"m", c.noise.m},
                {"batch_size", c.noise.batch_size}};
  j["init"] = {{"kind", c.init.kind}, {"scale", c.init.scale}};
  j["alpha"] = c.alpha;
  j["alpha_mode"] = c.alpha_mode;
  j["tau"] = c.tau;
  j["iterations"] = c.iterations;
  j["seed"] = c.seed;
  j["c"] = c.c;
  j["cadence"] = c.cadence;
  j["eta"] = c.eta;
  j["beta"] = c.beta;
  j["ldsgd_rule"] = c.ldsgd_rule;
  if (c.target_loss) j["target_loss"] = *c.target_loss;
  else j["target_loss"] = nullptr;
  j["stop_at_target"] = c.stop_at_target;
  j["output"] = c.output;
  return j;
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

RunConfig config_from_json_obj(const json& j) {
  RunConfig c;
  read_field(j, "schema_version", c.schema_version);
  if (c.schema_version != 1)
    throw std::invalid_argument("unsupported config schema_version");
  read_field(j, "algorithm", c.algorithm);
  if (j.contains("topology")) {
    read_field(j.at("topology"), "kind", c.topology.kind);
    read_field(j.at("topology"), "n", c.topology.n);
  }
  if (j.contains("objective")) {
    const json& o = j.at("objective");
    read_field(o, "kind", c.objective.kind);
    read_field(o, "d", c.objective.d);
    read_field(o, "lambda_min", c.objective.lambda_min);
    read_field(o, "lambda_max", c.objective.lambda_max);
    read_field(o, "zeta2", c.objective.zeta2);
    read_field(o, "bbar_norm", c.objective.bbar_norm);
    read_field(o, "samples_per_agent", c.objective.samples_per_agent);
    read_field(o, "spread", c.objective.spread);
    read_field(o, "mu", c.objective.mu);
    read_field(o, "path", c.objective.path);
  }
  if (j.contains("noise")) {
    const json& nj = j.at("noise");
    read_field(nj, "kind", c.noise.kind);
    read_field(nj, "sigma", c.noise.sigma);
    read_field(nj, "m", c.noise.m);
    read_field(nj, "batch_size", c.noise.batch_size);
  }
  if (j.contains("init")) {
    read_field(j.at("init"), "kind", c.init.kind);
    read_field(j.at("init"), "scale", c.init.scale);
  }
  read_field(j, "alpha", c.alpha);
  read_field(j, "alpha_mode", c.alpha_mode);
  read_field(j, "tau", c.tau);
  read_field(j, "iterations", c.iterations);
  read_field(j, "seed", c.seed);
  read_field(j, "c", c.c);
  read_field(j, "cadence", c.cadence);
  read_field(j, "eta", c.eta);
  read_field(j, "beta", c.beta);
  read_field(j, "ldsgd_rule", c.ldsgd_rule);
  if (j.contains("target_loss") && !j.at("target_loss").is_null())
    c.target_loss = j.at("target_loss").get<double>();
  read_field(j, "stop_at_target", c.stop_at_target);
  read_field(j, "output", c.output);
  return c;
}

void validate_config(const RunConfig& c) {
  if (!is_algorithm_id(c.algorithm))
    throw std::invalid_argument("unknown algorithm id: " + c.algorithm);
  if (c.topology.kind != "ring" && c.topology.kind != "complete")
    throw std::invalid_argument("unknown topology kind: " + c.topology.kind);
  if (c.objective.kind != "quadratic" && c.objective.kind != "logistic" &&
      c.objective.kind != "logistic_file")
    throw std::invalid_argument("unknown objective kind: " + c.objective.kind);
  if (c.noise.kind != "additive" && c.noise.kind != "multiplicative" &&
      c.noise.kind != "minibatch")
    throw std::invalid_argument("unknown noise kind: " + c.noise.kind);
  if (c.init.kind != "zeros" && c.init.kind != "gaussian")
    throw std::invalid_argument("unknown init kind: " + c.init.kind);
  if (c.alpha_mode != "fixed" && c.alpha_mode != "theory")
    throw std::invalid_argument("alpha_mode must be \"fixed\" or \"theory\"");
  if (c.ldsgd_rule != "atc" && c.ldsgd_rule != "cta")
    throw std::invalid_argument("ldsgd_rule must be \"atc\" or \"cta\"");
  if (c.cadence < 1) throw std::invalid_argument("cadence must be >= 1");
  if (c.iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (c.tau < 1) throw std::invalid_argument("tau must be >= 1");
  if (c.c <= 0) throw std::invalid_argument("c must be > 0");
}

bool sgd_family(const std::string& alg) {
  return alg == "oldsgd" || alg == "ldsgd" || alg == "dsgd" || alg == "lsgd";
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out.flush())
      throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec)
    throw std::runtime_error("atomic rename failed for " + path + ": " +
                             ec.message());
}

int worker_count() {
  const char* env = std::getenv("DECSGD_WORKERS");
  if (!env) return 1;
  const int v = std::atoi(env);
  return v >= 1 ? v : 1;
}

}  // namespace

std::string run_config_to_json(const RunConfig& config) {
  return config_to_json_obj(config).dump();
}

RunConfig parse_run_config(const std::string& json_text) {
  RunConfig config = config_from_json_obj(json::parse(json_text));
  validate_config(config);
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_run_config(buf.str());
  } catch (const std::exception& e) {
    throw std::runtime_error("failed to parse config " + path + ": " +
                             e.what());
  }
}

Instance build_instance(const RunConfig& config) {
  validate_config(config);
  Instance inst;

  if (config.topology.kind == "ring") {
    inst.mix = metropolis_weights(build_ring(config.topology.n));
  } else {
    inst.mix = uniform_complete_weights(config.topology.n);
  }

  const ObjectiveSpec& o = config.objective;
  if (o.kind == "quadratic") {
    inst.suite = std::make_unique<QuadraticSuite>(
        o.d, config.topology.n, o.lambda_min, o.lambda_max, o.zeta2,
        o.bbar_norm, config.seed);
  } else if (o.kind == "logistic") {
    inst.suite = std::make_unique<LogisticSuite>(
        o.d, config.topology.n, o.samples_per_agent, o.spread, o.mu,
        config.seed);
  } else {
    inst.suite = std::make_unique<LogisticSuite>(load_logistic_file(o.path));
    if (inst.suite->agents() != config.topology.n)
      throw std::invalid_argument(
          "dataset agent count disagrees with the configured topology");
  }

  if (config.noise.kind == "additive") {
    inst.noise.kind = NoiseModel::Kind::additive;
    inst.noise.sigma = config.noise.sigma;
  } else if (config.noise.kind == "multiplicative") {
    inst.noise.kind = NoiseModel::Kind::multiplicative;
    inst.noise.m = config.noise.m;
  } else {
    inst.noise.kind = NoiseModel::Kind::minibatch;
    inst.noise.batch_size = config.noise.batch_size;
  }

  const int d = inst.suite->dim();
  const int n = inst.suite->agents();
  inst.X0.setZero(d, n);
  if (config.init.kind == "gaussian") {
    for (int i = 0; i < n; ++i) {
      RngStream rng(config.seed, static_cast<std::uint64_t>(i), 0,
                    StreamPurpose::init);
      for (int k = 0; k < d; ++k)
        inst.X0(k, i) = config.init.scale * rng.gaussian();
    }
  }
  return inst;
}

TheoryConstants constants_for(const RunConfig& config) {
  const Instance inst = build_instance(config);
  TheoryConstants tc;
  tc.L = inst.suite->smoothness_constant();
  const Heterogeneity h = inst.suite->heterogeneity_constants();
  tc.zeta2 = h.zeta2;
  tc.P = h.P;
  if (config.noise.kind == "additive") {
    tc.sigma2 = config.noise.sigma * config.noise.sigma;
    tc.M = 0;
  } else if (config.noise.kind == "multiplicative") {
    tc.sigma2 = 0;
    tc.M = config.noise.m * config.noise.m;
  } else {
    throw std::invalid_argument(
        "minibatch noise has no analytic variance constants");
  }
  tc.p = inst.mix.p;
  tc.tau = config.tau;
  tc.n = config.topology.n;
  const Eigen::VectorXd xbar0 = inst.X0.rowwise().mean();
  tc.f0 = inst.suite->global_loss(xbar0);
  tc.fstar = inst.suite->has_minimum()
                 ? inst.suite->fstar()
                 : std::numeric_limits<double>::quiet_NaN();
  return tc;
}

double resolve_alpha(const RunConfig& config) {
  if (config.alpha_mode == "fixed") return config.alpha;
  return max_step_size(constants_for(config));
}

RunTrace run(const RunConfig& config) {
  RunTrace trace;
  trace.config = config;
  trace.config.alpha = resolve_alpha(config);

  const Instance inst = build_instance(config);
  const ObjectiveSuite& suite = *inst.suite;
  const CostModel cm{config.c, config.topology.n};

  Hyperparams hp;
  hp.alpha = trace.config.alpha;
  hp.tau = config.tau;
  hp.T = config.iterations;
  hp.seed = config.seed;
  hp.eta = config.eta;
  hp.beta = config.beta;
  hp.ldsgd_literal_cta = config.ldsgd_rule == "cta";

  auto stepper =
      make_stepper(config.algorithm, suite, inst.noise, inst.mix, inst.X0, hp);

  const bool track_identity = sgd_family(config.algorithm);
  Eigen::VectorXd xbar = stepper->xbar();
  Eigen::VectorXd xref = xbar;
  Eigen::VectorXd grad(suite.dim());
  const double n = static_cast<double>(suite.agents());

  double sum_gradsq = 0.0;
  bool hit_target = false;

  auto metrics_row = [&](long long t) {
    TraceRow row;
    row.iteration = t;
    row.simulated_time = elapsed(config.algorithm, config.tau, cm, t);
    row.f_xbar = suite.global_loss(xbar);
    suite.global_gradient(xbar, grad);
    row.grad_norm_sq = grad.squaredNorm();
    row.consensus_error = stepper->consensus_error();
    row.diverged = stepper->diverged();
    return row;
  };

  TraceRow row = metrics_row(0);
  trace.rows.push_back(row);
  trace.final_loss = row.f_xbar;
  if (config.target_loss && row.f_xbar <= *config.target_loss)
    hit_target = true;

  long long t = 0;
  const long long T = config.iterations;
  while (t < T && !(hit_target && config.stop_at_target) &&
         !stepper->diverged()) {
    sum_gradsq += row.grad_norm_sq;  // accumulates iterations 0 .. T-1
    stepper->step();
    ++t;
    xbar = stepper->xbar();
    row = metrics_row(t);

    if (track_identity) {
      xref -= (hp.alpha / n) * stepper->last_gradient_sum();
      const double dev =
          (xbar - xref).norm() / std::max(1.0, xbar.norm());
      trace.max_identity_dev = std::max(trace.max_identity_dev, dev);
    }

    const bool newly_hit =
        config.target_loss && !hit_target && row.f_xbar <= *config.target_loss;
    if (newly_hit) hit_target = true;

    if (t % config.cadence == 0 || t == T || newly_hit || row.diverged ||
        (hit_target && config.stop_at_target))
      trace.rows.push_back(row);
    trace.final_loss = row.f_xbar;
  }

  trace.iterations_run = t;
  trace.mean_grad_norm_sq = sum_gradsq / static_cast<double>(std::max<long long>(t, 1));
  if (stepper->diverged()) trace.status = RunStatus::diverged;
  else if (hit_target) trace.status = RunStatus::converged;
  else trace.status = RunStatus::budget_exhausted;

  if (!config.output.empty()) write_trace_file(trace, config.output);
  return trace;
}

std::string trace_to_csv(const RunTrace& trace) {
  std::ostringstream out;
  out << "# config " << run_config_to_json(trace.config) << '\n';
  out << "# seed " << trace.config.seed << '\n';
  out << "# status " << to_string(trace.status) << '\n';
  if (trace.status == RunStatus::failed) out << "# error " << trace.error << '\n';
  out << "iteration,simulated_time,f_xbar,grad_norm_sq,consensus_error,"
         "diverged\n";
  for (const TraceRow& r : trace.rows) {
    out << r.iteration << ',' << format_double(r.simulated_time) << ','
        << format_double(r.f_xbar) << ',' << format_double(r.grad_norm_sq)
        << ',' << format_double(r.consensus_error) << ','
        << (r.diverged ? 1 : 0) << '\n';
  }
  return out.str();
}

void write_trace_file(const RunTrace& trace, const std::string& path) {
  atomic_write(path, trace_to_csv(trace));
}

RunTrace read_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  RunTrace trace;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# config ", 0) == 0)
        trace.config = parse_run_config(line.substr(9));
      else if (line.rfind("# status ", 0) == 0) {
        const std::string s = line.substr(9);
        if (s == "converged") trace.status = RunStatus::converged;
        else if (s == "budget_exhausted") trace.status = RunStatus::budget_exhausted;
        else if (s == "diverged") trace.status = RunStatus::diverged;
        else trace.status = RunStatus::failed;
      } else if (line.rfind("# error ", 0) == 0)
        trace.error = line.substr(8);
      continue;
    }
    if (!saw_header) {  // column header line
      saw_header = true;
      continue;
    }
    TraceRow r;
    std::istringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    r.iteration = std::stoll(tok);
    std::getline(ss, tok, ',');
    r.simulated_time = std::stod(tok);
    std::getline(ss, tok, ',');
    r.f_xbar = std::stod(tok);
    std::getline(ss, tok, ',');
    r.grad_norm_sq = std::stod(tok);
    std::getline(ss, tok, ',');
    r.consensus_error = std::stod(tok);
    std::getline(ss, tok, ',');
    r.diverged = tok == "1";
    trace.rows.push_back(r);
  }
  trace.iterations_run = trace.rows.empty() ? 0 : trace.rows.back().iteration;
  trace.final_loss = trace.rows.empty() ? 0.0 : trace.rows.back().f_xbar;
  return trace;
}

std::vector<RunTrace> sweep(const RunConfig& base, const SweepGrid& grid) {
  if (grid.algorithm.empty())
    throw std::invalid_argument("sweep grid has an empty algorithm list");
  const std::vector<int> taus = grid.tau.empty() ? std::vector<int>{base.tau}
                                                 : grid.tau;
  const std::vector<double> cs =
      grid.c.empty() ? std::vector<double>{base.c} : grid.c;
  const std::vector<std::uint64_t> seeds =
      grid.seed.empty() ? std::vector<std::uint64_t>{base.seed} : grid.seed;

  struct Point {
    RunConfig config;
  };
  std::vector<Point> points;
  for (const std::string& alg : grid.algorithm)
    for (std::size_t ti = 0; ti < taus.size(); ++ti)
      for (std::size_t ci = 0; ci < cs.size(); ++ci)
        for (std::size_t si = 0; si < seeds.size(); ++si) {
          RunConfig c = base;
          c.algorithm = alg;
          c.tau = taus[ti];
          c.c = cs[ci];
          // Seeds pair algorithms: the derivation deliberately excludes the
          // algorithm so matching grid points see identical draws.
          c.seed = derive_seed(seeds[si], ti, ci, si);
          if (!base.output.empty()) {
            std::ostringstream name;
            name << alg << "_tau" << c.tau << "_c" << format_double(c.c)
                 << "_seed" << si << ".csv";
            c.output = (std::filesystem::path(base.output) / name.str()).string();
          }
          points.push_back({std::move(c)});
        }

  std::vector<RunTrace> results(points.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      try {
        results[i] = run(points[i].config);
      } catch (const std::exception& e) {
        results[i].config = points[i].config;
        results[i].status = RunStatus::failed;
        results[i].error = e.what();
      }
    }
  };
  const int workers = std::min<int>(worker_count(),
                                    static_cast<int>(points.size()));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return results;
}

std::optional<double> time_to_target(const RunTrace& trace,
                                     double target_loss) {
  if (!std::isfinite(target_loss))
    throw std::invalid_argument("target loss must be finite");
  for (const TraceRow& r : trace.rows)
    if (r.f_xbar <= target_loss) return r.simulated_time;
  return std::nullopt;
}

double geometric_mean(const std::vector<double>& values) {
  if (values.empty())
    throw std::invalid_argument("geometric mean of an empty set");
  double log_sum = 0.0;
  for (double v : values) {
    if (v <= 0) throw std::invalid_argument("geometric mean requires positives");
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(values.size()));
}

SpeedupReport speedup_report(const std::vector<RunTrace>& traces,
                             double target_loss) {
  SpeedupReport report;
  report.target_loss = target_loss;

  // (algorithm, c) -> best time over tau; grid order is preserved.
  struct Best {
    bool reachable = false;
    double time = 0;
    int tau = 0;
  };
  std::vector<std::pair<std::pair<std::string, double>, Best>> groups;
  auto find_group = [&](const std::string& alg, double c) -> Best& {
    for (auto& g : groups)
      if (g.first.first == alg && g.first.second == c) return g.second;
    groups.push_back({{alg, c}, Best{}});
    return groups.back().second;
  };
  bool saw_oldsgd = false;
  for (const RunTrace& tr : traces) {
    if (tr.status == RunStatus::failed) continue;
    if (tr.config.algorithm == "oldsgd") saw_oldsgd = true;
    Best& b = find_group(tr.config.algorithm, tr.config.c);
    const auto t = time_to_target(tr, target_loss);
    if (!t) continue;
    if (!b.reachable || *t < b.time) {
      b.reachable = true;
      b.time = *t;
      b.tau = tr.config.tau;
    }
  }
  if (!saw_oldsgd)
    throw std::invalid_argument("speedup report requires oldsgd traces");

  for (const auto& g : groups) {
    const std::string& alg = g.first.first;
    const double c = g.first.second;
    const Best& b = g.second;
    Best* ref = nullptr;
    for (auto& og : groups)
      if (og.first.first == "oldsgd" && og.first.second == c)
        ref = &og.second;
    if (!ref || !ref->reachable)
      throw std::runtime_error(
          "oldsgd never reaches the target at c = " + format_double(c));
    SpeedupEntry e;
    e.algorithm = alg;
    e.c = c;
    e.reachable = b.reachable;
    e.best_tau = b.tau;
    e.time = b.time;
    e.speedup = b.reachable ? b.time / ref->time : 0.0;
    report.entries.push_back(e);
  }

  std::vector<std::string> algs;
  for (const auto& e : report.entries)
    if (std::find(algs.begin(), algs.end(), e.algorithm) == algs.end())
      algs.push_back(e.algorithm);
  for (const std::string& alg : algs) {
    std::vector<double> vals;
    for (const auto& e : report.entries)
      if (e.algorithm == alg && e.reachable) vals.push_back(e.speedup);
    if (!vals.empty()) report.geomean.push_back({alg, geometric_mean(vals)});
  }
  return report;
}

std::string speedup_report_to_json(const SpeedupReport& report) {
  json j;
  j["target_loss"] = report.target_loss;
  json entries = json::array();
  for (const auto& e : report.entries) {
    json ej;
    ej["algorithm"] = e.algorithm;
    ej["c"] = e.c;
    ej["best_tau"] = e.best_tau;
    ej["time_to_target"] = e.reachable ? json(e.time) : json(nullptr);
    ej["speedup"] = e.reachable ? json(e.speedup) : json(nullptr);
    ej["reachable"] = e.reachable;
    entries.push_back(ej);
  }
  j["entries"] = entries;
  json gm = json::object();
  for (const auto& [alg, v] : report.geomean) gm[alg] = v;
  j["geomean"] = gm;
  return j.dump();
}

std::vector<ScalabilityRow> scalability_report(const RunConfig& base,
                                               const std::vector<int>& n_list,
                                               double target_loss) {
  if (base.objective.kind == "quadratic" && base.objective.zeta2 != 0)
    throw std::invalid_argument(
        "scalability assumes a homogeneous instance (zeta2 = 0)");
  std::vector<int> ns = n_list;
  if (std::find(ns.begin(), ns.end(), 1) == ns.end())
    ns.insert(ns.begin(), 1);

  std::vector<ScalabilityRow> rows;
  double t1 = 0;
  bool have_t1 = false;
  for (int n : ns) {
    RunConfig c = base;
    c.topology.n = n;
    if (n == 1) c.topology.kind = "complete";  // a ring needs two agents
    c.target_loss = target_loss;
    const RunTrace tr = run(c);
    ScalabilityRow row;
    row.n = n;
    row.time = time_to_target(tr, target_loss);
    if (n == 1 && row.time) {
      t1 = *row.time;
      have_t1 = true;
    }
    row.speedup = (row.time && have_t1) ? t1 / *row.time : 0.0;
    rows.push_back(row);
  }
  return rows;
}

std::string scalability_to_json(const std::vector<ScalabilityRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json j;
    j["n"] = r.n;
    j["time_to_target"] = r.time ? json(*r.time) : json(nullptr);
    j["speedup"] = r.time ? json(r.speedup) : json(nullptr);
    arr.push_back(j);
  }
  return arr.dump();
}

BoundCheck verify_bound(const RunConfig& base, int seeds) {
  if (seeds < 1) throw std::invalid_argument("at least one seed required");
  TheoryConstants tc = constants_for(base);
  if (!std::isfinite(tc.fstar))
    throw std::invalid_argument("bound check requires an analytic minimum");
  const double alpha = resolve_alpha(base);

  double lhs_sum = 0.0;
  for (int s = 0; s < seeds; ++s) {
    RunConfig c = base;
    c.seed = derive_seed(base.seed, 0, 0, static_cast<std::uint64_t>(s));
    c.output.clear();
    c.alpha = alpha;
    c.alpha_mode = "fixed";
    const RunTrace tr = run(c);
    lhs_sum += tr.mean_grad_norm_sq;
  }
  BoundCheck check;
  check.seeds = seeds;
  check.lhs = lhs_sum / static_cast<double>(seeds);
  check.rhs = theorem1_rhs(tc, alpha, base.iterations);
  check.slack_ratio = check.rhs / check.lhs;
  return check;
}

std::string bound_check_to_json(const BoundCheck& check) {
  json j;
  j["lhs"] = check.lhs;
  j["rhs"] = check.rhs;
  j["slack_ratio"] = check.slack_ratio;
  j["seeds"] = check.seeds;
  j["pass"] = check.lhs <= check.rhs;
  return j.dump();
}

InvariantReport verify_invariants(const RunConfig& base) {
  InvariantReport report;

  RunConfig probe = base;
  probe.output.clear();
  probe.iterations = std::min<long long>(base.iterations, 2000);

  const RunTrace a = run(probe);
  const RunTrace b = run(probe);
  report.determinism_ok = trace_to_csv(a) == trace_to_csv(b);
  report.identity_dev = a.max_identity_dev;

  // Conservation of the tracking variable, checked against the drawn
  // gradients at every iteration.
  if (probe.algorithm == "olgt" || probe.algorithm == "lugt") {
    const Instance inst = build_instance(probe);
    Hyperparams hp;
    hp.alpha = resolve_alpha(probe);
    hp.tau = probe.tau;
    hp.T = probe.iterations;
    hp.seed = probe.seed;
    hp.eta = probe.eta;
    hp.beta = probe.beta;
    auto stepper = make_stepper(probe.algorithm, *inst.suite, inst.noise,
                                inst.mix, inst.X0, hp);
    for (long long t = 0; t <= probe.iterations && !stepper->diverged(); ++t) {
      const Eigen::VectorXd ysum = stepper->tracking_sum();
      const Eigen::VectorXd gsum = hp.alpha * stepper->tracked_gradient_sum();
      const double dev = (ysum - gsum).norm() / std::max(1.0, gsum.norm());
      report.conservation_dev = std::max(report.conservation_dev, dev);
      if (t < probe.iterations) stepper->step();
    }
  }

  // Consensus error against a naive double loop.
  {
    const Instance inst = build_instance(probe);
    Hyperparams hp;
    hp.alpha = resolve_alpha(probe);
    hp.tau = probe.tau;
    hp.T = std::min<long long>(probe.iterations, 50);
    hp.seed = probe.seed;
    hp.eta = probe.eta;
    hp.beta = probe.beta;
    hp.ldsgd_literal_cta = probe.ldsgd_rule == "cta";
    auto stepper = make_stepper(probe.algorithm, *inst.suite, inst.noise,
                                inst.mix, inst.X0, hp);
    for (long long t = 0; t < hp.T; ++t) stepper->step();
    const Eigen::MatrixXd& X = stepper->X();
    Eigen::VectorXd xbar = Eigen::VectorXd::Zero(X.rows());
    for (Eigen::Index i = 0; i < X.cols(); ++i) xbar += X.col(i);
    xbar /= static_cast<double>(X.cols());
    double naive = 0.0;
    for (Eigen::Index i = 0; i < X.cols(); ++i)
      for (Eigen::Index k = 0; k < X.rows(); ++k) {
        const double dvk = X(k, i) - xbar(k);
        naive += dvk * dvk;
      }
    report.consensus_oracle_dev =
        std::abs(naive - stepper->consensus_error()) / std::max(1.0, naive);
  }

  const bool identity_ok =
      !sgd_family(probe.algorithm) || report.identity_dev <= 1e-12;
  const bool conservation_ok = report.conservation_dev <= 1e-10;
  report.pass = report.determinism_ok && identity_ok && conservation_ok &&
                report.consensus_oracle_dev <= 1e-12;
  return report;
}

std::string invariant_report_to_json(const InvariantReport& report) {
  json j;
  j["identity_dev"] = report.identity_dev;
  j["conservation_dev"] = report.conservation_dev;
  j["consensus_oracle_dev"] = report.consensus_oracle_dev;
  j["determinism_ok"] = report.determinism_ok;
  j["pass"] = report.pass;
  return j.dump();
}

}  // namespace decsgd
