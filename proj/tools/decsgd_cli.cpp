#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "decsgd/harness.hpp"

namespace {

using namespace decsgd;

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

SweepGrid parse_grid(const std::string& algorithms, const std::string& taus,
                     const std::string& cs, const std::string& seeds) {
  SweepGrid grid;
  if (!algorithms.empty()) grid.algorithm = split_csv(algorithms);
  if (!taus.empty())
    for (const auto& t : split_csv(taus)) grid.tau.push_back(std::stoi(t));
  if (!cs.empty())
    for (const auto& c : split_csv(cs)) grid.c.push_back(std::stod(c));
  if (!seeds.empty())
    for (const auto& s : split_csv(seeds)) grid.seed.push_back(std::stoull(s));
  return grid;
}

int cmd_run(const std::string& config_path, const std::string& output) {
  RunConfig config = load_run_config(config_path);
  if (!output.empty()) config.output = output;
  const RunTrace trace = run(config);
  std::cout << "status " << to_string(trace.status) << " iterations "
            << trace.iterations_run << " final_loss "
            << format_double(trace.final_loss) << '\n';
  return trace.status == RunStatus::diverged ? 2 : 0;
}

int cmd_sweep(const std::string& config_path, const std::string& algorithms,
              const std::string& taus, const std::string& cs,
              const std::string& seeds, const std::string& outdir) {
  RunConfig base = load_run_config(config_path);
  if (!outdir.empty()) base.output = outdir;
  SweepGrid grid = parse_grid(algorithms, taus, cs, seeds);
  if (grid.algorithm.empty()) grid.algorithm = {base.algorithm};
  const auto traces = sweep(base, grid);
  for (const auto& tr : traces) {
    std::cout << tr.config.algorithm << " tau=" << tr.config.tau
              << " c=" << format_double(tr.config.c) << " seed="
              << tr.config.seed << " status=" << to_string(tr.status)
              << " final_loss=" << format_double(tr.final_loss) << '\n';
  }
  return 0;
}

int cmd_report_speedup(const std::vector<std::string>& trace_paths,
                       double target) {
  std::vector<RunTrace> traces;
  traces.reserve(trace_paths.size());
  for (const auto& p : trace_paths) traces.push_back(read_trace_file(p));
  std::cout << speedup_report_to_json(speedup_report(traces, target)) << '\n';
  return 0;
}

int cmd_report_scalability(const std::string& config_path,
                           const std::string& n_list, double target) {
  const RunConfig base = load_run_config(config_path);
  std::vector<int> ns;
  for (const auto& n : split_csv(n_list)) ns.push_back(std::stoi(n));
  std::cout << scalability_to_json(scalability_report(base, ns, target))
            << '\n';
  return 0;
}

int cmd_verify_bound(const std::string& config_path, int seeds) {
  const RunConfig base = load_run_config(config_path);
  std::cout << bound_check_to_json(verify_bound(base, seeds)) << '\n';
  return 0;
}

int cmd_verify_invariants(const std::string& config_path) {
  const RunConfig base = load_run_config(config_path);
  const InvariantReport report = verify_invariants(base);
  std::cout << invariant_report_to_json(report) << '\n';
  return report.pass ? 0 : 1;
}

int cmd_print_mixing(const std::string& kind, int n) {
  MixingMatrix mix;
  if (kind == "ring") mix = metropolis_weights(build_ring(n));
  else if (kind == "complete") mix = uniform_complete_weights(n);
  else throw std::invalid_argument("unknown topology kind: " + kind);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j) std::cout << ',';
      std::cout << format_double(mix.W(i, j));
    }
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized SGD simulator"};
  app.require_subcommand(1);

  std::string config_path, output, outdir;
  std::string algorithms, taus, cs, seeds_list, n_values;
  std::vector<std::string> trace_paths;
  std::string topo_kind = "ring";
  int n = 8;
  int bound_seeds = 20;
  double target = 0.0;

  auto* run_cmd = app.add_subcommand("run", "Run one configuration");
  run_cmd->add_option("--config", config_path, "RunConfig JSON file")
      ->required();
  run_cmd->add_option("--output", output, "trace CSV path (overrides config)");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter grid");
  sweep_cmd->add_option("--config", config_path, "base RunConfig JSON file")
      ->required();
  sweep_cmd->add_option("--algorithms", algorithms, "comma-separated ids");
  sweep_cmd->add_option("--taus", taus, "comma-separated local step counts");
  sweep_cmd->add_option("--cs", cs, "comma-separated communication ratios");
  sweep_cmd->add_option("--seeds", seeds_list, "comma-separated base seeds");
  sweep_cmd->add_option("--outdir", outdir, "directory for trace CSVs");

  auto* speed_cmd =
      app.add_subcommand("report-speedup", "Speedup table from trace files");
  speed_cmd->add_option("--target", target, "target loss")->required();
  speed_cmd->add_option("traces", trace_paths, "trace CSV files")->required();

  auto* scale_cmd =
      app.add_subcommand("report-scalability", "Speedup vs agent count");
  scale_cmd->add_option("--config", config_path, "base RunConfig JSON file")
      ->required();
  scale_cmd->add_option("--n", n_values, "comma-separated agent counts")
      ->required();
  scale_cmd->add_option("--target", target, "target loss")->required();

  auto* bound_cmd =
      app.add_subcommand("verify-bound", "Check the convergence bound");
  bound_cmd->add_option("--config", config_path, "RunConfig JSON file")
      ->required();
  bound_cmd->add_option("--seeds", bound_seeds, "number of seeds to average");

  auto* inv_cmd =
      app.add_subcommand("verify-invariants", "Check run invariants");
  inv_cmd->add_option("--config", config_path, "RunConfig JSON file")
      ->required();

  auto* mix_cmd = app.add_subcommand("print-mixing", "Print W row-major CSV");
  mix_cmd->add_option("--topology", topo_kind, "ring | complete");
  mix_cmd->add_option("--n", n, "agent count")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(config_path, output);
    if (sweep_cmd->parsed())
      return cmd_sweep(config_path, algorithms, taus, cs, seeds_list, outdir);
    if (speed_cmd->parsed()) return cmd_report_speedup(trace_paths, target);
    if (scale_cmd->parsed())
      return cmd_report_scalability(config_path, n_values, target);
    if (bound_cmd->parsed()) return cmd_verify_bound(config_path, bound_seeds);
    if (inv_cmd->parsed()) return cmd_verify_invariants(config_path);
    if (mix_cmd->parsed()) return cmd_print_mixing(topo_kind, n);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
