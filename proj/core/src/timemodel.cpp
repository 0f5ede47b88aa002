#include "decsgd/timemodel.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace decsgd {

namespace {

void require_round_inputs(int tau, const CostModel& cm) {
  if (tau < 1) throw std::invalid_argument("tau must be >= 1");
  if (cm.c <= 0) throw std::invalid_argument("communication cost must be > 0");
  if (cm.n < 1) throw std::invalid_argument("agent count must be >= 1");
}

// Per-round makespan for every id the simulator can schedule. The published
// table covers the first six; dsgd, olgt and oled are simulator extensions
// (dsgd exchanges every iteration; olgt overlaps two staged exchanges; oled
// overlaps one).
double extended_round_runtime(std::string_view alg, int tau,
                              const CostModel& cm) {
  const double t = static_cast<double>(tau);
  if (alg == "oldsgd") return std::max(t, cm.c);
  if (alg == "ldsgd") return t + cm.c;
  if (alg == "kgt") return std::max(t, cm.c) + cm.c;
  if (alg == "led") return t + cm.c;
  if (alg == "lugt") return t + 2.0 * cm.c;
  if (alg == "lsgd") return t + lsgd_allreduce_cost(cm);
  if (alg == "dsgd") return 1.0 + cm.c;
  if (alg == "olgt") return std::max(t, 2.0 * cm.c);
  if (alg == "oled") return std::max(t, cm.c);
  throw std::invalid_argument("unknown algorithm id for time model: " +
                              std::string(alg));
}

bool overlapping(std::string_view alg) {
  return alg == "oldsgd" || alg == "olgt" || alg == "oled";
}

}  // namespace

double lsgd_allreduce_cost(const CostModel& cm) {
  return (2.0 - 2.0 / static_cast<double>(cm.n)) * cm.c;
}

double round_runtime(std::string_view algorithm, int tau,
                     const CostModel& cm) {
  require_round_inputs(tau, cm);
  if (algorithm == "dsgd" || algorithm == "olgt" || algorithm == "oled")
    throw std::invalid_argument(
        "round_runtime covers only the published algorithms: oldsgd, ldsgd, "
        "kgt, led, lugt, lsgd");
  return extended_round_runtime(algorithm, tau, cm);
}

double Timeline::makespan() const {
  double end = 0.0;
  for (const auto& agent : per_agent)
    for (const auto& iv : agent) end = std::max(end, iv.end);
  return end;
}

double Timeline::total_idle() const {
  if (per_agent.empty()) return 0.0;
  double idle = 0.0;
  for (const auto& iv : per_agent[0])
    if (iv.kind == Interval::Kind::idle) idle += iv.end - iv.start;
  return idle;
}

Timeline build_timeline(std::string_view algorithm, int tau,
                        const CostModel& cm, int rounds) {
  require_round_inputs(tau, cm);
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");

  // dsgd ignores tau: every iteration is a one-step round.
  const int steps = algorithm == "dsgd" ? 1 : tau;
  const double round_len = extended_round_runtime(algorithm, steps, cm);
  const double compute_len = static_cast<double>(steps);

  double transmit_len = cm.c;
  if (algorithm == "lsgd") transmit_len = lsgd_allreduce_cost(cm);
  if (algorithm == "lugt" || algorithm == "olgt") transmit_len = 2.0 * cm.c;
  const bool masked = overlapping(algorithm);

  std::vector<Interval> one_agent;
  double start = 0.0;
  for (int r = 0; r < rounds; ++r) {
    one_agent.push_back(
        {Interval::Kind::compute, start, start + compute_len});
    if (algorithm == "kgt") {
      // The model exchange is masked by the local computes; the tracking
      // exchange blocks afterwards.
      const double x_done = start + std::max(compute_len, cm.c);
      one_agent.push_back({Interval::Kind::transmit, start, start + cm.c});
      if (cm.c > compute_len)
        one_agent.push_back(
            {Interval::Kind::idle, start + compute_len, x_done});
      one_agent.push_back({Interval::Kind::transmit, x_done, x_done + cm.c});
      one_agent.push_back({Interval::Kind::idle, x_done, x_done + cm.c});
    } else if (masked) {
      // The transmit of the previous boundary's models runs alongside the
      // local computes; the round closes when both finish.
      one_agent.push_back(
          {Interval::Kind::transmit, start, start + transmit_len});
      if (transmit_len > compute_len)
        one_agent.push_back(
            {Interval::Kind::idle, start + compute_len, start + round_len});
    } else {
      one_agent.push_back({Interval::Kind::transmit, start + compute_len,
                           start + compute_len + transmit_len});
      one_agent.push_back({Interval::Kind::idle, start + compute_len,
                           start + compute_len + transmit_len});
    }
    start += round_len;
  }

  Timeline tl;
  tl.per_agent.assign(static_cast<std::size_t>(cm.n), one_agent);
  return tl;
}

double elapsed(std::string_view algorithm, int tau, const CostModel& cm,
               long long iterations) {
  require_round_inputs(tau, cm);
  if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (iterations == 0) return 0.0;
  if (algorithm == "dsgd")
    return static_cast<double>(iterations) * extended_round_runtime("dsgd", 1, cm);
  const double round_len = extended_round_runtime(algorithm, tau, cm);
  const long long full = iterations / tau;
  const long long rem = iterations % tau;
  return static_cast<double>(full) * round_len + static_cast<double>(rem);
}

std::string timeline_to_json(const Timeline& tl) {
  auto kind_name = [](Interval::Kind k) {
    switch (k) {
      case Interval::Kind::compute: return "compute";
      case Interval::Kind::transmit: return "transmit";
      case Interval::Kind::idle: return "idle";
    }
    return "unknown";
  };
  std::ostringstream out;
  out << "{\"agents\":[";
  for (std::size_t i = 0; i < tl.per_agent.size(); ++i) {
    if (i) out << ',';
    out << '[';
    for (std::size_t k = 0; k < tl.per_agent[i].size(); ++k) {
      const auto& iv = tl.per_agent[i][k];
      if (k) out << ',';
      out << "{\"kind\":\"" << kind_name(iv.kind) << "\",\"start\":" << iv.start
          << ",\"end\":" << iv.end << '}';
    }
    out << ']';
  }
  out << "]}";
  return out.str();
}

}  // namespace decsgd
