#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace decsgd {

struct CostModel {
  double c = 1;  // transmission delay per consensus, in gradient-time units
  int n = 1;     // agent count (enters the lsgd allreduce term)
};

// Ring-allreduce transmission time: (2(n-1)/n) * c.
double lsgd_allreduce_cost(const CostModel& cm);

// Published per-round makespans: oldsgd max{tau,c}; ldsgd tau+c;
// kgt max{tau,c}+c; led tau+c; lugt tau+2c; lsgd tau+(2(n-1)/n)c.
// Exactly these six ids are accepted; anything else throws
// std::invalid_argument.
double round_runtime(std::string_view algorithm, int tau, const CostModel& cm);

struct Interval {
  enum class Kind { compute, transmit, idle };
  Kind kind;
  double start;
  double end;
};

struct Timeline {
  std::vector<std::vector<Interval>> per_agent;
  double makespan() const;
  double total_idle() const;  // summed over one agent (agents are homogeneous)
};

// Explicit per-agent schedule over the given number of communication rounds.
// Accepts the six published ids plus the simulator extensions "dsgd" (one
// exchange every iteration, round length 1+c), "olgt" (overlapping, two
// staged exchanges, max{tau,2c}) and "oled" (overlapping, one staged
// exchange, max{tau,c}).
Timeline build_timeline(std::string_view algorithm, int tau,
                        const CostModel& cm, int rounds);

// Simulated time after `iterations` fine-grained iterations: full rounds at
// the round makespan plus one gradient-time unit per within-round step.
// Accepts the same ids as build_timeline.
double elapsed(std::string_view algorithm, int tau, const CostModel& cm,
               long long iterations);

// JSON export: {"agents": [[{"kind","start","end"}, ...], ...]}.
std::string timeline_to_json(const Timeline& tl);

}  // namespace decsgd
