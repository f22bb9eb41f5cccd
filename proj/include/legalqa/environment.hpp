#pragma once

#include <set>
#include <string>
#include <vector>

#include "legalqa/fact_graph.hpp"
#include "legalqa/networks.hpp"

namespace legalqa {

inline constexpr double kHitReward = 1.0;
inline constexpr double kMissReward = -0.1;

/// Fact nodes of neighborhood(graph, known, hops) minus known; every fact
/// node when known is empty. Sorted.
std::vector<std::string> candidate_pool(const FactRuleGraph& graph, const std::set<std::string>& known,
                                        std::size_t hops);

struct Transition {
  State s;
  std::string action;
  double reward = 0.0;
  State next;
  bool done = false;
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
};

/// One masked-node recovery episode: the agent starts from the retained
/// nodes and is rewarded for naming masked ones.
class Episode {
 public:
  /// max_steps == 0 means 2 * |masked|.
  Episode(const FactRuleGraph& graph, std::set<std::string> known, std::set<std::string> masked,
          std::size_t max_steps = 0, std::size_t hops = 2);

  const std::set<std::string>& known() const { return known_; }
  const std::set<std::string>& masked() const { return masked_; }
  const std::set<std::string>& found() const { return found_; }
  std::size_t steps() const { return steps_; }
  std::size_t max_steps() const { return max_steps_; }
  bool done() const { return done_; }
  const std::vector<double>& rewards() const { return rewards_; }

  std::vector<std::string> candidates() const;

  /// +1 for a masked node, -0.1 otherwise; ends on full recovery, at
  /// max_steps, or when no candidates remain. Acting on a finished episode is
  /// state_error; a known or unknown node is invalid_argument.
  StepResult step(const std::string& action);

 private:
  const FactRuleGraph* graph_;
  std::set<std::string> known_;
  std::set<std::string> masked_;
  std::set<std::string> found_;
  std::size_t max_steps_;
  std::size_t hops_;
  std::size_t steps_ = 0;
  bool done_ = false;
  std::vector<double> rewards_;
};

}  // namespace legalqa
