#include "legalqa/environment.hpp"

#include "legalqa/error.hpp"

namespace legalqa {

std::vector<std::string> candidate_pool(const FactRuleGraph& graph, const std::set<std::string>& known,
                                        std::size_t hops) {
  std::vector<std::string> out;
  if (known.empty()) return graph.fact_ids();
  for (const auto& id : neighborhood_ids(graph, known, hops)) {
    if (graph.node(id).kind == NodeKind::fact && known.count(id) == 0) out.push_back(id);
  }
  return out;
}

Episode::Episode(const FactRuleGraph& graph, std::set<std::string> known, std::set<std::string> masked,
                 std::size_t max_steps, std::size_t hops)
    : graph_(&graph), known_(std::move(known)), masked_(std::move(masked)), hops_(hops) {
  if (masked_.empty()) fail(ErrorCode::invalid_argument, "an episode needs at least one masked node");
  for (const auto& id : masked_) {
    if (!graph.contains(id)) fail(ErrorCode::lookup_error, "masked node '" + id + "' is not in the graph");
    if (known_.count(id) != 0) fail(ErrorCode::invalid_argument, "node '" + id + "' is both known and masked");
  }
  for (const auto& id : known_) {
    if (!graph.contains(id)) fail(ErrorCode::lookup_error, "known node '" + id + "' is not in the graph");
  }
  max_steps_ = max_steps == 0 ? 2 * masked_.size() : max_steps;
}

std::vector<std::string> Episode::candidates() const { return candidate_pool(*graph_, known_, hops_); }

StepResult Episode::step(const std::string& action) {
  if (done_) fail(ErrorCode::state_error, "episode is already finished");
  if (!graph_->contains(action)) fail(ErrorCode::invalid_argument, "action '" + action + "' is not a graph node");
  if (known_.count(action) != 0) fail(ErrorCode::invalid_argument, "action '" + action + "' is already known");

  StepResult result;
  known_.insert(action);
  ++steps_;
  if (masked_.count(action) != 0) {
    found_.insert(action);
    result.reward = kHitReward;
  } else {
    result.reward = kMissReward;
  }
  done_ = found_.size() == masked_.size() || steps_ >= max_steps_ || candidates().empty();
  result.done = done_;
  rewards_.push_back(result.reward);
  return result;
}

}  // namespace legalqa
