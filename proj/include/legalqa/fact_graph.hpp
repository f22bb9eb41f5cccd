#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace legalqa {

using json = nlohmann::json;

enum class NodeKind { fact, rule };
enum class IracSection { issue, rule, application, conclusion };

std::string_view to_string(NodeKind kind);
NodeKind node_kind_from_string(std::string_view name);
std::string_view to_string(IracSection section);
IracSection irac_section_from_string(std::string_view name);

/// A key fact or legal rule. The id is the normalized label.
struct FactRuleNode {
  std::string id;
  std::string label;
  NodeKind kind = NodeKind::fact;
  std::set<std::string> aliases;

  static FactRuleNode make(std::string_view label, NodeKind kind, std::set<std::string> aliases = {});
  bool operator==(const FactRuleNode&) const = default;
};

/// Undirected fact-rule link, stored as (fact id, rule id).
using Edge = std::pair<std::string, std::string>;

/// Graph extracted from a single case. Every node records the IRAC section
/// it was read from.
struct CaseGraph {
  std::string case_id;
  std::map<std::string, FactRuleNode> nodes;
  std::map<std::string, IracSection> sections;
  std::set<Edge> edges;

  std::vector<std::string> fact_ids() const;
  std::vector<std::string> rule_ids() const;
  bool operator==(const CaseGraph&) const = default;
};

/// The merged graph of all cases. Immutable once built; share it by const
/// reference or shared_ptr<const>.
class FactRuleGraph {
 public:
  FactRuleGraph() = default;

  /// Adds or unions a node. Throws merge_conflict if the id exists with the
  /// other kind.
  void add_node(const FactRuleNode& node, const std::set<std::string>& provenance = {});
  /// Both endpoints must exist; `fact` must be a fact and `rule` a rule.
  void add_edge(const std::string& fact, const std::string& rule);

  const std::map<std::string, FactRuleNode>& nodes() const { return nodes_; }
  const std::set<Edge>& edges() const { return edges_; }
  const std::map<std::string, std::set<std::string>>& provenance() const { return provenance_; }

  bool contains(const std::string& id) const { return nodes_.count(id) != 0; }
  const FactRuleNode& node(const std::string& id) const;
  const std::set<std::string>& neighbors(const std::string& id) const;
  std::vector<std::string> fact_ids() const;

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  bool operator==(const FactRuleGraph& other) const {
    return nodes_ == other.nodes_ && edges_ == other.edges_ && provenance_ == other.provenance_;
  }

 private:
  std::map<std::string, FactRuleNode> nodes_;
  std::set<Edge> edges_;
  std::map<std::string, std::set<std::string>> provenance_;
  std::map<std::string, std::set<std::string>> adjacency_;
};

/// Unites nodes by canonical id, unions provenance and edges. The result is
/// independent of input order. Conflicting kinds for one id throw
/// merge_conflict naming both cases.
FactRuleGraph merge(std::span<const CaseGraph> graphs);

/// Ids of all nodes within `hops` edges of any seed. Unknown seeds throw
/// lookup_error.
std::set<std::string> neighborhood_ids(const FactRuleGraph& graph, const std::set<std::string>& seeds,
                                       std::size_t hops);

/// Induced subgraph on neighborhood_ids.
FactRuleGraph neighborhood(const FactRuleGraph& graph, const std::set<std::string>& seeds, std::size_t hops);

/// X_known: matched node ids ordered by descending score, then id.
struct KnownNodeSet {
  std::vector<std::string> ids;
  std::vector<double> scores;

  bool contains(const std::string& id) const;
  void add(const std::string& id, double score = 1.0);
  std::set<std::string> id_set() const { return {ids.begin(), ids.end()}; }
  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  bool operator==(const KnownNodeSet&) const = default;

  static KnownNodeSet from_ids(const std::vector<std::string>& ids);
};

inline constexpr double kDefaultMatchThreshold = 0.8;

/// Share of a surface form's tokens present in the question, maximized over
/// the label and every alias. In [0, 1].
double match_score(const FactRuleNode& node, const std::set<std::string>& question_tokens);

/// Every node whose match_score reaches `threshold`.
KnownNodeSet match_known_nodes(const FactRuleGraph& graph, std::string_view question,
                               double threshold = kDefaultMatchThreshold);

json to_json(const FactRuleNode& node);
json to_json(const CaseGraph& graph);
json to_json(const FactRuleGraph& graph);
CaseGraph case_graph_from_json(const json& j);
FactRuleGraph graph_from_json(const json& j);

void save_graph(const FactRuleGraph& graph, const std::filesystem::path& path);
FactRuleGraph load_graph(const std::filesystem::path& path);

}  // namespace legalqa
