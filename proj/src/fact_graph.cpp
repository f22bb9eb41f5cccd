#include "legalqa/fact_graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>

#include "legalqa/error.hpp"
#include "legalqa/text.hpp"

namespace legalqa {

std::string_view to_string(NodeKind kind) { return kind == NodeKind::fact ? "fact" : "rule"; }

NodeKind node_kind_from_string(std::string_view name) {
  if (name == "fact") return NodeKind::fact;
  if (name == "rule") return NodeKind::rule;
  fail(ErrorCode::parse_error, "unknown node kind '" + std::string(name) + "'");
}

std::string_view to_string(IracSection section) {
  switch (section) {
    case IracSection::issue: return "issue";
    case IracSection::rule: return "rule";
    case IracSection::application: return "application";
    case IracSection::conclusion: return "conclusion";
  }
  return "unknown";
}

IracSection irac_section_from_string(std::string_view name) {
  for (auto s : {IracSection::issue, IracSection::rule, IracSection::application, IracSection::conclusion}) {
    if (to_string(s) == name) return s;
  }
  fail(ErrorCode::parse_error, "unknown IRAC section '" + std::string(name) + "'");
}

FactRuleNode FactRuleNode::make(std::string_view label, NodeKind kind, std::set<std::string> aliases) {
  FactRuleNode node;
  node.label = tidy_spacing(label);
  node.id = normalize_label(label);
  node.kind = kind;
  node.aliases = std::move(aliases);
  if (node.id.empty()) fail(ErrorCode::invalid_argument, "node label is empty");
  return node;
}

std::vector<std::string> CaseGraph::fact_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, node] : nodes) {
    if (node.kind == NodeKind::fact) out.push_back(id);
  }
  return out;
}

std::vector<std::string> CaseGraph::rule_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, node] : nodes) {
    if (node.kind == NodeKind::rule) out.push_back(id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// FactRuleGraph

void FactRuleGraph::add_node(const FactRuleNode& node, const std::set<std::string>& provenance) {
  auto it = nodes_.find(node.id);
  if (it == nodes_.end()) {
    nodes_.emplace(node.id, node);
    adjacency_[node.id];
  } else {
    FactRuleNode& existing = it->second;
    if (existing.kind != node.kind) {
      std::string theirs = provenance.empty() ? "<unknown>" : *provenance.begin();
      const auto& ours_set = provenance_[node.id];
      std::string ours = ours_set.empty() ? "<unknown>" : *ours_set.begin();
      fail(ErrorCode::merge_conflict, "node '" + node.id + "' is a " + std::string(to_string(existing.kind)) +
                                          " in case " + ours + " but a " + std::string(to_string(node.kind)) +
                                          " in case " + theirs);
    }
    existing.label = std::min(existing.label, node.label);
    existing.aliases.insert(node.aliases.begin(), node.aliases.end());
  }
  provenance_[node.id].insert(provenance.begin(), provenance.end());
}

void FactRuleGraph::add_edge(const std::string& fact, const std::string& rule) {
  const auto& a = node(fact);
  const auto& b = node(rule);
  if (a.kind != NodeKind::fact || b.kind != NodeKind::rule) {
    fail(ErrorCode::invalid_argument, "edge must link a fact to a rule: " + fact + " -- " + rule);
  }
  edges_.emplace(fact, rule);
  adjacency_[fact].insert(rule);
  adjacency_[rule].insert(fact);
}

const FactRuleNode& FactRuleGraph::node(const std::string& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) fail(ErrorCode::lookup_error, "unknown node '" + id + "'");
  return it->second;
}

const std::set<std::string>& FactRuleGraph::neighbors(const std::string& id) const {
  auto it = adjacency_.find(id);
  if (it == adjacency_.end()) fail(ErrorCode::lookup_error, "unknown node '" + id + "'");
  return it->second;
}

std::vector<std::string> FactRuleGraph::fact_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, node] : nodes_) {
    if (node.kind == NodeKind::fact) out.push_back(id);
  }
  return out;
}

FactRuleGraph merge(std::span<const CaseGraph> graphs) {
  FactRuleGraph merged;
  // Nodes first, in a canonical order, so that conflict reporting and the
  // chosen display label do not depend on input order.
  std::vector<const CaseGraph*> ordered;
  for (const auto& g : graphs) ordered.push_back(&g);
  std::sort(ordered.begin(), ordered.end(),
            [](const CaseGraph* a, const CaseGraph* b) { return a->case_id < b->case_id; });
  for (const CaseGraph* g : ordered) {
    for (const auto& [id, node] : g->nodes) merged.add_node(node, {g->case_id});
  }
  for (const CaseGraph* g : ordered) {
    for (const auto& [fact, rule] : g->edges) merged.add_edge(fact, rule);
  }
  return merged;
}

std::set<std::string> neighborhood_ids(const FactRuleGraph& graph, const std::set<std::string>& seeds,
                                       std::size_t hops) {
  std::set<std::string> seen;
  std::deque<std::pair<std::string, std::size_t>> frontier;
  for (const auto& s : seeds) {
    if (!graph.contains(s)) fail(ErrorCode::lookup_error, "unknown seed node '" + s + "'");
    if (seen.insert(s).second) frontier.emplace_back(s, 0);
  }
  while (!frontier.empty()) {
    auto [id, depth] = frontier.front();
    frontier.pop_front();
    if (depth == hops) continue;
    for (const auto& next : graph.neighbors(id)) {
      if (seen.insert(next).second) frontier.emplace_back(next, depth + 1);
    }
  }
  return seen;
}

FactRuleGraph neighborhood(const FactRuleGraph& graph, const std::set<std::string>& seeds, std::size_t hops) {
  auto ids = neighborhood_ids(graph, seeds, hops);
  FactRuleGraph sub;
  for (const auto& id : ids) sub.add_node(graph.node(id), graph.provenance().at(id));
  for (const auto& [fact, rule] : graph.edges()) {
    if (ids.count(fact) != 0 && ids.count(rule) != 0) sub.add_edge(fact, rule);
  }
  return sub;
}

// ---------------------------------------------------------------------------
// Matching

bool KnownNodeSet::contains(const std::string& id) const {
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

void KnownNodeSet::add(const std::string& id, double score) {
  if (contains(id)) return;
  ids.push_back(id);
  scores.push_back(score);
}

KnownNodeSet KnownNodeSet::from_ids(const std::vector<std::string>& ids) {
  KnownNodeSet out;
  for (const auto& id : ids) out.add(id, 1.0);
  return out;
}

double match_score(const FactRuleNode& node, const std::set<std::string>& question_tokens) {
  auto coverage = [&](std::string_view surface) {
    auto tokens = token_set(surface);
    if (tokens.empty()) return 0.0;
    std::size_t hit = 0;
    for (const auto& t : tokens) hit += question_tokens.count(t);
    return static_cast<double>(hit) / static_cast<double>(tokens.size());
  };
  double best = coverage(node.label);
  for (const auto& alias : node.aliases) best = std::max(best, coverage(alias));
  return best;
}

KnownNodeSet match_known_nodes(const FactRuleGraph& graph, std::string_view question, double threshold) {
  auto tokens = token_set(question);
  std::vector<std::pair<double, std::string>> hits;
  for (const auto& [id, node] : graph.nodes()) {
    double score = match_score(node, tokens);
    if (score > 0.0 && score >= threshold) hits.emplace_back(score, id);
  }
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  KnownNodeSet out;
  for (const auto& [score, id] : hits) out.add(id, score);
  return out;
}

// ---------------------------------------------------------------------------
// JSON

json to_json(const FactRuleNode& node) {
  return {{"id", node.id}, {"label", node.label}, {"kind", to_string(node.kind)}, {"aliases", node.aliases}};
}

namespace {

FactRuleNode node_from_json(const json& j) {
  FactRuleNode node;
  node.id = j.at("id").get<std::string>();
  node.label = j.at("label").get<std::string>();
  node.kind = node_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("aliases")) node.aliases = j.at("aliases").get<std::set<std::string>>();
  if (node.id != normalize_label(node.label)) {
    fail(ErrorCode::parse_error, "node id '" + node.id + "' is not the normalized label");
  }
  return node;
}

json edges_to_json(const std::set<Edge>& edges) {
  json out = json::array();
  for (const auto& [fact, rule] : edges) out.push_back({fact, rule});
  return out;
}

}  // namespace

json to_json(const CaseGraph& graph) {
  json nodes = json::array();
  for (const auto& [id, node] : graph.nodes) {
    json n = to_json(node);
    n["section"] = to_string(graph.sections.at(id));
    nodes.push_back(std::move(n));
  }
  return {{"case_id", graph.case_id}, {"nodes", nodes}, {"edges", edges_to_json(graph.edges)}};
}

json to_json(const FactRuleGraph& graph) {
  json nodes = json::array();
  for (const auto& [id, node] : graph.nodes()) {
    json n = to_json(node);
    n["provenance"] = graph.provenance().at(id);
    nodes.push_back(std::move(n));
  }
  return {{"nodes", nodes}, {"edges", edges_to_json(graph.edges())}};
}

CaseGraph case_graph_from_json(const json& j) {
  try {
    CaseGraph graph;
    graph.case_id = j.at("case_id").get<std::string>();
    for (const auto& n : j.at("nodes")) {
      auto node = node_from_json(n);
      graph.sections[node.id] = irac_section_from_string(n.at("section").get<std::string>());
      graph.nodes[node.id] = std::move(node);
    }
    for (const auto& e : j.at("edges")) graph.edges.emplace(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    return graph;
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("malformed case graph: ") + e.what());
  }
}

FactRuleGraph graph_from_json(const json& j) {
  try {
    FactRuleGraph graph;
    for (const auto& n : j.at("nodes")) {
      std::set<std::string> provenance;
      if (n.contains("provenance")) provenance = n.at("provenance").get<std::set<std::string>>();
      graph.add_node(node_from_json(n), provenance);
    }
    for (const auto& e : j.at("edges")) graph.add_edge(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    return graph;
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("malformed graph: ") + e.what());
  }
}

void save_graph(const FactRuleGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
  out << to_json(graph).dump(2) << '\n';
}

FactRuleGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open graph file " + path.string());
  try {
    return graph_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::parse_error, path.string() + ": " + e.what());
  }
}

}  // namespace legalqa
