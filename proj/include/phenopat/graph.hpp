#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phenopat/corpus.hpp"

namespace phenopat {

enum class EntityKind { Pattern, Phenotype, Site };

std::string_view entity_kind_name(EntityKind kind);  // "pattern", "phenotype", "site"
std::optional<EntityKind> parse_entity_kind(std::string_view name);

struct GraphNode {
  EntityKind kind;
  std::string name;   // pattern enumeration name, phenotype or site
  std::size_t size = 0;  // occurrences across fragments

  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

// `a` names a node on axis_a, `b` a node on axis_b.
struct GraphEdge {
  std::string a;
  std::string b;
  std::size_t weight = 0;  // fragments exhibiting both endpoints

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

// Bipartite co-occurrence network. Nodes are sorted by (kind, name), edges by (a, b).
struct CooccurrenceGraph {
  EntityKind axis_a = EntityKind::Pattern;
  EntityKind axis_b = EntityKind::Site;
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  const GraphNode* find(EntityKind kind, std::string_view name) const;
  friend bool operator==(const CooccurrenceGraph&, const CooccurrenceGraph&) = default;
};

// Throws std::invalid_argument when axis_a == axis_b.
CooccurrenceGraph build_cooccurrence(const Corpus& corpus, EntityKind axis_a, EntityKind axis_b);

enum class GraphFormat { GraphML, Dot, Json };

// "graphml", "dot", "json". Throws ValidationError otherwise.
GraphFormat parse_graph_format(std::string_view name);
std::string_view graph_format_extension(GraphFormat format);

std::string export_graph(const CooccurrenceGraph& graph, GraphFormat format);
// Inverse of the json export. Throws ParseError / ValidationError.
CooccurrenceGraph graph_from_json(std::string_view text);

struct NodeStats {
  EntityKind kind;
  std::string name;
  std::size_t size = 0;
  std::size_t degree = 0;
};

struct AxisStats {
  EntityKind kind;
  std::size_t nodes = 0;
  std::size_t single_partner = 0;  // nodes linked to exactly one node of the other axis
  std::size_t max_degree = 0;
  std::vector<std::string> max_diversity;  // nodes attaining max_degree, sorted
  std::vector<NodeStats> top_by_size;      // descending size, ties by name
};

struct GraphStats {
  std::vector<NodeStats> nodes;  // graph node order
  AxisStats a;
  AxisStats b;
};

GraphStats graph_stats(const CooccurrenceGraph& graph, std::size_t top_k = 5);
std::string graph_stats_json(const GraphStats& stats);

}  // namespace phenopat
