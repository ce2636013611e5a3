#include "phenopat/graph.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "phenopat/error.hpp"
#include "phenopat/io.hpp"

namespace phenopat {

namespace {

std::vector<std::string> entities(const Fragment& f, EntityKind kind) {
  switch (kind) {
    case EntityKind::Site: return {f.site};
    case EntityKind::Phenotype: return {f.phenotype};
    case EntityKind::Pattern: break;
  }
  std::vector<std::string> names;
  for (auto id : f.labels.members()) names.emplace_back(pattern_name(id));
  return names;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string node_id(EntityKind kind, std::string_view name) {
  return std::string(entity_kind_name(kind)) + ":" + std::string(name);
}

std::string to_graphml(const CooccurrenceGraph& g) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
      << "  <key id=\"kind\" for=\"node\" attr.name=\"kind\" attr.type=\"string\"/>\n"
      << "  <key id=\"name\" for=\"node\" attr.name=\"name\" attr.type=\"string\"/>\n"
      << "  <key id=\"size\" for=\"node\" attr.name=\"size\" attr.type=\"int\"/>\n"
      << "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"int\"/>\n"
      << "  <graph id=\"" << entity_kind_name(g.axis_a) << "-" << entity_kind_name(g.axis_b)
      << "\" edgedefault=\"undirected\">\n";
  for (const auto& n : g.nodes) {
    out << "    <node id=\"" << xml_escape(node_id(n.kind, n.name)) << "\">\n"
        << "      <data key=\"kind\">" << entity_kind_name(n.kind) << "</data>\n"
        << "      <data key=\"name\">" << xml_escape(n.name) << "</data>\n"
        << "      <data key=\"size\">" << n.size << "</data>\n"
        << "    </node>\n";
  }
  for (const auto& e : g.edges) {
    out << "    <edge source=\"" << xml_escape(node_id(g.axis_a, e.a)) << "\" target=\""
        << xml_escape(node_id(g.axis_b, e.b)) << "\">\n"
        << "      <data key=\"weight\">" << e.weight << "</data>\n"
        << "    </edge>\n";
  }
  out << "  </graph>\n</graphml>\n";
  return out.str();
}

// Node width and edge penwidth grow linearly with size and weight.
std::string to_dot(const CooccurrenceGraph& g) {
  std::size_t max_size = 1, max_weight = 1;
  for (const auto& n : g.nodes) max_size = std::max(max_size, n.size);
  for (const auto& e : g.edges) max_weight = std::max(max_weight, e.weight);
  std::ostringstream out;
  out << "graph " << dot_quote(std::string(entity_kind_name(g.axis_a)) + "-" +
                               std::string(entity_kind_name(g.axis_b)))
      << " {\n";
  for (const auto& n : g.nodes) {
    const double width = 0.5 + 1.5 * static_cast<double>(n.size) / static_cast<double>(max_size);
    out << "  " << dot_quote(node_id(n.kind, n.name)) << " [label=" << dot_quote(n.name)
        << ", kind=" << dot_quote(entity_kind_name(n.kind)) << ", size=" << n.size
        << ", width=" << format_fixed(width, 3) << "];\n";
  }
  for (const auto& e : g.edges) {
    const double pen = 1.0 + 4.0 * static_cast<double>(e.weight) / static_cast<double>(max_weight);
    out << "  " << dot_quote(node_id(g.axis_a, e.a)) << " -- " << dot_quote(node_id(g.axis_b, e.b))
        << " [weight=" << e.weight << ", penwidth=" << format_fixed(pen, 3) << "];\n";
  }
  out << "}\n";
  return out.str();
}

std::string to_json(const CooccurrenceGraph& g) {
  using nlohmann::json;
  json nodes = json::array();
  for (const auto& n : g.nodes) {
    nodes.push_back({{"kind", entity_kind_name(n.kind)}, {"name", n.name}, {"size", n.size}});
  }
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back({{"a", e.a}, {"b", e.b}, {"weight", e.weight}});
  json j = {{"axis_a", entity_kind_name(g.axis_a)},
            {"axis_b", entity_kind_name(g.axis_b)},
            {"nodes", std::move(nodes)},
            {"edges", std::move(edges)}};
  return j.dump(1) + "\n";
}

EntityKind kind_or_throw(const std::string& name) {
  auto k = parse_entity_kind(name);
  if (!k) throw ValidationError("unknown entity kind \"" + name + "\"");
  return *k;
}

std::vector<NodeStats> top_k(std::vector<NodeStats> nodes, std::size_t k) {
  std::stable_sort(nodes.begin(), nodes.end(), [](const NodeStats& x, const NodeStats& y) {
    if (x.size != y.size) return x.size > y.size;
    return x.name < y.name;
  });
  if (nodes.size() > k) nodes.resize(k);
  return nodes;
}

AxisStats axis_stats(EntityKind kind, const std::vector<NodeStats>& all, std::size_t k) {
  AxisStats s;
  s.kind = kind;
  std::vector<NodeStats> mine;
  for (const auto& n : all) {
    if (n.kind != kind) continue;
    mine.push_back(n);
    ++s.nodes;
    if (n.degree == 1) ++s.single_partner;
    s.max_degree = std::max(s.max_degree, n.degree);
  }
  for (const auto& n : mine) {
    if (n.degree == s.max_degree && s.max_degree > 0) s.max_diversity.push_back(n.name);
  }
  std::sort(s.max_diversity.begin(), s.max_diversity.end());
  s.top_by_size = top_k(std::move(mine), k);
  return s;
}

nlohmann::json node_stats_json(const NodeStats& n) {
  return {{"kind", entity_kind_name(n.kind)}, {"name", n.name}, {"size", n.size}, {"degree", n.degree}};
}

nlohmann::json axis_json(const AxisStats& s) {
  nlohmann::json top = nlohmann::json::array();
  for (const auto& n : s.top_by_size) top.push_back(node_stats_json(n));
  return {{"kind", entity_kind_name(s.kind)},
          {"nodes", s.nodes},
          {"single_partner", s.single_partner},
          {"max_degree", s.max_degree},
          {"max_diversity", s.max_diversity},
          {"top_by_size", std::move(top)}};
}

}  // namespace

std::string_view entity_kind_name(EntityKind kind) {
  switch (kind) {
    case EntityKind::Pattern: return "pattern";
    case EntityKind::Phenotype: return "phenotype";
    case EntityKind::Site: return "site";
  }
  return "?";
}

std::optional<EntityKind> parse_entity_kind(std::string_view name) {
  if (name == "pattern") return EntityKind::Pattern;
  if (name == "phenotype") return EntityKind::Phenotype;
  if (name == "site") return EntityKind::Site;
  return std::nullopt;
}

const GraphNode* CooccurrenceGraph::find(EntityKind kind, std::string_view name) const {
  for (const auto& n : nodes) {
    if (n.kind == kind && n.name == name) return &n;
  }
  return nullptr;
}

CooccurrenceGraph build_cooccurrence(const Corpus& corpus, EntityKind axis_a, EntityKind axis_b) {
  if (axis_a == axis_b) throw std::invalid_argument("build_cooccurrence: axes must differ");
  std::map<std::pair<EntityKind, std::string>, std::size_t> sizes;
  std::map<std::pair<std::string, std::string>, std::size_t> weights;
  for (const auto& f : corpus.fragments()) {
    const auto as = entities(f, axis_a);
    const auto bs = entities(f, axis_b);
    for (const auto& a : as) ++sizes[{axis_a, a}];
    for (const auto& b : bs) ++sizes[{axis_b, b}];
    for (const auto& a : as) {
      for (const auto& b : bs) ++weights[{a, b}];
    }
  }
  CooccurrenceGraph g;
  g.axis_a = axis_a;
  g.axis_b = axis_b;
  for (const auto& [key, size] : sizes) g.nodes.push_back({key.first, key.second, size});
  for (const auto& [key, weight] : weights) g.edges.push_back({key.first, key.second, weight});
  return g;
}

GraphFormat parse_graph_format(std::string_view name) {
  if (name == "graphml") return GraphFormat::GraphML;
  if (name == "dot") return GraphFormat::Dot;
  if (name == "json") return GraphFormat::Json;
  throw ValidationError("unknown graph format \"" + std::string(name) + "\"");
}

std::string_view graph_format_extension(GraphFormat format) {
  switch (format) {
    case GraphFormat::GraphML: return "graphml";
    case GraphFormat::Dot: return "dot";
    case GraphFormat::Json: return "json";
  }
  return "";
}

std::string export_graph(const CooccurrenceGraph& graph, GraphFormat format) {
  switch (format) {
    case GraphFormat::GraphML: return to_graphml(graph);
    case GraphFormat::Dot: return to_dot(graph);
    case GraphFormat::Json: return to_json(graph);
  }
  throw ValidationError("unknown graph format");
}

CooccurrenceGraph graph_from_json(std::string_view text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("graph", 0, e.what());
  }
  CooccurrenceGraph g;
  try {
    g.axis_a = kind_or_throw(j.at("axis_a").get<std::string>());
    g.axis_b = kind_or_throw(j.at("axis_b").get<std::string>());
    for (const auto& n : j.at("nodes")) {
      g.nodes.push_back({kind_or_throw(n.at("kind").get<std::string>()),
                         n.at("name").get<std::string>(), n.at("size").get<std::size_t>()});
    }
    for (const auto& e : j.at("edges")) {
      g.edges.push_back({e.at("a").get<std::string>(), e.at("b").get<std::string>(),
                         e.at("weight").get<std::size_t>()});
    }
  } catch (const json::exception& e) {
    throw ParseError("graph", 0, e.what());
  }
  if (g.axis_a == g.axis_b) throw ValidationError("graph axes must differ");
  for (const auto& e : g.edges) {
    if (e.weight == 0) throw ValidationError("graph edge with zero weight");
    if (!g.find(g.axis_a, e.a) || !g.find(g.axis_b, e.b)) {
      throw ValidationError("graph edge " + e.a + " -- " + e.b + " references a missing node");
    }
  }
  return g;
}

GraphStats graph_stats(const CooccurrenceGraph& graph, std::size_t top_k_count) {
  std::map<std::pair<EntityKind, std::string>, std::size_t> degree;
  for (const auto& e : graph.edges) {
    ++degree[{graph.axis_a, e.a}];
    ++degree[{graph.axis_b, e.b}];
  }
  GraphStats s;
  for (const auto& n : graph.nodes) {
    auto it = degree.find({n.kind, n.name});
    s.nodes.push_back({n.kind, n.name, n.size, it == degree.end() ? 0 : it->second});
  }
  s.a = axis_stats(graph.axis_a, s.nodes, top_k_count);
  s.b = axis_stats(graph.axis_b, s.nodes, top_k_count);
  return s;
}

std::string graph_stats_json(const GraphStats& stats) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : stats.nodes) nodes.push_back(node_stats_json(n));
  nlohmann::json j = {{"nodes", std::move(nodes)}, {"axis_a", axis_json(stats.a)},
                      {"axis_b", axis_json(stats.b)}};
  return j.dump(1) + "\n";
}

}  // namespace phenopat
