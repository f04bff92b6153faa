#include "proxydiff/ast.hpp"

#include <algorithm>
#include <array>
#include <charconv>

#include "proxydiff/error.hpp"
#include "proxydiff/keccak.hpp"

namespace proxydiff {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<std::string_view, NodeKind>, 15> kKnownKinds = {{
    {"ContractDefinition", NodeKind::ContractDefinition},
    {"FunctionDefinition", NodeKind::FunctionDefinition},
    {"ModifierDefinition", NodeKind::ModifierDefinition},
    {"VariableDeclaration", NodeKind::VariableDeclaration},
    {"FunctionCall", NodeKind::FunctionCall},
    {"MemberAccess", NodeKind::MemberAccess},
    {"Identifier", NodeKind::Identifier},
    {"Literal", NodeKind::Literal},
    {"Assignment", NodeKind::Assignment},
    {"IfStatement", NodeKind::IfStatement},
    {"ForStatement", NodeKind::ForStatement},
    {"Block", NodeKind::Block},
    {"ExpressionStatement", NodeKind::ExpressionStatement},
    {"InheritanceSpecifier", NodeKind::InheritanceSpecifier},
    {"PragmaDirective", NodeKind::PragmaDirective},
}};

}  // namespace

NodeKind classify_kind(std::string_view tag) {
  for (const auto& [name, kind] : kKnownKinds)
    if (name == tag) return kind;
  return NodeKind::Other;
}

std::string_view to_string(NodeKind kind) {
  for (const auto& [name, k] : kKnownKinds)
    if (k == kind) return name;
  return "Other";
}

bool is_usable(const QualityMetrics& q) {
  return q.node_completeness >= kQualityThreshold &&
         q.structural_integrity >= kQualityThreshold &&
         q.semantic_completeness >= kQualityThreshold;
}

// --- Ast -------------------------------------------------------------------

Ast::Ast(std::vector<AstNode> nodes) : nodes_(std::move(nodes)) {
  const auto n = static_cast<NodeId>(nodes_.size());
  if (n == 0) throw Error(ErrorCode::MalformedDocument, "tree has no nodes");
  sizes_.assign(nodes_.size(), 1);
  for (NodeId i = n - 1; i >= 0; --i) {
    const AstNode& node = nodes_[static_cast<std::size_t>(i)];
    if (node.id != i)
      throw Error(ErrorCode::MalformedDocument, "node ids are not preorder indices");
    if (i == 0 ? node.parent != kNoNode : (node.parent < 0 || node.parent >= i))
      throw Error(ErrorCode::MalformedDocument, "invalid parent link");
    NodeId expected = i + 1;
    for (NodeId c : node.children) {
      if (c != expected || c >= n || nodes_[static_cast<std::size_t>(c)].parent != i)
        throw Error(ErrorCode::MalformedDocument, "children are not in preorder");
      sizes_[static_cast<std::size_t>(i)] += sizes_[static_cast<std::size_t>(c)];
      expected = c + sizes_[static_cast<std::size_t>(c)];
    }
  }
  if (sizes_.front() != n)
    throw Error(ErrorCode::MalformedDocument, "nodes unreachable from the root");
}

std::vector<NodeId> Ast::subtree(NodeId id) const {
  std::vector<NodeId> ids(static_cast<std::size_t>(subtree_size(id)));
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = id + static_cast<NodeId>(i);
  return ids;
}

std::vector<NodeId> Ast::postorder() const {
  std::vector<NodeId> order;
  order.reserve(nodes_.size());
  // (node, next child index)
  std::vector<std::pair<NodeId, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto& [id, next] = stack.back();
    const AstNode& n = node(id);
    if (next < n.children.size()) {
      NodeId child = n.children[next++];
      stack.emplace_back(child, 0);
    } else {
      order.push_back(id);
      stack.pop_back();
    }
  }
  return order;
}

namespace {

void flatten(const DraftNode& draft, NodeId parent, std::vector<AstNode>& out) {
  const auto id = static_cast<NodeId>(out.size());
  AstNode& node = out.emplace_back();
  node.id = id;
  node.kind = classify_kind(draft.tag);
  node.tag = draft.tag;
  node.label = draft.label;
  node.span = draft.span;
  node.parent = parent;
  node.attrs = draft.attrs;
  if (parent != kNoNode) out[static_cast<std::size_t>(parent)].children.push_back(id);
  for (const DraftNode& child : draft.children) flatten(child, id, out);
}

}  // namespace

Ast build_ast(const DraftNode& root) {
  std::vector<AstNode> nodes;
  flatten(root, kNoNode, nodes);
  return Ast(std::move(nodes));
}

// --- LineIndex ---------------------------------------------------------------

LineIndex::LineIndex(std::string_view source) : size_(source.size()) {
  starts_.push_back(0);
  for (std::size_t i = 0; i < source.size(); ++i)
    if (source[i] == '\n') starts_.push_back(i + 1);
  line_count_ = source.empty() ? 0 : starts_.size();
  if (!source.empty() && starts_.back() == source.size()) --line_count_;
}

int LineIndex::line_of(std::size_t offset) const {
  auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
  return static_cast<int>(it - starts_.begin());
}

int LineIndex::column_of(std::size_t offset) const {
  return static_cast<int>(offset - starts_[static_cast<std::size_t>(line_of(offset) - 1)]);
}

SourceSpan LineIndex::span_of(std::size_t offset, std::size_t length) const {
  const std::size_t last = length > 0 ? offset + length - 1 : offset;
  return SourceSpan{line_of(offset), line_of(last), column_of(offset), column_of(last)};
}

std::size_t LineIndex::line_start(int line) const {
  if (line < 1) return 0;
  const auto idx = static_cast<std::size_t>(line - 1);
  return idx < starts_.size() ? starts_[idx] : size_;
}

std::string source_hash(std::string_view source) { return keccak256_hex(source); }

std::string span_text(std::string_view source, const SourceSpan& span) {
  LineIndex index(source);
  const std::size_t begin = index.line_start(span.start_line) + static_cast<std::size_t>(span.start_col);
  const std::size_t last = index.line_start(span.end_line) + static_cast<std::size_t>(span.end_col);
  if (begin >= source.size() || last < begin) return {};
  return std::string(source.substr(begin, std::min(last, source.size() - 1) - begin + 1));
}

// --- Ingestion -----------------------------------------------------------------

namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedDocument, "malformed AST document: " + what);
}

struct SrcRange {
  long long start = -1;
  long long length = -1;
};

SrcRange parse_src(const json& node) {
  auto it = node.find("src");
  if (it == node.end()) return {};
  if (!it->is_string()) malformed("src attribute is not a string");
  const std::string& s = it->get_ref<const std::string&>();
  SrcRange r;
  const char* p = s.data();
  const char* end = s.data() + s.size();
  auto read = [&](long long& out) {
    auto [next, ec] = std::from_chars(p, end, out);
    if (ec != std::errc{}) malformed("unparseable src '" + s + "'");
    p = next;
  };
  read(r.start);
  if (p == end || *p != ':') malformed("unparseable src '" + s + "'");
  ++p;
  read(r.length);
  return r;
}

std::string string_field(const json& node, const char* key) {
  auto it = node.find(key);
  if (it != node.end() && it->is_string()) return it->get<std::string>();
  return {};
}

std::string label_for(const json& node, const std::string& tag) {
  if (tag == "MemberAccess") return string_field(node, "memberName");
  if (tag == "Literal" || tag == "YulLiteral") {
    std::string v = string_field(node, "value");
    return v.empty() ? string_field(node, "hexValue") : v;
  }
  if (tag == "BinaryOperation" || tag == "UnaryOperation" || tag == "Assignment")
    return string_field(node, "operator");
  if (tag == "FunctionDefinition") {
    std::string name = string_field(node, "name");
    return name.empty() ? string_field(node, "kind") : name;
  }
  if (tag == "PragmaDirective") {
    auto it = node.find("literals");
    if (it == node.end() || !it->is_array() || it->empty()) return {};
    std::string text = (*it)[0].is_string() ? (*it)[0].get<std::string>() : "";
    if (it->size() > 1) text += ' ';
    for (std::size_t i = 1; i < it->size(); ++i)
      if ((*it)[i].is_string()) text += (*it)[i].get<std::string>();
    return text;
  }
  if (tag == "ImportDirective") return string_field(node, "file");
  return string_field(node, "name");
}

const std::array<const char*, 7> kStringAttrs = {
    "visibility", "stateMutability", "mutability", "kind", "contractKind", "operator", "storageLocation",
};
const std::array<const char*, 4> kBoolAttrs = {"constant", "stateVariable", "abstract", "prefix"};

std::map<std::string, std::string> attrs_for(const json& node) {
  std::map<std::string, std::string> attrs;
  for (const char* key : kStringAttrs) {
    auto it = node.find(key);
    if (it != node.end() && it->is_string()) attrs[key] = it->get<std::string>();
  }
  for (const char* key : kBoolAttrs) {
    auto it = node.find(key);
    if (it != node.end() && it->is_boolean()) attrs[key] = it->get<bool>() ? "true" : "false";
  }
  auto td = node.find("typeDescriptions");
  if (td != node.end() && td->is_object()) {
    std::string ts = string_field(*td, "typeString");
    if (!ts.empty()) attrs["typeString"] = ts;
  }
  return attrs;
}

bool is_node(const json& v) {
  if (!v.is_object()) return false;
  auto it = v.find("nodeType");
  return it != v.end() && it->is_string();
}

class Ingestor {
 public:
  Ingestor(std::string_view source) : source_(source), index_(source) {}

  DraftNode build(const json& node, const SourceSpan& parent_span) {
    if (!is_node(node)) malformed("expected an object with a string nodeType");
    DraftNode draft;
    draft.tag = node["nodeType"].get<std::string>();
    draft.label = label_for(node, draft.tag);
    draft.attrs = attrs_for(node);
    draft.span = span_for(node, parent_span);

    struct Pending {
      SrcRange range;
      const json* node;
    };
    std::vector<Pending> pending;
    for (const auto& [key, value] : node.items()) {
      if (key == "typeDescriptions" || key == "documentation") continue;
      if (is_node(value)) {
        pending.push_back({parse_src(value), &value});
      } else if (value.is_array()) {
        for (const auto& element : value) {
          if (element.is_null()) continue;
          if (element.is_object() && element.contains("nodeType")) {
            pending.push_back({parse_src(element), &element});
          }
        }
      }
    }
    // Source order; wider range first on ties. Stable for unpositioned nodes.
    std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
      if (a.range.start != b.range.start) return a.range.start < b.range.start;
      return a.range.length > b.range.length;
    });
    for (const Pending& p : pending) {
      if (p.node->value("nodeType", "") == "StructuredDocumentation") continue;
      draft.children.push_back(build(*p.node, draft.span));
    }
    return draft;
  }

 private:
  SourceSpan span_for(const json& node, const SourceSpan& parent_span) {
    SrcRange r = parse_src(node);
    if (r.start < 0 || r.length < 0) return parent_span;
    const auto start = static_cast<std::size_t>(r.start);
    const auto length = static_cast<std::size_t>(r.length);
    if (start + length > source_.size())
      throw Error(ErrorCode::SpanOutOfRange,
                  "source range " + std::to_string(r.start) + ":" + std::to_string(r.length) +
                      " exceeds source length " + std::to_string(source_.size()));
    return index_.span_of(start, length);
  }

  std::string_view source_;
  LineIndex index_;
};

}  // namespace

Ast ingest_ast(const json& document, std::string_view source, std::string version_tag) {
  if (!is_node(document)) malformed("root is not an AST node");
  LineIndex index(source);
  SourceSpan whole{1, std::max<int>(1, static_cast<int>(index.line_count())), 0, 0};
  Ingestor ingestor(source);
  Ast ast = build_ast(ingestor.build(document, whole));
  ast.version_tag = std::move(version_tag);
  ast.source_hash = source_hash(source);
  ast.quality = assess_quality(ast, source);
  return ast;
}

// --- Quality -------------------------------------------------------------------

namespace {

bool is_return_parameter(const Ast& ast, const AstNode& decl) {
  if (decl.parent == kNoNode) return false;
  const AstNode& list = ast.node(decl.parent);
  if (!list.is_tag("ParameterList") || list.parent == kNoNode) return false;
  const AstNode& fn = ast.node(list.parent);
  if (!fn.is(NodeKind::FunctionDefinition)) return false;
  int seen = 0;
  for (NodeId c : fn.children) {
    if (!ast.node(c).is_tag("ParameterList")) continue;
    if (c == list.id) return seen == 1;
    ++seen;
  }
  return false;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

QualityMetrics assess_quality(const Ast& ast, std::string_view source) {
  QualityMetrics q;
  LineIndex index(source);
  const std::size_t lines = index.line_count();

  std::vector<int> delta(lines + 2, 0);
  std::size_t nested = 0;
  std::size_t defs = 0;
  std::size_t labeled = 0;
  for (const AstNode& node : ast.nodes()) {
    const int lo = std::max(1, node.span.start_line);
    const int hi = std::min(static_cast<int>(lines), node.span.end_line);
    if (lo <= hi) {
      delta[static_cast<std::size_t>(lo)] += 1;
      delta[static_cast<std::size_t>(hi) + 1] -= 1;
    }
    bool ok = std::all_of(node.children.begin(), node.children.end(), [&](NodeId c) {
      return node.span.contains_lines_of(ast.node(c).span);
    });
    nested += ok ? 1 : 0;
    const bool is_def = node.is(NodeKind::FunctionDefinition) ||
                        (node.is(NodeKind::VariableDeclaration) && !is_return_parameter(ast, node));
    if (is_def) {
      ++defs;
      labeled += node.label.empty() ? 0 : 1;
    }
  }
  std::size_t covered = 0;
  int running = 0;
  for (std::size_t line = 1; line <= lines; ++line) {
    running += delta[line];
    covered += running > 0 ? 1 : 0;
  }
  q.node_completeness = ratio(covered, lines);
  q.structural_integrity = ratio(nested, ast.node_count());
  q.semantic_completeness = ratio(labeled, defs);
  return q;
}

namespace {

std::optional<std::string> innermost(const Ast& ast, int line, NodeKind kind) {
  std::optional<std::string> found;
  for (const AstNode& node : ast.nodes())
    if (node.is(kind) && node.span.contains_line(line)) found = node.label;
  return found;
}

}  // namespace

std::optional<std::string> enclosing_function(const Ast& ast, int line) {
  return innermost(ast, line, NodeKind::FunctionDefinition);
}

std::optional<std::string> enclosing_contract(const Ast& ast, int line) {
  return innermost(ast, line, NodeKind::ContractDefinition);
}

// --- Serialization -------------------------------------------------------------

json to_json(const Ast& ast) {
  json nodes = json::array();
  for (const AstNode& n : ast.nodes()) {
    json j = {
        {"tag", n.tag},
        {"label", n.label},
        {"span", {n.span.start_line, n.span.start_col, n.span.end_line, n.span.end_col}},
        {"parent", n.parent},
    };
    if (!n.attrs.empty()) j["attrs"] = n.attrs;
    nodes.push_back(std::move(j));
  }
  return {
      {"version_tag", ast.version_tag},
      {"source_hash", ast.source_hash},
      {"quality",
       {{"node_completeness", ast.quality.node_completeness},
        {"structural_integrity", ast.quality.structural_integrity},
        {"semantic_completeness", ast.quality.semantic_completeness}}},
      {"nodes", std::move(nodes)},
  };
}

Ast ast_from_json(const json& j) {
  try {
    const json& arr = j.at("nodes");
    std::vector<AstNode> nodes(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const json& n = arr[i];
      AstNode& node = nodes[i];
      node.id = static_cast<NodeId>(i);
      node.tag = n.at("tag").get<std::string>();
      node.kind = classify_kind(node.tag);
      node.label = n.at("label").get<std::string>();
      const json& s = n.at("span");
      node.span = SourceSpan{s.at(0).get<int>(), s.at(2).get<int>(), s.at(1).get<int>(), s.at(3).get<int>()};
      node.parent = n.at("parent").get<NodeId>();
      if (auto a = n.find("attrs"); a != n.end())
        node.attrs = a->get<std::map<std::string, std::string>>();
      if (node.parent != kNoNode) {
        if (node.parent < 0 || static_cast<std::size_t>(node.parent) >= i)
          throw Error(ErrorCode::MalformedDocument, "serialized tree has a forward parent link");
        nodes[static_cast<std::size_t>(node.parent)].children.push_back(node.id);
      }
    }
    Ast ast(std::move(nodes));
    ast.version_tag = j.at("version_tag").get<std::string>();
    ast.source_hash = j.at("source_hash").get<std::string>();
    const json& q = j.at("quality");
    ast.quality = QualityMetrics{q.at("node_completeness").get<double>(),
                                 q.at("structural_integrity").get<double>(),
                                 q.at("semantic_completeness").get<double>()};
    return ast;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, std::string("serialized tree: ") + e.what());
  }
}

}  // namespace proxydiff
