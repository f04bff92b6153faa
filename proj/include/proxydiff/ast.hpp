#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace proxydiff {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

/// 1-based lines, 0-based columns. end_col is the column of the last
/// character covered by the span (inclusive).
struct SourceSpan {
  int start_line = 1;
  int end_line = 1;
  int start_col = 0;
  int end_col = 0;

  bool valid() const {
    return start_line >= 1 && end_line >= start_line &&
           (start_line != end_line || end_col >= start_col);
  }
  bool contains_line(int line) const { return line >= start_line && line <= end_line; }
  /// Line-wise containment, the nesting notion used by quality scoring.
  bool contains_lines_of(const SourceSpan& other) const {
    return other.start_line >= start_line && other.end_line <= end_line;
  }

  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

/// The node kinds analyses dispatch on. Anything else the compiler emits is
/// kept as Other with its original tag, so ingestion never fails on an
/// unfamiliar nodeType.
enum class NodeKind : std::uint8_t {
  ContractDefinition,
  FunctionDefinition,
  ModifierDefinition,
  VariableDeclaration,
  FunctionCall,
  MemberAccess,
  Identifier,
  Literal,
  Assignment,
  IfStatement,
  ForStatement,
  Block,
  ExpressionStatement,
  InheritanceSpecifier,
  PragmaDirective,
  Other,
};

NodeKind classify_kind(std::string_view tag);
std::string_view to_string(NodeKind kind);

struct AstNode {
  NodeId id = kNoNode;
  NodeKind kind = NodeKind::Other;
  std::string tag;    // full node type name, e.g. "FunctionDefinition" or "BinaryOperation"
  std::string label;  // identifier, literal, operator text; empty otherwise
  SourceSpan span;
  NodeId parent = kNoNode;
  std::vector<NodeId> children;
  // Selected compiler attributes (visibility, stateMutability, mutability,
  // constant, stateVariable, kind, contractKind, typeString). Not part of
  // structural identity.
  std::map<std::string, std::string> attrs;

  bool is(NodeKind k) const { return kind == k; }
  bool is_tag(std::string_view t) const { return tag == t; }
  const std::string* attr(const std::string& key) const {
    auto it = attrs.find(key);
    return it == attrs.end() ? nullptr : &it->second;
  }
  bool attr_is(const std::string& key, std::string_view value) const {
    const std::string* v = attr(key);
    return v != nullptr && *v == value;
  }
};

struct QualityMetrics {
  double node_completeness = 1.0;
  double structural_integrity = 1.0;
  double semantic_completeness = 1.0;

  friend bool operator==(const QualityMetrics&, const QualityMetrics&) = default;
};

inline constexpr double kQualityThreshold = 0.8;

bool is_usable(const QualityMetrics& q);

/// Immutable preorder-indexed tree: node i has id i, the root is node 0 and
/// every subtree occupies the contiguous id range [id, id + subtree_size).
class Ast {
 public:
  Ast() = default;
  /// Validates preorder numbering and parent/child consistency.
  explicit Ast(std::vector<AstNode> nodes);

  const AstNode& root() const { return nodes_.front(); }
  const AstNode& node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::span<const AstNode> nodes() const { return nodes_; }
  std::size_t node_count() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  int subtree_size(NodeId id) const { return sizes_[static_cast<std::size_t>(id)]; }
  bool in_subtree(NodeId ancestor, NodeId n) const {
    return n >= ancestor && n < ancestor + subtree_size(ancestor);
  }
  /// Preorder ids of the subtree rooted at id, root first.
  std::vector<NodeId> subtree(NodeId id) const;
  std::vector<NodeId> postorder() const;

  std::string version_tag;
  std::string source_hash;
  QualityMetrics quality;

 private:
  std::vector<AstNode> nodes_;
  std::vector<int> sizes_;
};

/// Maps byte offsets to (line, column). "\r\n" is a single line break.
class LineIndex {
 public:
  explicit LineIndex(std::string_view source);

  std::size_t line_count() const { return line_count_; }
  int line_of(std::size_t offset) const;
  int column_of(std::size_t offset) const;
  SourceSpan span_of(std::size_t offset, std::size_t length) const;
  /// Byte offset of the first character of a 1-based line.
  std::size_t line_start(int line) const;
  std::size_t source_size() const { return size_; }

 private:
  std::vector<std::size_t> starts_;
  std::size_t line_count_ = 0;
  std::size_t size_ = 0;
};

/// Mutable recursive form used while constructing a tree; build_ast flattens
/// it into preorder.
struct DraftNode {
  std::string tag;
  std::string label;
  SourceSpan span;
  std::map<std::string, std::string> attrs;
  std::vector<DraftNode> children;
};

Ast build_ast(const DraftNode& root);

/// Hash of the source text used as the content address everywhere.
std::string source_hash(std::string_view source);

/// Ingests a compiler compact-JSON AST (the `ast` object of standard-JSON
/// output). Node ids are reassigned in preorder; children are ordered by
/// source position. Throws Error{MalformedDocument|SpanOutOfRange}.
Ast ingest_ast(const nlohmann::json& document, std::string_view source,
               std::string version_tag = {});

QualityMetrics assess_quality(const Ast& ast, std::string_view source);

std::optional<std::string> enclosing_function(const Ast& ast, int line);
std::optional<std::string> enclosing_contract(const Ast& ast, int line);

/// Exact source text covered by a span; empty if the span is out of range.
std::string span_text(std::string_view source, const SourceSpan& span);

nlohmann::json to_json(const Ast& ast);
Ast ast_from_json(const nlohmann::json& j);

}  // namespace proxydiff
