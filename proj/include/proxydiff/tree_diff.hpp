#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "proxydiff/ast.hpp"

namespace proxydiff {

struct DiffOptions {
  int min_height = 2;
  double min_dice = 0.5;
  int max_size = 100;
};

struct SubtreeSignature {
  int height = 1;
  std::uint64_t iso_hash = 0;

  friend bool operator==(const SubtreeSignature&, const SubtreeSignature&) = default;
};

SubtreeSignature subtree_signature(const Ast& ast, NodeId id);
/// Signatures for every node, indexed by id.
std::vector<SubtreeSignature> compute_signatures(const Ast& ast);
/// Exact structural equality over (tag, label, child order).
bool isomorphic(const Ast& a, NodeId ia, const Ast& b, NodeId ib);

/// Injective partial map between v1 and v2 node ids.
class NodeMapping {
 public:
  NodeMapping() = default;
  NodeMapping(std::size_t v1_size, std::size_t v2_size)
      : to_v2_(v1_size, kNoNode), to_v1_(v2_size, kNoNode) {}

  bool has_v1(NodeId a) const { return to_v2_[static_cast<std::size_t>(a)] != kNoNode; }
  bool has_v2(NodeId b) const { return to_v1_[static_cast<std::size_t>(b)] != kNoNode; }
  NodeId v2_of(NodeId a) const { return to_v2_[static_cast<std::size_t>(a)]; }
  NodeId v1_of(NodeId b) const { return to_v1_[static_cast<std::size_t>(b)]; }
  bool contains(NodeId a, NodeId b) const { return has_v1(a) && v2_of(a) == b; }

  /// Links a and b; both must currently be unmapped.
  void link(NodeId a, NodeId b);
  std::size_t size() const { return size_; }
  std::size_t v1_size() const { return to_v2_.size(); }
  std::size_t v2_size() const { return to_v1_.size(); }
  /// All pairs ordered by v1 id.
  std::vector<std::pair<NodeId, NodeId>> pairs() const;

  friend bool operator==(const NodeMapping&, const NodeMapping&) = default;

 private:
  std::vector<NodeId> to_v2_;
  std::vector<NodeId> to_v1_;
  std::size_t size_ = 0;
};

NodeMapping top_down_match(const Ast& v1, const Ast& v2, int min_height);
NodeMapping bottom_up_match(const Ast& v1, const Ast& v2, NodeMapping seed, double min_dice,
                            int max_size);

/// 2 * |mapped descendant pairs| / (|desc(t1)| + |desc(t2)|); roots excluded,
/// 0 when both subtrees are leaves.
double dice(const Ast& v1, const Ast& v2, const NodeMapping& mapping, NodeId t1, NodeId t2);

enum class EditKind { Insert, Delete, Update, Move };
std::string_view to_string(EditKind kind);
std::optional<EditKind> parse_edit_kind(std::string_view s);

enum class Side { V1, V2 };

/// A node of the tree being edited: original v1 nodes are named by their v1
/// id, nodes created by an earlier Insert by their v2 id. {V1, kNoNode} is
/// the virtual root that sits above both trees.
struct NodeRef {
  Side side = Side::V1;
  NodeId id = kNoNode;

  friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

/// One step of an edit script. Ops apply in order to a working copy of v1:
///   Insert  new leaf (kind/label of v2 node `subject.id`) under `parent` at `position`
///   Delete  leaf `subject` (a v1 node)
///   Update  label of `subject` to `new_label`
///   Move    detach `subject`, then insert it under `parent` at `position`
/// `target` is the v2 node the subject corresponds to (kNoNode for Delete).
struct EditOp {
  EditKind kind = EditKind::Insert;
  NodeRef subject;
  NodeId target = kNoNode;
  NodeRef parent;
  int position = -1;
  std::string old_label;
  std::string new_label;
};

std::vector<EditOp> edit_script(const Ast& v1, const Ast& v2, const NodeMapping& mapping);

struct DiffResult {
  NodeMapping mapping;
  std::vector<EditOp> script;
};

DiffResult diff_trees(const Ast& v1, const Ast& v2, const DiffOptions& options = {});

struct ChangeRecord {
  int change_id = 0;
  EditKind op = EditKind::Insert;
  Side side = Side::V2;  // which version `line`/`span` refer to
  int line = 1;
  SourceSpan span;
  NodeId v1_node = kNoNode;
  NodeId v2_node = kNoNode;
  std::optional<std::string> function_name;
  std::optional<std::string> contract_name;
  std::string node_kind;
  std::set<std::string> identifiers;
  std::string snippet;
};

std::vector<ChangeRecord> extract_changes(const std::vector<EditOp>& script, const Ast& v1,
                                          const Ast& v2, std::string_view v1_source,
                                          std::string_view v2_source);

}  // namespace proxydiff
