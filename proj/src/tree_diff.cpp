#include "proxydiff/tree_diff.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <map>
#include <stdexcept>

namespace proxydiff {

// --- Signatures ----------------------------------------------------------------

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

SubtreeSignature combine(const AstNode& node, const std::vector<SubtreeSignature>& sigs) {
  std::uint64_t h = fnv1a(node.tag);
  h = mix(h, fnv1a(node.label, kFnvOffset ^ 0x5bd1e995ULL));
  int height = 1;
  for (NodeId c : node.children) {
    const SubtreeSignature& s = sigs[static_cast<std::size_t>(c)];
    h = mix(h, s.iso_hash);
    height = std::max(height, s.height + 1);
  }
  h = mix(h, node.children.size());
  return {height, h};
}

}  // namespace

std::vector<SubtreeSignature> compute_signatures(const Ast& ast) {
  std::vector<SubtreeSignature> sigs(ast.node_count());
  for (auto i = static_cast<NodeId>(ast.node_count()) - 1; i >= 0; --i)
    sigs[static_cast<std::size_t>(i)] = combine(ast.node(i), sigs);
  return sigs;
}

SubtreeSignature subtree_signature(const Ast& ast, NodeId id) {
  std::vector<SubtreeSignature> sigs(ast.node_count());
  const NodeId last = id + ast.subtree_size(id) - 1;
  for (NodeId i = last; i >= id; --i) sigs[static_cast<std::size_t>(i)] = combine(ast.node(i), sigs);
  return sigs[static_cast<std::size_t>(id)];
}

bool isomorphic(const Ast& a, NodeId ia, const Ast& b, NodeId ib) {
  const int size = a.subtree_size(ia);
  if (size != b.subtree_size(ib)) return false;
  for (int k = 0; k < size; ++k) {
    const AstNode& x = a.node(ia + k);
    const AstNode& y = b.node(ib + k);
    if (x.tag != y.tag || x.label != y.label || x.children.size() != y.children.size()) return false;
  }
  return true;
}

// --- NodeMapping ---------------------------------------------------------------

void NodeMapping::link(NodeId a, NodeId b) {
  if (has_v1(a) || has_v2(b)) throw std::logic_error("NodeMapping::link on an already mapped node");
  to_v2_[static_cast<std::size_t>(a)] = b;
  to_v1_[static_cast<std::size_t>(b)] = a;
  ++size_;
}

std::vector<std::pair<NodeId, NodeId>> NodeMapping::pairs() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(size_);
  for (std::size_t a = 0; a < to_v2_.size(); ++a)
    if (to_v2_[a] != kNoNode) out.emplace_back(static_cast<NodeId>(a), to_v2_[a]);
  return out;
}

double dice(const Ast& v1, const Ast& v2, const NodeMapping& m, NodeId t1, NodeId t2) {
  const int d1 = v1.subtree_size(t1) - 1;
  const int d2 = v2.subtree_size(t2) - 1;
  if (d1 + d2 == 0) return 0.0;
  int common = 0;
  for (NodeId d = t1 + 1; d < t1 + v1.subtree_size(t1); ++d) {
    if (!m.has_v1(d)) continue;
    const NodeId p = m.v2_of(d);
    if (p != t2 && v2.in_subtree(t2, p)) ++common;
  }
  return 2.0 * common / static_cast<double>(d1 + d2);
}

// --- Top-down phase ------------------------------------------------------------

namespace {

class HeightQueue {
 public:
  HeightQueue(const Ast& ast, const std::vector<SubtreeSignature>& sigs) : ast_(ast), sigs_(sigs) {}

  void push(NodeId id) { ids_.push_back(id); }
  int peek_max() const {
    int best = 0;
    for (NodeId id : ids_) best = std::max(best, sigs_[static_cast<std::size_t>(id)].height);
    return best;
  }
  std::vector<NodeId> pop() {
    const int max = peek_max();
    std::vector<NodeId> out;
    std::vector<NodeId> rest;
    for (NodeId id : ids_)
      (sigs_[static_cast<std::size_t>(id)].height == max ? out : rest).push_back(id);
    ids_ = std::move(rest);
    std::sort(out.begin(), out.end());
    return out;
  }
  void open(NodeId id) {
    for (NodeId c : ast_.node(id).children) push(c);
  }

 private:
  const Ast& ast_;
  const std::vector<SubtreeSignature>& sigs_;
  std::vector<NodeId> ids_;
};

bool subtree_free(const Ast& v1, const Ast& v2, const NodeMapping& m, NodeId t1, NodeId t2) {
  for (NodeId d = t1; d < t1 + v1.subtree_size(t1); ++d)
    if (m.has_v1(d)) return false;
  for (NodeId d = t2; d < t2 + v2.subtree_size(t2); ++d)
    if (m.has_v2(d)) return false;
  return true;
}

void link_subtrees(const Ast& v1, NodeMapping& m, NodeId t1, NodeId t2) {
  for (int k = 0; k < v1.subtree_size(t1); ++k) m.link(t1 + k, t2 + k);
}

}  // namespace

NodeMapping top_down_match(const Ast& v1, const Ast& v2, int min_height) {
  NodeMapping m(v1.node_count(), v2.node_count());
  const auto sigs1 = compute_signatures(v1);
  const auto sigs2 = compute_signatures(v2);
  HeightQueue l1(v1, sigs1);
  HeightQueue l2(v2, sigs2);
  l1.push(0);
  l2.push(0);

  std::vector<std::pair<NodeId, NodeId>> ambiguous;
  int h1 = 0;
  int h2 = 0;
  while (std::min(h1 = l1.peek_max(), h2 = l2.peek_max()) >= std::max(1, min_height)) {
    if (h1 > h2) {
      for (NodeId id : l1.pop()) l1.open(id);
      continue;
    }
    if (h2 > h1) {
      for (NodeId id : l2.pop()) l2.open(id);
      continue;
    }
    const std::vector<NodeId> top1 = l1.pop();
    const std::vector<NodeId> top2 = l2.pop();
    std::map<std::uint64_t, std::vector<NodeId>> by_hash1;
    std::map<std::uint64_t, std::vector<NodeId>> by_hash2;
    for (NodeId id : top1) by_hash1[sigs1[static_cast<std::size_t>(id)].iso_hash].push_back(id);
    for (NodeId id : top2) by_hash2[sigs2[static_cast<std::size_t>(id)].iso_hash].push_back(id);

    std::vector<bool> paired1(v1.node_count(), false);
    std::vector<bool> paired2(v2.node_count(), false);
    for (const auto& [hash, group1] : by_hash1) {
      auto it = by_hash2.find(hash);
      if (it == by_hash2.end()) continue;
      const std::vector<NodeId>& group2 = it->second;
      std::vector<std::pair<NodeId, NodeId>> iso;
      for (NodeId a : group1)
        for (NodeId b : group2)
          if (isomorphic(v1, a, v2, b)) iso.emplace_back(a, b);
      for (const auto& [a, b] : iso) {
        paired1[static_cast<std::size_t>(a)] = true;
        paired2[static_cast<std::size_t>(b)] = true;
      }
      if (group1.size() == 1 && group2.size() == 1 && iso.size() == 1) {
        link_subtrees(v1, m, iso[0].first, iso[0].second);
      } else {
        ambiguous.insert(ambiguous.end(), iso.begin(), iso.end());
      }
    }
    for (NodeId a : top1)
      if (!paired1[static_cast<std::size_t>(a)]) l1.open(a);
    for (NodeId b : top2)
      if (!paired2[static_cast<std::size_t>(b)]) l2.open(b);
  }

  // Ambiguous isomorphic pairs: prefer the ones whose parents already look alike.
  struct Scored {
    double score;
    NodeId a;
    NodeId b;
  };
  std::vector<Scored> scored;
  scored.reserve(ambiguous.size());
  for (const auto& [a, b] : ambiguous) {
    const NodeId pa = v1.node(a).parent;
    const NodeId pb = v2.node(b).parent;
    const double s = (pa == kNoNode || pb == kNoNode) ? 0.0 : dice(v1, v2, m, pa, pb);
    scored.push_back({s, a, b});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& x, const Scored& y) {
    if (x.score != y.score) return x.score > y.score;
    return std::pair(x.a, x.b) < std::pair(y.a, y.b);
  });
  for (const Scored& s : scored)
    if (subtree_free(v1, v2, m, s.a, s.b)) link_subtrees(v1, m, s.a, s.b);
  return m;
}

// --- Bottom-up phase -----------------------------------------------------------

namespace {

// Index pairs of a longest common subsequence; ties resolved toward the
// earliest elements of `xs`.
template <typename Eq>
std::vector<std::pair<std::size_t, std::size_t>> lcs(std::size_t n, std::size_t k, Eq eq) {
  std::vector<std::vector<int>> t(n + 1, std::vector<int>(k + 1, 0));
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t j = k; j-- > 0;)
      t[i][j] = eq(i, j) ? t[i + 1][j + 1] + 1 : std::max(t[i + 1][j], t[i][j + 1]);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < n && j < k) {
    if (eq(i, j)) {
      out.emplace_back(i, j);
      ++i;
      ++j;
    } else if (t[i + 1][j] >= t[i][j + 1]) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

void recover(const Ast& v1, const Ast& v2, NodeMapping& m, NodeId t1, NodeId t2, int max_size) {
  if (std::max(v1.subtree_size(t1), v2.subtree_size(t2)) > max_size) return;

  // Pass 1: LCS over (kind, label) of the unmapped descendants in preorder.
  std::vector<NodeId> s1;
  std::vector<NodeId> s2;
  for (NodeId d = t1 + 1; d < t1 + v1.subtree_size(t1); ++d)
    if (!m.has_v1(d)) s1.push_back(d);
  for (NodeId d = t2 + 1; d < t2 + v2.subtree_size(t2); ++d)
    if (!m.has_v2(d)) s2.push_back(d);
  auto same_node = [&](std::size_t i, std::size_t j) {
    const AstNode& a = v1.node(s1[i]);
    const AstNode& b = v2.node(s2[j]);
    return a.tag == b.tag && a.label == b.label;
  };
  for (const auto& [i, j] : lcs(s1.size(), s2.size(), same_node)) m.link(s1[i], s2[j]);

  // Pass 2: below each mapped pair, align the remaining children by kind
  // alone so relabelled nodes surface as updates.
  for (NodeId a = t1; a < t1 + v1.subtree_size(t1); ++a) {
    if (!m.has_v1(a)) continue;
    const NodeId b = m.v2_of(a);
    if (!v2.in_subtree(t2, b)) continue;
    std::vector<NodeId> c1;
    std::vector<NodeId> c2;
    for (NodeId c : v1.node(a).children)
      if (!m.has_v1(c)) c1.push_back(c);
    for (NodeId c : v2.node(b).children)
      if (!m.has_v2(c)) c2.push_back(c);
    auto same_kind = [&](std::size_t i, std::size_t j) {
      return v1.node(c1[i]).tag == v2.node(c2[j]).tag;
    };
    for (const auto& [i, j] : lcs(c1.size(), c2.size(), same_kind)) m.link(c1[i], c2[j]);
  }
}

}  // namespace

NodeMapping bottom_up_match(const Ast& v1, const Ast& v2, NodeMapping m, double min_dice,
                            int max_size) {
  for (NodeId t1 : v1.postorder()) {
    if (t1 == 0) break;  // the root is last in postorder and handled below
    if (m.has_v1(t1)) continue;
    bool any_mapped = false;
    std::vector<NodeId> candidates;
    for (NodeId d = t1 + 1; d < t1 + v1.subtree_size(t1); ++d) {
      if (!m.has_v1(d)) continue;
      any_mapped = true;
      for (NodeId c = v2.node(m.v2_of(d)).parent; c != kNoNode; c = v2.node(c).parent)
        if (!m.has_v2(c) && v2.node(c).tag == v1.node(t1).tag) candidates.push_back(c);
    }
    if (!any_mapped) continue;
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    NodeId best = kNoNode;
    double best_dice = -1.0;
    for (NodeId c : candidates) {
      const double d = dice(v1, v2, m, t1, c);
      if (d > best_dice) {
        best_dice = d;
        best = c;
      }
    }
    if (best != kNoNode && best_dice >= min_dice) {
      m.link(t1, best);
      recover(v1, v2, m, t1, best, max_size);
    }
  }
  if (!m.has_v1(0) && !m.has_v2(0) && v1.root().tag == v2.root().tag) {
    m.link(0, 0);
    recover(v1, v2, m, 0, 0, max_size);
  }
  return m;
}

// --- Edit script ---------------------------------------------------------------

std::string_view to_string(EditKind kind) {
  switch (kind) {
    case EditKind::Insert: return "Insert";
    case EditKind::Delete: return "Delete";
    case EditKind::Update: return "Update";
    case EditKind::Move: return "Move";
  }
  return "Insert";
}

std::optional<EditKind> parse_edit_kind(std::string_view s) {
  for (EditKind k : {EditKind::Insert, EditKind::Delete, EditKind::Update, EditKind::Move})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

namespace {

// Chawathe et al. edit script generation over a mutable copy of v1 with a
// virtual root (work id 0) above both trees.
class ScriptBuilder {
 public:
  ScriptBuilder(const Ast& v1, const Ast& v2, const NodeMapping& mapping)
      : v1_(v1), v2_(v2), to_v2_(v1.node_count() + 1, kNoNode), to_work_(v2.node_count(), kNoNode),
        dst_in_order_(v2.node_count(), false) {
    work_.push_back({kNoNode, {1}, NodeRef{Side::V1, kNoNode}, {}});
    for (const AstNode& n : v1.nodes()) {
      WorkNode w;
      w.parent = n.parent == kNoNode ? 0 : n.parent + 1;
      for (NodeId c : n.children) w.children.push_back(c + 1);
      w.ref = NodeRef{Side::V1, n.id};
      w.label = n.label;
      work_.push_back(std::move(w));
    }
    src_in_order_.assign(work_.size(), false);
    for (const auto& [a, b] : mapping.pairs()) {
      to_v2_[static_cast<std::size_t>(a + 1)] = b;
      to_work_[static_cast<std::size_t>(b)] = a + 1;
    }
  }

  std::vector<EditOp> run() {
    std::deque<NodeId> bfs{0};
    while (!bfs.empty()) {
      const NodeId x = bfs.front();
      bfs.pop_front();
      for (NodeId c : v2_.node(x).children) bfs.push_back(c);

      const NodeId y = v2_.node(x).parent;
      const int z = y == kNoNode ? 0 : to_work_[static_cast<std::size_t>(y)];
      int w = to_work_[static_cast<std::size_t>(x)];
      if (w == kNoNode) {
        const int k = find_pos(x);
        w = static_cast<int>(work_.size());
        work_.push_back({z, {}, NodeRef{Side::V2, x}, v2_.node(x).label});
        src_in_order_.push_back(false);
        to_v2_.push_back(x);
        to_work_[static_cast<std::size_t>(x)] = w;
        insert_child(z, w, k);
        ops_.push_back(EditOp{EditKind::Insert, NodeRef{Side::V2, x}, x, ref(z), k, {}, {}});
      } else {
        const std::string& new_label = v2_.node(x).label;
        if (work_[static_cast<std::size_t>(w)].label != new_label) {
          ops_.push_back(EditOp{EditKind::Update, ref(w), x, {}, -1,
                                work_[static_cast<std::size_t>(w)].label, new_label});
          work_[static_cast<std::size_t>(w)].label = new_label;
        }
        if (work_[static_cast<std::size_t>(w)].parent != z) {
          detach(w);
          const int k = find_pos(x);
          insert_child(z, w, k);
          ops_.push_back(EditOp{EditKind::Move, ref(w), x, ref(z), k, {}, {}});
        }
      }
      src_in_order_[static_cast<std::size_t>(w)] = true;
      dst_in_order_[static_cast<std::size_t>(x)] = true;
      align_children(w, x);
    }
    delete_unmapped(0);
    return std::move(ops_);
  }

 private:
  struct WorkNode {
    int parent = kNoNode;
    std::vector<int> children;
    NodeRef ref;
    std::string label;
  };

  NodeRef ref(int w) const { return work_[static_cast<std::size_t>(w)].ref; }

  void detach(int w) {
    auto& siblings = work_[static_cast<std::size_t>(work_[static_cast<std::size_t>(w)].parent)].children;
    siblings.erase(std::find(siblings.begin(), siblings.end(), w));
  }

  void insert_child(int parent, int w, int k) {
    auto& kids = work_[static_cast<std::size_t>(parent)].children;
    kids.insert(kids.begin() + k, w);
    work_[static_cast<std::size_t>(w)].parent = parent;
  }

  int index_in_parent(int w) const {
    const auto& kids = work_[static_cast<std::size_t>(work_[static_cast<std::size_t>(w)].parent)].children;
    return static_cast<int>(std::find(kids.begin(), kids.end(), w) - kids.begin());
  }

  int find_pos(NodeId x) const {
    const NodeId y = v2_.node(x).parent;
    if (y == kNoNode) return 0;
    const auto& siblings = v2_.node(y).children;
    NodeId v = kNoNode;
    for (NodeId c : siblings) {
      if (c == x) break;
      if (dst_in_order_[static_cast<std::size_t>(c)]) v = c;
    }
    if (v == kNoNode) return 0;
    return index_in_parent(to_work_[static_cast<std::size_t>(v)]) + 1;
  }

  void align_children(int w, NodeId x) {
    const std::vector<int>& wkids = work_[static_cast<std::size_t>(w)].children;
    const std::vector<NodeId>& xkids = v2_.node(x).children;
    for (int c : wkids) src_in_order_[static_cast<std::size_t>(c)] = false;
    for (NodeId c : xkids) dst_in_order_[static_cast<std::size_t>(c)] = false;

    std::vector<int> s1;
    for (int c : wkids) {
      const NodeId p = to_v2_[static_cast<std::size_t>(c)];
      if (p != kNoNode && v2_.node(p).parent == x) s1.push_back(c);
    }
    std::vector<NodeId> s2;
    for (NodeId c : xkids) {
      const int p = to_work_[static_cast<std::size_t>(c)];
      if (p != kNoNode && work_[static_cast<std::size_t>(p)].parent == w) s2.push_back(c);
    }
    auto partners = [&](std::size_t i, std::size_t j) {
      return to_v2_[static_cast<std::size_t>(s1[i])] == s2[j];
    };
    for (const auto& [i, j] : lcs(s1.size(), s2.size(), partners)) {
      src_in_order_[static_cast<std::size_t>(s1[i])] = true;
      dst_in_order_[static_cast<std::size_t>(s2[j])] = true;
    }
    for (NodeId b : s2) {
      if (dst_in_order_[static_cast<std::size_t>(b)]) continue;
      const int a = to_work_[static_cast<std::size_t>(b)];
      detach(a);
      const int k = find_pos(b);
      insert_child(w, a, k);
      ops_.push_back(EditOp{EditKind::Move, ref(a), b, ref(w), k, {}, {}});
      src_in_order_[static_cast<std::size_t>(a)] = true;
      dst_in_order_[static_cast<std::size_t>(b)] = true;
    }
  }

  void delete_unmapped(int w) {
    const std::vector<int> kids = work_[static_cast<std::size_t>(w)].children;
    for (int c : kids) delete_unmapped(c);
    if (w != 0 && to_v2_[static_cast<std::size_t>(w)] == kNoNode) {
      assert(work_[static_cast<std::size_t>(w)].children.empty());
      detach(w);
      ops_.push_back(EditOp{EditKind::Delete, ref(w), kNoNode, {}, -1, work_[static_cast<std::size_t>(w)].label, {}});
    }
  }

  const Ast& v1_;
  const Ast& v2_;
  std::vector<WorkNode> work_;
  std::vector<NodeId> to_v2_;   // work id -> v2 id
  std::vector<int> to_work_;    // v2 id -> work id
  std::vector<bool> src_in_order_;
  std::vector<bool> dst_in_order_;
  std::vector<EditOp> ops_;
};

}  // namespace

std::vector<EditOp> edit_script(const Ast& v1, const Ast& v2, const NodeMapping& mapping) {
  return ScriptBuilder(v1, v2, mapping).run();
}

DiffResult diff_trees(const Ast& v1, const Ast& v2, const DiffOptions& options) {
  DiffResult result;
  result.mapping = bottom_up_match(v1, v2, top_down_match(v1, v2, options.min_height),
                                   options.min_dice, options.max_size);
  result.script = edit_script(v1, v2, result.mapping);
  return result;
}

// --- Change extraction ---------------------------------------------------------

namespace {

constexpr std::size_t kMaxSnippet = 1000;

bool carries_identifier(const AstNode& n) {
  return n.is(NodeKind::Identifier) || n.is(NodeKind::MemberAccess) ||
         n.is(NodeKind::FunctionDefinition) || n.is(NodeKind::VariableDeclaration);
}

}  // namespace

std::vector<ChangeRecord> extract_changes(const std::vector<EditOp>& script, const Ast& v1,
                                          const Ast& v2, std::string_view v1_source,
                                          std::string_view v2_source) {
  std::vector<ChangeRecord> out;
  out.reserve(script.size());
  for (const EditOp& op : script) {
    ChangeRecord rec;
    rec.change_id = static_cast<int>(out.size());
    rec.op = op.kind;
    if (op.kind != EditKind::Insert && op.subject.side == Side::V1) rec.v1_node = op.subject.id;
    rec.v2_node = op.target;

    const bool on_v1 = op.kind == EditKind::Delete;
    const Ast& ast = on_v1 ? v1 : v2;
    const NodeId id = on_v1 ? rec.v1_node : rec.v2_node;
    const AstNode& node = ast.node(id);
    rec.side = on_v1 ? Side::V1 : Side::V2;
    rec.span = node.span;
    rec.line = node.span.start_line;
    rec.node_kind = node.tag;
    rec.function_name = enclosing_function(ast, rec.line);
    rec.contract_name = enclosing_contract(ast, rec.line);
    for (NodeId d : ast.subtree(id))
      if (carries_identifier(ast.node(d)) && !ast.node(d).label.empty())
        rec.identifiers.insert(ast.node(d).label);
    rec.snippet = span_text(on_v1 ? v1_source : v2_source, node.span);
    if (rec.snippet.size() > kMaxSnippet) rec.snippet.resize(kMaxSnippet);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace proxydiff
