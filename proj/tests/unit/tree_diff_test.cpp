#include <gtest/gtest.h>

#include <algorithm>

#include "proxydiff/tree_diff.hpp"
#include "test_support.hpp"

using namespace proxydiff;
using namespace testing_support;

namespace {

DraftNode leaf(std::string tag, std::string label = "") { return DraftNode{std::move(tag), std::move(label), {}, {}, {}}; }

DraftNode with(std::string tag, std::vector<DraftNode> kids, std::string label = "") {
  DraftNode n = leaf(std::move(tag), std::move(label));
  n.children = std::move(kids);
  return n;
}

struct Loaded {
  Ast v1;
  Ast v2;
  std::string s1;
  std::string s2;
};

Loaded load_pair(const std::string& name) {
  const auto dir = fixture("diff/" + name);
  return {load_ast(dir / "v1.sol"), load_ast(dir / "v2.sol"), read_text(dir / "v1.sol"), read_text(dir / "v2.sol")};
}

void expect_applies(const Ast& v1, const Ast& v2, const DiffResult& r, const std::string& what) {
  EXPECT_TRUE(mapping_injective(r.mapping)) << what;
  try {
    const PlainNode out = apply_edit_script(v1, v2, r.script);
    EXPECT_TRUE(same_tree(out, v2)) << what;
  } catch (const std::exception& e) {
    ADD_FAILURE() << what << ": " << e.what();
  }
}

}  // namespace

TEST(Dice, HalfOfDescendantsMapped) {
  // Two subtrees with four descendants each, two of them paired.
  const Ast a = build_ast(with("Block", {leaf("Identifier", "a"), leaf("Identifier", "b"),
                                         leaf("Identifier", "c"), leaf("Identifier", "d")}));
  const Ast b = build_ast(with("Block", {leaf("Identifier", "a"), leaf("Identifier", "b"),
                                         leaf("Identifier", "x"), leaf("Identifier", "y")}));
  NodeMapping m(a.node_count(), b.node_count());
  m.link(1, 1);
  m.link(2, 2);
  EXPECT_DOUBLE_EQ(dice(a, b, m, 0, 0), 0.5);
  m.link(0, 0);  // root pair does not count toward dice
  EXPECT_DOUBLE_EQ(dice(a, b, m, 0, 0), 0.5);
  const Ast lone = build_ast(leaf("Identifier", "z"));
  EXPECT_DOUBLE_EQ(dice(lone, lone, NodeMapping(1, 1), 0, 0), 0.0);
}

TEST(NodeMapping, RejectsDoubleLinks) {
  NodeMapping m(3, 3);
  m.link(0, 1);
  EXPECT_THROW(m.link(0, 2), std::logic_error);
  EXPECT_THROW(m.link(2, 1), std::logic_error);
  EXPECT_EQ(m.size(), 1u);
  EXPECT_TRUE(m.contains(0, 1));
}

TEST(Signatures, IsomorphismIgnoresAttributesButNotLabels) {
  DraftNode x = with("FunctionCall", {leaf("Identifier", "f"), leaf("Literal", "1")});
  DraftNode y = x;
  y.attrs["typeString"] = "uint256";
  DraftNode z = with("FunctionCall", {leaf("Identifier", "g"), leaf("Literal", "1")});
  const Ast ax = build_ast(x), ay = build_ast(y), az = build_ast(z);
  EXPECT_TRUE(isomorphic(ax, 0, ay, 0));
  EXPECT_EQ(subtree_signature(ax, 0), subtree_signature(ay, 0));
  EXPECT_FALSE(isomorphic(ax, 0, az, 0));
  EXPECT_NE(subtree_signature(ax, 0).iso_hash, subtree_signature(az, 0).iso_hash);
  EXPECT_EQ(subtree_signature(ax, 0).height, 2);
}

TEST(TopDown, IdenticalTreesMapCompletely) {
  Rng rng(7);
  const Ast a = build_ast(random_tree(rng, 60));
  const NodeMapping m = top_down_match(a, a, 1);
  EXPECT_EQ(m.size(), a.node_count());
  const DiffResult r = diff_trees(a, a);
  EXPECT_TRUE(r.script.empty());
}

TEST(TopDown, RespectsMinHeight) {
  const Ast a = build_ast(with("Block", {leaf("Identifier", "a"), leaf("Literal", "1")}));
  const Ast b = build_ast(with("Return", {leaf("Identifier", "a"), leaf("Literal", "1")}));
  EXPECT_EQ(top_down_match(a, b, 2).size(), 0u);  // only height-1 leaves are shared
  EXPECT_EQ(top_down_match(a, b, 1).size(), 2u);
}

TEST(EditKind, RoundTrips) {
  for (EditKind k : {EditKind::Insert, EditKind::Delete, EditKind::Update, EditKind::Move})
    EXPECT_EQ(parse_edit_kind(to_string(k)), k);
  EXPECT_FALSE(parse_edit_kind("Rename").has_value());
}

TEST(DiffCorpus, RenameProducesUpdates) {
  const Loaded p = load_pair("01_rename_variable");
  const DiffResult r = diff_trees(p.v1, p.v2);
  ASSERT_FALSE(r.script.empty());
  EXPECT_TRUE(std::all_of(r.script.begin(), r.script.end(), [](const EditOp& op) { return op.kind == EditKind::Update; }));
  const auto changes = extract_changes(r.script, p.v1, p.v2, p.s1, p.s2);
  bool saw_decl = false;
  for (const ChangeRecord& c : changes) {
    EXPECT_EQ(c.side, Side::V2);
    if (c.node_kind == "VariableDeclaration") {
      saw_decl = true;
      EXPECT_EQ(c.line, 6);
      EXPECT_TRUE(c.identifiers.count("totalDeposits"));
      EXPECT_EQ(c.contract_name, "Vault");
    }
  }
  EXPECT_TRUE(saw_decl);
}

TEST(DiffCorpus, DeletedRequireReportedOnV1Side) {
  const Loaded p = load_pair("03_delete_require");
  const DiffResult r = diff_trees(p.v1, p.v2);
  const auto changes = extract_changes(r.script, p.v1, p.v2, p.s1, p.s2);
  ASSERT_FALSE(changes.empty());
  for (const ChangeRecord& c : changes) {
    EXPECT_EQ(c.op, EditKind::Delete);
    EXPECT_EQ(c.side, Side::V1);
    EXPECT_EQ(c.line, 9);
    EXPECT_EQ(c.function_name, "transfer");
    EXPECT_NE(c.v1_node, kNoNode);
    EXPECT_EQ(c.v2_node, kNoNode);
  }
  const auto stmt = std::find_if(changes.begin(), changes.end(),
                                 [](const ChangeRecord& c) { return c.node_kind == "ExpressionStatement"; });
  ASSERT_NE(stmt, changes.end());
  EXPECT_EQ(stmt->snippet, "require(to != address(0), \"zero address\")");  // compiler spans stop before the semicolon
}

TEST(DiffCorpus, MovedFunctionIsOneMove) {
  const Loaded p = load_pair("04_move_function");
  const DiffResult r = diff_trees(p.v1, p.v2);
  ASSERT_EQ(r.script.size(), 1u);
  EXPECT_EQ(r.script[0].kind, EditKind::Move);
  EXPECT_EQ(p.v1.node(r.script[0].subject.id).tag, "FunctionDefinition");
  EXPECT_EQ(p.v1.node(r.script[0].subject.id).label, "lookup");
}

TEST(DiffCorpus, IdenticalSourcesHaveNoChanges) {
  const Loaded p = load_pair("21_identical");
  const DiffResult r = diff_trees(p.v1, p.v2);
  EXPECT_TRUE(r.script.empty());
  EXPECT_EQ(r.mapping.size(), p.v1.node_count());
}

TEST(DiffCorpus, SnippetsAreCapped) {
  std::string big = "contract Big {\n";
  for (int i = 0; i < 200; ++i) big += "    uint256 public value" + std::to_string(i) + ";\n";
  big += "}\n";
  DraftNode root = with("SourceUnit", {}, "");
  root.span = {1, 202, 0, 0};
  const Ast v1 = build_ast(root);
  DraftNode contract = leaf("ContractDefinition", "Big");
  contract.span = {1, 202, 0, 0};
  root.children.push_back(contract);
  const Ast v2 = build_ast(root);
  const DiffResult r = diff_trees(v1, v2);
  const auto changes = extract_changes(r.script, v1, v2, "", big);
  ASSERT_EQ(changes.size(), 1u);
  EXPECT_LE(changes[0].snippet.size(), 1000u);
}

class ApplyOracle : public ::testing::TestWithParam<std::filesystem::path> {};

TEST_P(ApplyOracle, ScriptTransformsV1IntoV2) {
  const Ast v1 = load_ast(GetParam() / "v1.sol");
  const Ast v2 = load_ast(GetParam() / "v2.sol");
  expect_applies(v1, v2, diff_trees(v1, v2), GetParam().filename().string());
  expect_applies(v2, v1, diff_trees(v2, v1), GetParam().filename().string() + " (reversed)");
}

INSTANTIATE_TEST_SUITE_P(Corpus, ApplyOracle, ::testing::ValuesIn(pair_dirs("diff")),
                         [](const auto& info) { return "p" + info.param.filename().string(); });

// Property: for random trees and random mutations of them, the script always
// replays to the target and the mapping stays injective.
TEST(DiffProperty, RandomPairsReplayExactly) {
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    Rng rng(seed);
    const DraftNode base = random_tree(rng, 10 + static_cast<int>(seed % 120));
    const DraftNode mutated = mutate_tree(rng, base, 1 + static_cast<int>(seed % 8));
    const Ast a = build_ast(base);
    const Ast b = build_ast(mutated);
    expect_applies(a, b, diff_trees(a, b), "seed " + std::to_string(seed));
    if (HasFailure()) break;
  }
}

TEST(DiffProperty, UnrelatedTreesReplayExactly) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed * 7919);
    const Ast a = build_ast(random_tree(rng, 40));
    const Ast b = build_ast(random_tree(rng, 40));
    expect_applies(a, b, diff_trees(a, b), "seed " + std::to_string(seed));
    if (HasFailure()) break;
  }
}

TEST(DiffProperty, OptionsDoNotBreakCorrectness) {
  Rng rng(99);
  const DraftNode base = random_tree(rng, 80);
  const Ast a = build_ast(base);
  const Ast b = build_ast(mutate_tree(rng, base, 5));
  for (int h : {1, 2, 3})
    for (double d : {0.2, 0.5, 0.9})
      for (int s : {0, 100}) expect_applies(a, b, diff_trees(a, b, DiffOptions{h, d, s}), "options");
}
