#include <gtest/gtest.h>

#include <algorithm>

#include "proxydiff/source_parser.hpp"
#include "proxydiff/vuln_detect.hpp"
#include "test_support.hpp"

using namespace proxydiff;
using namespace testing_support;

namespace {

std::vector<Finding> scan(const std::string& src) { return detect(parse_source(src), src); }

std::vector<std::pair<VulnType, int>> brief(const std::vector<Finding>& fs) {
  std::vector<std::pair<VulnType, int>> out;
  for (const Finding& f : fs) out.emplace_back(f.vuln_type, f.line);
  return out;
}

bool has(const std::vector<Finding>& fs, VulnType t) {
  return std::any_of(fs.begin(), fs.end(), [&](const Finding& f) { return f.vuln_type == t; });
}

const char* kHead = "pragma solidity ^0.8.20;\n";

}  // namespace

TEST(VulnType, NamesRoundTrip) {
  for (VulnType t : kAllVulnTypes) {
    EXPECT_EQ(parse_vuln_type(to_string(t)), t);
    EXPECT_FALSE(vuln_keywords(t).empty());
  }
  EXPECT_FALSE(parse_vuln_type("Bogus"));
}

TEST(Reentrancy, CallBeforeWrite) {
  const std::string src = std::string(kHead) +
                          "contract B {\n"
                          "  mapping(address => uint256) bal;\n"
                          "  function w(uint256 a) external {\n"
                          "    (bool ok, ) = msg.sender.call{value: a}(\"\");\n"
                          "    require(ok);\n"
                          "    bal[msg.sender] -= a;\n"
                          "  }\n"
                          "}\n";
  const auto fs = scan(src);
  ASSERT_EQ(brief(fs), (std::vector<std::pair<VulnType, int>>{{VulnType::Reentrancy, 5}}));
  EXPECT_EQ(fs[0].severity, Severity::High);
  EXPECT_EQ(fs[0].function_name, "w");
  EXPECT_EQ(fs[0].contract_name, "B");
}

TEST(Reentrancy, NegativeCases) {
  const std::string write_first = std::string(kHead) +
                                  "contract B {\n  mapping(address => uint256) bal;\n"
                                  "  function w(uint256 a) external {\n    bal[msg.sender] -= a;\n"
                                  "    (bool ok, ) = msg.sender.call{value: a}(\"\");\n    require(ok);\n  }\n}\n";
  EXPECT_FALSE(has(scan(write_first), VulnType::Reentrancy));
  const std::string guarded = std::string(kHead) +
                              "contract B {\n  mapping(address => uint256) bal;\n  modifier nonReentrant() { _; }\n"
                              "  function w(uint256 a) external nonReentrant {\n"
                              "    (bool ok, ) = msg.sender.call{value: a}(\"\");\n    bal[msg.sender] -= a;\n  }\n}\n";
  EXPECT_FALSE(has(scan(guarded), VulnType::Reentrancy));
  const std::string token = std::string(kHead) +
                            "interface T { function transfer(address, uint256) external returns (bool); }\n"
                            "contract B {\n  mapping(address => uint256) bal;\n  T token;\n"
                            "  function w(uint256 a) external {\n    token.transfer(msg.sender, a);\n"
                            "    bal[msg.sender] -= a;\n  }\n}\n";
  EXPECT_FALSE(has(scan(token), VulnType::Reentrancy));
}

TEST(Reentrancy, SendAndSingleArgTransferCount) {
  const std::string src = std::string(kHead) +
                          "contract B {\n  mapping(address => uint256) bal;\n"
                          "  function w(uint256 a) external {\n    payable(msg.sender).transfer(a);\n"
                          "    bal[msg.sender] = 0;\n  }\n"
                          "  function s(uint256 a) external {\n    payable(msg.sender).send(a);\n"
                          "    bal[msg.sender] = 0;\n  }\n}\n";
  EXPECT_EQ(brief(scan(src)), (std::vector<std::pair<VulnType, int>>{{VulnType::Reentrancy, 5},
                                                                   {VulnType::Reentrancy, 9}}));
}

TEST(AccessControl, UnguardedStateWrite) {
  const std::string src = std::string(kHead) +
                          "contract C {\n  address owner;\n  uint256 fee;\n"
                          "  function setFee(uint256 f) external {\n    fee = f;\n  }\n}\n";
  const auto fs = scan(src);
  ASSERT_EQ(brief(fs), (std::vector<std::pair<VulnType, int>>{{VulnType::AccessControl, 5}}));
  EXPECT_EQ(fs[0].severity, Severity::Medium);
}

TEST(AccessControl, GuardsAndExemptions) {
  const std::string src = std::string(kHead) +
                          "contract C {\n  address owner;\n  uint256 fee;\n  mapping(address => uint256) credit;\n"
                          "  modifier onlyOwner() { require(msg.sender == owner); _; }\n"
                          "  function a(uint256 f) external onlyOwner { fee = f; }\n"
                          "  function b(uint256 f) external { require(msg.sender == owner, \"x\"); fee = f; }\n"
                          "  function c(uint256 f) external { if (msg.sender != owner) revert(); fee = f; }\n"
                          "  function d(uint256 f) external { credit[msg.sender] = f; }\n"
                          "  function e(uint256 f) internal { fee = f; }\n"
                          "  function initialize(uint256 f) external { fee = f; }\n"
                          "  function g(uint256 f) external { _checkOwner(); fee = f; }\n"
                          "  function _checkOwner() internal view { require(msg.sender == owner); }\n"
                          "  function h(uint256 fee) external pure returns (uint256) { return fee; }\n"
                          "}\n";
  EXPECT_FALSE(has(scan(src), VulnType::AccessControl));
}

TEST(IntegerOverflow, LegacyPragmaAndUnchecked) {
  const std::string legacy = "pragma solidity ^0.7.6;\ncontract D {\n  uint256 total;\n"
                             "  function add(uint256 a) internal { total = total + a; }\n}\n";
  EXPECT_EQ(brief(scan(legacy)), (std::vector<std::pair<VulnType, int>>{{VulnType::IntegerOverflow, 4}}));
  const std::string modern = std::string(kHead) +
                             "contract D {\n  uint256 total;\n"
                             "  function add(uint256 a) internal { total = total + a; }\n"
                             "  function sub(uint256 a) internal { unchecked { total -= a; } }\n}\n";
  EXPECT_EQ(brief(scan(modern)), (std::vector<std::pair<VulnType, int>>{{VulnType::IntegerOverflow, 5}}));
  const std::string literal = "pragma solidity ^0.7.6;\ncontract D {\n  uint256 constant X = 1 + 2;\n"
                              "  function f() internal pure returns (uint256) { return 3 * 4; }\n}\n";
  EXPECT_FALSE(has(scan(literal), VulnType::IntegerOverflow));
  const std::string safemath = "pragma solidity ^0.7.6;\nlibrary SafeMath {\n"
                               "  function add(uint256 a, uint256 b) internal pure returns (uint256) { return a + b; }\n}\n";
  EXPECT_FALSE(has(scan(safemath), VulnType::IntegerOverflow));
}

TEST(TxOrigin, ComparisonAgainstOrigin) {
  const std::string src = std::string(kHead) +
                          "contract E {\n  address owner;\n"
                          "  function a() external view { require(tx.origin == owner); }\n"
                          "  function b() external view { require(tx.origin == msg.sender); }\n}\n";
  EXPECT_EQ(brief(scan(src)), (std::vector<std::pair<VulnType, int>>{{VulnType::TxOriginAuth, 4}}));
}

TEST(Delegatecall, TaintedTargets) {
  const std::string src = std::string(kHead) +
                          "contract F {\n  address owner;\n  address impl;\n  address immutable fixedImpl;\n"
                          "  constructor(address i) { fixedImpl = i; }\n"
                          "  function a(address t, bytes calldata d) external { t.delegatecall(d); }\n"
                          "  function b(bytes calldata d) external { impl.delegatecall(d); }\n"
                          "  function c(bytes calldata d) external { fixedImpl.delegatecall(d); }\n"
                          "  function g(address t, bytes calldata d) external { require(msg.sender == owner); t.delegatecall(d); }\n"
                          "  fallback() external payable { impl.delegatecall(msg.data); }\n"
                          "}\n";
  const auto fs = scan(src);
  std::vector<std::pair<VulnType, int>> deleg;
  for (const auto& p : brief(fs))
    if (p.first == VulnType::UnprotectedDelegatecall) deleg.push_back(p);
  EXPECT_EQ(deleg, (std::vector<std::pair<VulnType, int>>{{VulnType::UnprotectedDelegatecall, 7},
                                                         {VulnType::UnprotectedDelegatecall, 8}}));
}

TEST(UninitializedProxy, MissingModifierAndConstructorLock) {
  const std::string bare = std::string(kHead) +
                           "contract G {\n  address owner;\n"
                           "  function initialize(address o) external { owner = o; }\n}\n";
  const auto fs = scan(bare);
  // No constructor lock either: Low on the contract plus High on the function.
  ASSERT_EQ(brief(fs), (std::vector<std::pair<VulnType, int>>{{VulnType::UninitializedProxy, 2},
                                                             {VulnType::UninitializedProxy, 4}}));
  EXPECT_EQ(fs[0].severity, Severity::Low);
  EXPECT_EQ(fs[1].severity, Severity::High);

  const std::string unlocked = std::string(kHead) +
                               "contract G {\n  address owner;\n  modifier initializer() { _; }\n"
                               "  function initialize(address o) external initializer { owner = o; }\n}\n";
  const auto low = scan(unlocked);
  ASSERT_EQ(brief(low), (std::vector<std::pair<VulnType, int>>{{VulnType::UninitializedProxy, 2}}));
  EXPECT_EQ(low[0].severity, Severity::Low);

  const std::string locked = std::string(kHead) +
                             "contract G {\n  address owner;\n  modifier initializer() { _; }\n"
                             "  constructor() { _disableInitializers(); }\n"
                             "  function _disableInitializers() internal {}\n"
                             "  function initialize(address o) external initializer { owner = o; }\n}\n";
  EXPECT_FALSE(has(scan(locked), VulnType::UninitializedProxy));
}

TEST(UnprotectedUpgrade, UpgradeEntryPoints) {
  const std::string src = std::string(kHead) +
                          "contract H {\n  address owner;\n  address impl;\n"
                          "  modifier onlyOwner() { require(msg.sender == owner); _; }\n"
                          "  function upgradeTo(address i) external { impl = i; }\n"
                          "  function upgradeToAndCall(address i) external onlyOwner { impl = i; }\n"
                          "  function _authorizeUpgrade(address) internal {}\n"
                          "}\n";
  EXPECT_EQ(brief(scan(src)), (std::vector<std::pair<VulnType, int>>{{VulnType::UnprotectedUpgrade, 6},
                                                                   {VulnType::UnprotectedUpgrade, 8}}));
}

TEST(Detect, SortedNumberedAndDeduplicated) {
  const std::string src = std::string(kHead) +
                          "contract I {\n  address owner;\n  uint256 x;\n"
                          "  function a(uint256 v) external { x = v; x = v + 1; }\n"
                          "  function b() external view { require(tx.origin == owner); }\n}\n";
  const auto fs = scan(src);
  for (std::size_t i = 0; i < fs.size(); ++i) {
    EXPECT_EQ(fs[i].finding_id, static_cast<int>(i));
    if (i > 0) {
      EXPECT_LE(std::tie(fs[i - 1].line, fs[i - 1].vuln_type), std::tie(fs[i].line, fs[i].vuln_type));
    }
  }
  EXPECT_EQ(std::count_if(fs.begin(), fs.end(), [](const Finding& f) { return f.vuln_type == VulnType::AccessControl; }), 1);
}

TEST(Detect, CompilerAndBuiltinAgreeOnSeededCorpus) {
  for (const auto& dir : pair_dirs("seeded")) {
    for (const char* side : {"v1.sol", "v2.sol"}) {
      const std::string src = read_text(dir / side);
      EXPECT_EQ(brief(detect(load_ast(dir / side), src)), brief(scan(src))) << dir.filename() << "/" << side;
    }
  }
}

// --- Storage layout ----------------------------------------------------------------

namespace {

StorageSlotLayout layout_of(const std::string& body) {
  const std::string src = std::string(kHead) + "contract L {\n" + body + "}\n";
  return compute_storage_layout(parse_source(src));
}

std::vector<std::tuple<int, int, std::string>> slots(const StorageSlotLayout& l) {
  std::vector<std::tuple<int, int, std::string>> out;
  for (const StorageEntry& e : l.entries) out.emplace_back(e.slot, e.offset, e.name);
  return out;
}

using SlotList = std::vector<std::tuple<int, int, std::string>>;

}  // namespace

TEST(StorageLayout, PackingExamples) {
  EXPECT_EQ(slots(layout_of("uint256 a;\naddress b;\n")), (SlotList{{0, 0, "a"}, {1, 0, "b"}}));
  EXPECT_EQ(slots(layout_of("uint128 a;\nuint128 b;\n")), (SlotList{{0, 0, "a"}, {0, 16, "b"}}));
  EXPECT_EQ(slots(layout_of("address a;\nbool b;\nuint64 c;\nuint96 d;\n")),
            (SlotList{{0, 0, "a"}, {0, 20, "b"}, {0, 21, "c"}, {1, 0, "d"}}));
  EXPECT_EQ(slots(layout_of("uint8 a;\nmapping(address => uint256) m;\nuint8 b;\n")),
            (SlotList{{0, 0, "a"}, {1, 0, "m"}, {2, 0, "b"}}));
  EXPECT_EQ(slots(layout_of("uint256[3] a;\nuint8[40] b;\nbool c;\n")),
            (SlotList{{0, 0, "a"}, {3, 0, "b"}, {5, 0, "c"}}));
  EXPECT_EQ(slots(layout_of("uint256 constant K = 1;\naddress immutable I;\nuint256 a;\n")), (SlotList{{0, 0, "a"}}));
}

TEST(StorageLayout, CanonicalTypes) {
  EXPECT_EQ(canonical_type("uint").name, "uint256");
  EXPECT_EQ(canonical_type("address payable").size, 20);
  EXPECT_EQ(canonical_type("bytes4").size, 4);
  EXPECT_EQ(canonical_type("contract IERC20").size, 20);
  EXPECT_EQ(canonical_type("enum X.E").size, 1);
  EXPECT_FALSE(canonical_type("string storage ref").value_type);
  EXPECT_EQ(canonical_type("uint16[5]").slots, 1);
  EXPECT_EQ(canonical_type("uint256[5]").slots, 5);
}

TEST(StorageLayout, InheritanceIsBaseFirst) {
  const std::string src = std::string(kHead) +
                          "contract A { uint256 a; }\ncontract B is A { address b; }\n"
                          "contract C is B { bool c; }\n";
  EXPECT_EQ(slots(compute_storage_layout(parse_source(src))), (SlotList{{0, 0, "a"}, {1, 0, "b"}, {1, 20, "c"}}));
  EXPECT_EQ(slots(compute_storage_layout(parse_source(src), std::string("B"))), (SlotList{{0, 0, "a"}, {1, 0, "b"}}));
}

TEST(StorageLayout, StructsAreFlaggedUnknown) {
  const auto l = layout_of("struct S { uint256 x; }\nS s;\nuint256 y;\n");
  ASSERT_EQ(l.entries.size(), 2u);
  EXPECT_TRUE(l.entries[0].unknown_type);
  EXPECT_FALSE(l.warnings.empty());
  EXPECT_EQ(l.entries[1].slot, 1);
}

TEST(StorageCollision, SwapProducesHighFindings) {
  const auto v1 = layout_of("uint256 a;\naddress b;\n");
  const auto v2 = layout_of("address b;\nuint256 a;\n");
  const auto fs = compare_layouts(v1, v2);
  ASSERT_EQ(fs.size(), 2u);
  for (const Finding& f : fs) {
    EXPECT_EQ(f.vuln_type, VulnType::StorageCollision);
    EXPECT_EQ(f.severity, Severity::High);
  }
  EXPECT_EQ(fs[0].line, 3);  // v2 line of `address b`
  EXPECT_EQ(fs[1].line, 4);
}

TEST(StorageCollision, RenameIsMediumAndAppendIsSafe) {
  const auto fs = compare_layouts(layout_of("uint256 a;\n"), layout_of("uint256 renamed;\n"));
  ASSERT_EQ(fs.size(), 1u);
  EXPECT_EQ(fs[0].severity, Severity::Medium);
  EXPECT_TRUE(compare_layouts(layout_of("uint256 a;\n"), layout_of("uint256 a;\naddress appended;\n")).empty());
}

TEST(StorageCollision, SelfComparisonIsEmptyOverRandomLayouts) {
  const std::vector<std::string> types = {"uint8",   "uint16", "uint64", "uint128", "uint256",     "address",
                                          "bool",    "bytes4", "bytes32", "string", "uint256[2]",  "uint8[33]",
                                          "mapping(address => uint256)", "int24", "bytes"};
  Rng rng(2024);
  for (int round = 0; round < 200; ++round) {
    std::string body;
    const int n = std::uniform_int_distribution<int>(0, 12)(rng);
    for (int i = 0; i < n; ++i)
      body += types[std::uniform_int_distribution<std::size_t>(0, types.size() - 1)(rng)] + " v" + std::to_string(i) + ";\n";
    const auto l = layout_of(body);
    EXPECT_TRUE(compare_layouts(l, l).empty()) << body;
    for (std::size_t i = 1; i < l.entries.size(); ++i) {
      const auto& p = l.entries[i - 1];
      const auto& c = l.entries[i];
      EXPECT_TRUE(c.slot > p.slot || (c.slot == p.slot && c.offset >= p.offset + p.size)) << body;
      EXPECT_LE(c.offset + c.size, 32);
    }
  }
}
