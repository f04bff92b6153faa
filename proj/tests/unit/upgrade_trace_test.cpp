#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>

#include "mock_server.hpp"
#include "proxydiff/error.hpp"
#include "proxydiff/explorer_client.hpp"
#include "proxydiff/pipeline.hpp"
#include "proxydiff/upgrade_trace.hpp"
#include "test_support.hpp"

using namespace proxydiff;
using namespace testing_support;
using nlohmann::json;

namespace {

const std::string kImplA = "0x" + std::string(40, 'a');
const std::string kImplB = "0x00000000000000000000000000000000000000bB";

RawLog upgraded(const std::string& impl, std::uint64_t block) {
  RawLog l;
  l.address = "0x" + std::string(40, '1');
  l.topics = {std::string(kUpgradedTopic), "0x000000000000000000000000" + impl.substr(2)};
  l.block_number = block;
  l.timestamp = 1000 + block;
  return l;
}

VersionRecord record(std::optional<std::string> version, std::uint64_t ts, std::string addr = "") {
  VersionRecord r;
  r.version_string = std::move(version);
  r.timestamp = ts;
  r.block_number = ts;
  r.implementation_address = addr.empty() ? "0x" + std::to_string(ts) : addr;
  return r;
}

std::vector<std::string> versions(const std::vector<VersionRecord>& rs) {
  std::vector<std::string> out;
  for (const auto& r : rs) out.push_back(r.version_string.value_or("-"));
  return out;
}

void expect_error(ErrorCode code, const std::function<void()>& fn) {
  try {
    fn();
    ADD_FAILURE() << "no error thrown";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(UpgradeEvents, TopicAndDataAddresses) {
  RawLog data_variant = upgraded(kImplB, 5);
  data_variant.topics.resize(1);
  data_variant.data = "0x000000000000000000000000" + kImplB.substr(2);
  const auto events = parse_upgrade_events({upgraded(kImplA, 9), data_variant});
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(events[0].implementation_address, "0x00000000000000000000000000000000000000bb");
  EXPECT_EQ(events[0].block_number, 5u);
  EXPECT_EQ(events[1].implementation_address, kImplA);
}

TEST(UpgradeEvents, OtherTopicsIgnoredMalformedRejected) {
  RawLog other = upgraded(kImplA, 1);
  other.topics[0] = "0x" + std::string(64, 'f');
  EXPECT_TRUE(parse_upgrade_events({other}).empty());
  RawLog short_topic = upgraded(kImplA, 1);
  short_topic.topics[1] = "0x1234";
  expect_error(ErrorCode::MalformedLog, [&] { parse_upgrade_events({short_topic}); });
  RawLog no_address = upgraded(kImplA, 1);
  no_address.topics.resize(1);
  expect_error(ErrorCode::MalformedLog, [&] { parse_upgrade_events({no_address}); });
}

TEST(RawLogJson, HexAndDecimalNumbers) {
  const RawLog a = raw_log_from_json({{"topics", json::array()}, {"blockNumber", "0x1a"}, {"timeStamp", "0x10"}});
  EXPECT_EQ(a.block_number, 26u);
  EXPECT_EQ(a.timestamp, 16u);
  const RawLog b = raw_log_from_json({{"topics", json::array()}, {"blockNumber", 42}, {"timestamp", "77"}});
  EXPECT_EQ(b.block_number, 42u);
  EXPECT_EQ(b.timestamp, 77u);
}

TEST(Address, Normalization) {
  EXPECT_EQ(normalize_address("0xABCDEFabcdef0123456789012345678901234567"), "0xabcdefabcdef0123456789012345678901234567");
  EXPECT_FALSE(normalize_address("0x1234"));
  EXPECT_FALSE(normalize_address("abcdefabcdef0123456789012345678901234567zz"));
}

TEST(SemVer, Parsing) {
  EXPECT_EQ(parse_semver("v1.10.0"), (SemVer{1, 10, 0}));
  EXPECT_EQ(parse_semver("2.3"), (SemVer{2, 3, 0}));
  EXPECT_EQ(parse_semver("V0.0.7"), (SemVer{0, 0, 7}));
  EXPECT_FALSE(parse_semver("latest"));
  EXPECT_FALSE(parse_semver("1"));
  EXPECT_FALSE(parse_semver("1.2.3.4"));
  EXPECT_FALSE(parse_semver(""));
}

TEST(DualSort, SemanticOrderBeatsLexicographic) {
  const auto sorted = dual_sort({record("v1.10.0", 1), record("v1.2.0", 2)});
  EXPECT_EQ(versions(sorted), (std::vector<std::string>{"v1.2.0", "v1.10.0"}));
}

TEST(DualSort, FallsBackToTimestampWhenAnyVersionIsUnparseable) {
  const auto sorted = dual_sort({record("2.0.0", 30), record("beta", 10), record("1.0.0", 20)});
  EXPECT_EQ(versions(sorted), (std::vector<std::string>{"beta", "1.0.0", "2.0.0"}));
  const auto by_block = dual_sort({record(std::nullopt, 5), record(std::nullopt, 3)});
  EXPECT_EQ(by_block.front().timestamp, 3u);
}

// Property: dual_sort returns a permutation and is idempotent.
TEST(DualSort, PermutationAndIdempotence) {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 300; ++round) {
    std::vector<VersionRecord> input;
    const int n = static_cast<int>(rng() % 12);
    const bool all_semver = rng() % 2 == 0;
    for (int i = 0; i < n; ++i) {
      std::optional<std::string> v;
      if (all_semver || rng() % 3)
        v = (rng() % 2 ? "v" : "") + std::to_string(rng() % 3) + "." + std::to_string(rng() % 12) + "." +
            std::to_string(rng() % 4);
      else if (rng() % 2)
        v = "rc-" + std::to_string(i);
      input.push_back(record(v, rng() % 50, "0x" + std::to_string(i)));
    }
    const auto once = dual_sort(input);
    const auto twice = dual_sort(once);
    auto ids = [](const std::vector<VersionRecord>& rs) {
      std::vector<std::string> out;
      for (const auto& r : rs) out.push_back(r.implementation_address);
      return out;
    };
    auto a = ids(input), b = ids(once);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
    EXPECT_EQ(ids(once), ids(twice));
    for (std::size_t i = 1; i < once.size(); ++i) {
      const auto pa = once[i - 1].version_string ? parse_semver(*once[i - 1].version_string) : std::nullopt;
      const auto pb = once[i].version_string ? parse_semver(*once[i].version_string) : std::nullopt;
      const bool semver_mode = std::all_of(input.begin(), input.end(), [](const VersionRecord& r) {
        return r.version_string && parse_semver(*r.version_string);
      });
      if (semver_mode) {
        EXPECT_LE(*pa, *pb);
      } else {
        EXPECT_LE(once[i - 1].timestamp, once[i].timestamp);
      }
    }
  }
}

TEST(SelectPair, LastTwoOrExplicitIndex) {
  const std::vector<VersionRecord> h = {record("1.0.0", 1), record("1.1.0", 2), record("2.0.0", 3)};
  auto [a, b] = select_pair(h);
  EXPECT_EQ(a.version_string, "1.1.0");
  EXPECT_EQ(b.version_string, "2.0.0");
  auto [c, d] = select_pair(h, 0);
  EXPECT_EQ(c.version_string, "1.0.0");
  EXPECT_EQ(d.version_string, "1.1.0");
  expect_error(ErrorCode::InsufficientHistory, [&] { select_pair(h, 2); });
  expect_error(ErrorCode::InsufficientHistory, [&] { select_pair({h[0]}); });
  expect_error(ErrorCode::InsufficientHistory, [&] { select_pair({}); });
}

TEST(History, MetadataAttachesToEvents) {
  const auto events = parse_upgrade_events({upgraded(kImplA, 1), upgraded(kImplB, 2)});
  std::map<std::string, ImplementationMetadata> meta;
  meta[kImplA] = {std::string("1.0.0"), std::string("A")};
  const auto h = build_history(events, meta);
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h[0].version_string, "1.0.0");
  EXPECT_EQ(h[0].contract_name, "A");
  EXPECT_FALSE(h[1].version_string);
}

TEST(TraceFixtures, ThreeImplementationsSemverOrdered) {
  const TraceOutcome t = trace_proxy("0x1111111111111111111111111111111111111111", fixture("trace").string(), ExplorerConfig{});
  EXPECT_EQ(t.info.sort_mode, "semver");
  ASSERT_EQ(t.info.history.size(), 3u);
  EXPECT_EQ(versions(t.info.history), (std::vector<std::string>{"1.2.0", "1.9.0", "1.10.0"}));
  EXPECT_EQ(t.info.v2_address, "0x" + std::string("c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3"));
  ASSERT_TRUE(t.v1 && t.v2);
  EXPECT_TRUE(t.v2->ast_document.has_value());
  EXPECT_TRUE(t.info.unverified.empty());
}

TEST(TraceFixtures, SingleImplementationIsInsufficient) {
  expect_error(ErrorCode::InsufficientHistory, [] {
    trace_proxy("0x2222222222222222222222222222222222222222", fixture("trace").string(), ExplorerConfig{});
  });
}

TEST(TraceFixtures, UnverifiedSideIsRecorded) {
  const TraceOutcome t = trace_proxy("0x3333333333333333333333333333333333333333", fixture("trace").string(), ExplorerConfig{});
  EXPECT_EQ(t.info.sort_mode, "timestamp");
  EXPECT_TRUE(t.v1.has_value());
  EXPECT_FALSE(t.v2.has_value());
  EXPECT_EQ(t.info.unverified, std::vector<std::string>{"0xf6f6f6f6f6f6f6f6f6f6f6f6f6f6f6f6f6f6f6f6"});
}

// --- Explorer client over HTTP ---------------------------------------------------------

namespace {

ExplorerConfig mock_config(const MockServer& server, std::vector<std::chrono::milliseconds>* sleeps) {
  ExplorerConfig c;
  c.base_url = server.url();
  c.api_key = "test-key";
  c.timeout = std::chrono::seconds(5);
  c.sleep = [sleeps](std::chrono::milliseconds d) { sleeps->push_back(d); };
  return c;
}

json source_body(const std::string& code) {
  return {{"status", "1"}, {"message", "OK"}, {"result", json::array({{{"SourceCode", code}, {"ContractName", "Impl"}}})}};
}

}  // namespace

TEST(ExplorerClient, RetriesThrough429WithExponentialBackoff) {
  MockServer mock;
  std::atomic<int> calls{0};
  std::string seen_key;
  mock.server.Get("/api", [&](const httplib::Request& req, httplib::Response& res) {
    seen_key = req.get_param_value("apikey");
    if (++calls <= 3) {
      res.status = 429;
      return;
    }
    res.set_content(source_body("contract Impl {}").dump(), "application/json");
  });
  mock.start();
  std::vector<std::chrono::milliseconds> sleeps;
  ExplorerClient client(mock_config(mock, &sleeps));
  const ContractSource src = client.fetch_contract(kImplA);
  EXPECT_EQ(src.source, "contract Impl {}");
  EXPECT_EQ(src.metadata.name, "Impl");
  EXPECT_EQ(calls.load(), 4);
  EXPECT_EQ(client.attempts(), 4);
  EXPECT_EQ(seen_key, "test-key");
  EXPECT_EQ(sleeps, (std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(1000), std::chrono::milliseconds(2000),
                                                             std::chrono::milliseconds(4000)}));
  client.fetch_contract(kImplA);  // cached by address
  EXPECT_EQ(calls.load(), 4);
}

TEST(ExplorerClient, GivesUpAfterRetriesAndReportsNetworkError) {
  MockServer mock;
  std::atomic<int> calls{0};
  mock.server.Get("/api", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 503;
  });
  mock.start();
  std::vector<std::chrono::milliseconds> sleeps;
  ExplorerClient client(mock_config(mock, &sleeps));
  expect_error(ErrorCode::NetworkError, [&] { client.fetch_contract(kImplA); });
  EXPECT_EQ(calls.load(), 4);
}

TEST(ExplorerClient, RateLimitBodyIsRetried) {
  MockServer mock;
  std::atomic<int> calls{0};
  mock.server.Get("/api", [&](const httplib::Request&, httplib::Response& res) {
    if (++calls == 1) {
      res.set_content(R"({"status":"0","message":"NOTOK","result":"Max rate limit reached"})", "application/json");
      return;
    }
    res.set_content(source_body("contract Impl {}").dump(), "application/json");
  });
  mock.start();
  std::vector<std::chrono::milliseconds> sleeps;
  ExplorerClient client(mock_config(mock, &sleeps));
  EXPECT_NO_THROW(client.fetch_contract(kImplA));
  EXPECT_EQ(calls.load(), 2);
}

TEST(ExplorerClient, UnverifiedAndMultiFileSources) {
  MockServer mock;
  mock.server.Get("/api", [&](const httplib::Request& req, httplib::Response& res) {
    if (req.get_param_value("address") == kImplA) {
      res.set_content(source_body("").dump(), "application/json");
    } else {
      const json multi = {{"language", "Solidity"},
                          {"sources", {{"b.sol", {{"content", "contract B {}"}}}, {"a.sol", {{"content", "contract A {}\n"}}}}}};
      res.set_content(source_body("{" + multi.dump() + "}").dump(), "application/json");
    }
  });
  mock.start();
  std::vector<std::chrono::milliseconds> sleeps;
  ExplorerClient client(mock_config(mock, &sleeps));
  expect_error(ErrorCode::NotVerified, [&] { client.fetch_contract(kImplA); });
  EXPECT_EQ(client.fetch_contract(kImplB).source, "// File: a.sol\ncontract A {}\n// File: b.sol\ncontract B {}\n");
}

TEST(ExplorerClient, OnlineTraceUsesLogsEndpoint) {
  MockServer mock;
  mock.server.Get("/api", [&](const httplib::Request& req, httplib::Response& res) {
    if (req.get_param_value("module") == "logs") {
      EXPECT_EQ(req.get_param_value("topic0"), std::string(kUpgradedTopic));
      json logs = json::array();
      for (const auto& [impl, block] : {std::pair{kImplA, 10}, std::pair{kImplB, 20}})
        logs.push_back({{"address", "0x" + std::string(40, '1')},
                        {"topics", {std::string(kUpgradedTopic), "0x000000000000000000000000" + impl.substr(2)}},
                        {"data", "0x"},
                        {"blockNumber", "0x" + std::to_string(block)},
                        {"timeStamp", "0x" + std::to_string(block)},
                        {"transactionHash", "0x01"}});
      res.set_content(json{{"status", "1"}, {"result", logs}}.dump(), "application/json");
      return;
    }
    res.set_content(source_body("pragma solidity ^0.8.0;\ncontract Impl { uint256 x; }\n").dump(), "application/json");
  });
  mock.start();
  std::vector<std::chrono::milliseconds> sleeps;
  const TraceOutcome t = trace_proxy("0x" + std::string(40, '1'), std::nullopt, mock_config(mock, &sleeps));
  ASSERT_EQ(t.info.history.size(), 2u);
  EXPECT_EQ(t.info.v1_address, kImplA);
  ASSERT_TRUE(t.v2.has_value());
  EXPECT_FALSE(t.v2->ast_document.has_value());
}
