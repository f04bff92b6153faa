#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "proxydiff/batch.hpp"
#include "proxydiff/cache.hpp"
#include "proxydiff/error.hpp"
#include "proxydiff/report.hpp"
#include "test_support.hpp"

using namespace proxydiff;
using namespace testing_support;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kIntroduceProxy = "0x1111111111111111111111111111111111111111";
const std::string kSingleImplProxy = "0x2222222222222222222222222222222222222222";
const std::string kUnverifiedProxy = "0x3333333333333333333333333333333333333333";

Ast small_ast(const char* name) { return load_ast(fixture(std::string("small/") + name)); }

std::string cache_key(int i) { return AstCache::key_for("compiler-json", std::string(64, static_cast<char>('a' + i))); }

json read_json(const fs::path& p) { return json::parse(read_text(p)); }

/// Writes a manifest over the first `pairs` seeded fixtures plus `extra` lines.
fs::path write_seeded_manifest(const fs::path& dir, std::size_t pairs, const std::vector<std::string>& extra = {}) {
  const auto path = dir / "manifest.txt";
  std::ofstream out(path);
  out << "# seeded corpus\n";
  const auto dirs = pair_dirs("seeded");
  for (std::size_t i = 0; i < pairs && i < dirs.size(); ++i)
    out << (dirs[i] / "v1.sol").string() << " " << (dirs[i] / "v2.sol").string() << "\n";
  for (const auto& line : extra) out << line << "\n";
  return path;
}

void expect_references_resolve(const json& report) {
  std::set<int> changes, findings;
  for (const json& c : report["changes"]) changes.insert(c["id"].get<int>());
  for (const json& f : report["findings"]["v1"]) findings.insert(f["id"].get<int>());
  for (const json& f : report["findings"]["v2"]) findings.insert(f["id"].get<int>());
  for (const json& m : report["matches"]) {
    EXPECT_TRUE(changes.count(m["change_id"].get<int>())) << m.dump();
    EXPECT_TRUE(findings.count(m["finding_id"].get<int>())) << m.dump();
  }
}

}  // namespace

// --- AST cache -----------------------------------------------------------------------

TEST(AstCache, PutThenGetIsByteIdentical) {
  TempDir dir("proxydiff-cache");
  const Ast ast = small_ast("clean.sol");
  AstCache cache(dir.path());
  cache.put(cache_key(0), ast);
  const auto hit = cache.get(cache_key(0));
  ASSERT_TRUE(hit.has_value());
  EXPECT_EQ(to_json(*hit).dump(), to_json(ast).dump());
  EXPECT_FALSE(cache.get(cache_key(1)).has_value());
  EXPECT_EQ(cache.stats().hits, 1u);
  EXPECT_EQ(cache.stats().misses, 1u);
  EXPECT_DOUBLE_EQ(cache.stats().hit_rate(), 0.5);
}

TEST(AstCache, PersistsAcrossInstances) {
  TempDir dir("proxydiff-cache");
  const Ast ast = small_ast("five_lines.sol");
  AstCache(dir.path()).put(cache_key(2), ast);
  AstCache reopened(dir.path());
  EXPECT_EQ(reopened.size(), 1u);
  ASSERT_TRUE(reopened.get(cache_key(2)).has_value());
}

TEST(AstCache, CapThreeEvictsLeastRecentlyUsed) {
  TempDir dir("proxydiff-cache");
  const Ast ast = small_ast("five_lines.sol");
  AstCache cache(dir.path(), 3);
  for (int i = 0; i < 4; ++i) cache.put(cache_key(i), ast);
  EXPECT_EQ(cache.size(), 3u);
  EXPECT_EQ(cache.stats().evictions, 1u);
  EXPECT_FALSE(cache.get(cache_key(0)).has_value());
  EXPECT_FALSE(fs::exists(dir.path() / (cache_key(0) + ".ast.json")));
  for (int i = 1; i < 4; ++i) EXPECT_TRUE(cache.get(cache_key(i)).has_value()) << i;

  // Touching key 1 makes key 2 the oldest.
  ASSERT_TRUE(cache.get(cache_key(1)).has_value());
  cache.put(cache_key(4), ast);
  EXPECT_FALSE(cache.get(cache_key(2)).has_value());
  EXPECT_TRUE(cache.get(cache_key(1)).has_value());
}

TEST(AstCache, CorruptEntryIsMissAndDropped) {
  TempDir dir("proxydiff-cache");
  AstCache cache(dir.path());
  cache.put(cache_key(0), small_ast("clean.sol"));
  std::ofstream(dir.path() / (cache_key(0) + ".ast.json"), std::ios::trunc) << "{\"nodes\": [tru";
  EXPECT_FALSE(cache.get(cache_key(0)).has_value());
  EXPECT_EQ(cache.stats().corrupt, 1u);
  EXPECT_EQ(cache.size(), 0u);
  EXPECT_FALSE(fs::exists(dir.path() / (cache_key(0) + ".ast.json")));
}

TEST(AstCache, CorruptIndexStartsEmpty) {
  TempDir dir("proxydiff-cache");
  std::ofstream(dir.path() / "index.json") << "not json";
  AstCache cache(dir.path());
  EXPECT_EQ(cache.size(), 0u);
  cache.put(cache_key(0), small_ast("clean.sol"));
  EXPECT_TRUE(cache.get(cache_key(0)).has_value());
}

TEST(AstCache, RejectsPathLikeKeys) {
  TempDir dir("proxydiff-cache");
  AstCache cache(dir.path());
  EXPECT_THROW(cache.put("../escape", small_ast("clean.sol")), Error);
  EXPECT_FALSE(cache.get("../escape").has_value());
}

// --- analyze / trace -----------------------------------------------------------------

TEST(RunAnalyze, MissingFileIsExitOneWithoutReport) {
  const RunResult r = run_analyze("/nonexistent/v1.sol", fixture("small/clean.sol").string(), {});
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_FALSE(r.report.has_value());
  EXPECT_NE(r.error.find("/nonexistent/v1.sol"), std::string::npos);
}

TEST(RunAnalyze, IdenticalCleanFilesAreSmooth) {
  const std::string path = fixture("small/clean.sol").string();
  const RunResult r = run_analyze(path, path, {});
  ASSERT_EQ(r.exit_code, 0) << r.error;
  const json& rep = *r.report;
  EXPECT_TRUE(rep["changes"].empty());
  EXPECT_TRUE(rep["matches"].empty());
  EXPECT_EQ(rep["classification"]["verdict"], "SmoothUpgrade");
  for (const json& row : rep["classification"]["rows"]) EXPECT_EQ(row["behavior"], "SmoothUpgrade");
  EXPECT_EQ(schema_errors(rep), "");
}

TEST(RunAnalyze, SeededReentrancyReport) {
  const auto dir = fixture("seeded/s01_reentrancy_reorder");
  PipelineOptions opts;
  opts.attrib = AttribMode::Stub;
  const RunResult r = run_analyze((dir / "v1.sol").string(), (dir / "v2.sol").string(), opts);
  ASSERT_EQ(r.exit_code, 0) << r.error;
  const json& rep = *r.report;
  EXPECT_EQ(rep["classification"]["verdict"], "IntroduceVulnerability");
  bool strong = false;
  for (const json& m : rep["matches"]) strong = strong || m["confidence"].get<double>() > 0.6;
  EXPECT_TRUE(strong);
  double total = 0;
  for (const auto& [k, v] : rep["classification"]["severity_distribution"].items()) total += v.get<double>();
  EXPECT_NEAR(total, 100.0, 1e-6);
  EXPECT_FALSE(rep["attributions"].empty());
  expect_references_resolve(rep);
  EXPECT_EQ(schema_errors(rep), "");
}

TEST(RunAnalyze, EverySuccessfulCorpusReportValidates) {
  for (const auto& group : {"diff", "seeded"}) {
    for (const auto& dir : pair_dirs(group)) {
      const RunResult r = run_analyze((dir / "v1.sol").string(), (dir / "v2.sol").string(), {});
      ASSERT_NE(r.exit_code, 1) << dir << ": " << r.error;
      expect_references_resolve(*r.report);
      EXPECT_EQ(schema_errors(*r.report), "") << dir;
    }
  }
}

TEST(RunTrace, ExitCodesFollowHistoryState) {
  const std::string fixtures = fixture("trace").string();
  const RunResult full = run_trace(kIntroduceProxy, fixtures, {}, {});
  ASSERT_EQ(full.exit_code, 0) << full.error;
  EXPECT_EQ((*full.report)["classification"]["verdict"], "IntroduceVulnerability");
  EXPECT_EQ((*full.report)["trace"]["history"].size(), 3u);
  EXPECT_EQ(schema_errors(*full.report), "");

  const RunResult single = run_trace(kSingleImplProxy, fixtures, {}, {});
  EXPECT_EQ(single.exit_code, 3);
  EXPECT_FALSE(single.report.has_value());

  const RunResult unverified = run_trace(kUnverifiedProxy, fixtures, {}, {});
  EXPECT_EQ(unverified.exit_code, 2);
  ASSERT_TRUE(unverified.report.has_value());
  ASSERT_FALSE((*unverified.report)["warnings"].empty());
  EXPECT_EQ((*unverified.report)["warnings"][0].get<std::string>().rfind("NotVerified", 0), 0u);
  EXPECT_EQ(schema_errors(*unverified.report), "");

  EXPECT_EQ(run_trace("0x4444444444444444444444444444444444444444", fixtures, {}, {}).exit_code, 1);
}

// --- manifest / batch ----------------------------------------------------------------

TEST(Manifest, JsonAndLineFormats) {
  TempDir dir("proxydiff-manifest");
  std::ofstream(dir.path() / "m.json")
      << R"({"entries": [{"name": "a/b", "v1": "x/v1.sol", "v2": "x/v2.sol"}, {"proxy": "0xAB"}, 7]})";
  const auto j = parse_manifest((dir.path() / "m.json").string());
  ASSERT_EQ(j.size(), 3u);
  EXPECT_EQ(j[0].name, "a_b");
  EXPECT_EQ(j[0].v1_path, (dir.path() / "x/v1.sol").string());
  EXPECT_TRUE(j[1].is_proxy());
  EXPECT_EQ(j[1].name, "001-0xAB");
  EXPECT_TRUE(j[2].v1_path.empty() && !j[2].is_proxy());

  std::ofstream(dir.path() / "m.txt") << "# c\n\n/abs/v1.sol rel/v2.sol  # trailing\nproxy 0x12\nlonely\n";
  const auto t = parse_manifest((dir.path() / "m.txt").string());
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0].v1_path, "/abs/v1.sol");
  EXPECT_EQ(t[0].v2_path, (dir.path() / "rel/v2.sol").string());
  EXPECT_EQ(t[0].name, "000-rel_v2");
  EXPECT_EQ(t[1].proxy, "0x12");
  EXPECT_TRUE(t[2].v1_path.empty());

  std::ofstream(dir.path() / "bad.json") << "[{";
  EXPECT_THROW(parse_manifest((dir.path() / "bad.json").string()), Error);
  EXPECT_THROW(parse_manifest((dir.path() / "missing.txt").string()), Error);
}

TEST(Batch, MalformedEntryIsIsolated) {
  TempDir dir("proxydiff-batch");
  const auto manifest = write_seeded_manifest(dir.path(), 9, {"only-one-path.sol"});
  BatchOptions opts;
  opts.out_dir = (dir.path() / "out").string();
  opts.jobs = 4;
  const BatchOutcome outcome = run_batch(parse_manifest(manifest.string()), opts);
  EXPECT_EQ(outcome.succeeded, 9);
  EXPECT_EQ(outcome.failed, 1);
  int report_files = 0;
  for (const auto& entry : fs::directory_iterator(opts.out_dir))
    report_files += entry.path().filename() != "summary.json" && entry.path().extension() == ".json";
  EXPECT_EQ(report_files, 9);
  const json summary = read_json(fs::path(opts.out_dir) / "summary.json");
  EXPECT_EQ(summary, outcome.summary);
  ASSERT_EQ(summary["failures"].size(), 1u);
  EXPECT_EQ(summary["failures"][0]["entry"], "009-entry");
  EXPECT_EQ(summary["verdicts"]["IntroduceVulnerability"], 9);
}

TEST(Batch, EmptyManifestGivesEmptySummary) {
  TempDir dir("proxydiff-batch");
  std::ofstream(dir.path() / "empty.txt") << "# nothing\n";
  BatchOptions opts;
  opts.out_dir = (dir.path() / "out").string();
  const BatchOutcome outcome = run_batch(parse_manifest((dir.path() / "empty.txt").string()), opts);
  EXPECT_EQ(outcome.summary["entries"], 0);
  EXPECT_TRUE(outcome.summary["reports"].empty());
  EXPECT_TRUE(outcome.summary["failures"].empty());
  for (const auto& [k, v] : outcome.summary["verdicts"].items()) EXPECT_EQ(v, 0) << k;
  EXPECT_TRUE(fs::exists(fs::path(opts.out_dir) / "summary.json"));
  TempDir cli_out("proxydiff-cli");
  EXPECT_EQ(run_command(std::string(PROXYDIFF_CLI) + " batch '" + (dir.path() / "empty.txt").string() +
                        "' --report-out '" + cli_out.path().string() + "' 2>/dev/null"),
            0);
}

TEST(Batch, SummaryCountsEqualPerEntrySums) {
  TempDir dir("proxydiff-batch");
  const auto manifest = write_seeded_manifest(
      dir.path(), 10, {"proxy " + kIntroduceProxy, "proxy " + kSingleImplProxy, "proxy " + kUnverifiedProxy, "a b"});
  BatchOptions opts;
  opts.out_dir = (dir.path() / "out").string();
  opts.jobs = 3;
  opts.fixtures = fixture("trace").string();
  const auto entries = parse_manifest(manifest.string());
  const BatchOutcome outcome = run_batch(entries, opts);
  const json& s = outcome.summary;
  EXPECT_EQ(s["entries"], entries.size());
  EXPECT_EQ(outcome.succeeded + outcome.failed, static_cast<int>(entries.size()));
  EXPECT_EQ(s["failures"].size(), static_cast<std::size_t>(outcome.failed));

  std::map<std::string, int> verdicts;
  double high = 0, medium = 0, low = 0;
  int analyzed = 0;
  for (const json& item : s["reports"]) {
    if (item["verdict"].is_null()) continue;
    ++analyzed;
    ++verdicts[item["verdict"].get<std::string>()];
    const json rep = read_json(fs::path(opts.out_dir) / item["report"].get<std::string>());
    for (const json& f : rep["findings"]["v2"]) {
      high += f["severity"] == "High";
      medium += f["severity"] == "Medium";
      low += f["severity"] == "Low";
    }
  }
  EXPECT_EQ(analyzed, outcome.succeeded);
  int verdict_total = 0;
  for (const auto& [k, v] : s["verdicts"].items()) {
    EXPECT_EQ(v.get<int>(), verdicts[k]) << k;
    verdict_total += v.get<int>();
  }
  EXPECT_EQ(verdict_total, outcome.succeeded);
  const double total = high + medium + low;
  ASSERT_GT(total, 0);
  EXPECT_NEAR(s["severity_distribution"]["High"].get<double>(), 100 * high / total, 1e-9);
  EXPECT_NEAR(s["severity_distribution"]["Medium"].get<double>(), 100 * medium / total, 1e-9);
  EXPECT_NEAR(s["severity_distribution"]["Low"].get<double>(), 100 * low / total, 1e-9);
  // 10 pairs + the introducing proxy succeed; single-impl, unverified and "a b" do not.
  EXPECT_EQ(outcome.succeeded, 11);
  EXPECT_EQ(outcome.failed, 3);
}

TEST(Batch, WarmRerunHitsCacheAndMatchesColdReports) {
  TempDir dir("proxydiff-batch");
  const auto manifest = write_seeded_manifest(dir.path(), 10);
  const auto entries = parse_manifest(manifest.string());
  auto run = [&](const std::string& out) {
    AstCache cache(dir.path() / "cache");
    BatchOptions opts;
    opts.out_dir = (dir.path() / out).string();
    opts.jobs = 4;
    opts.pipeline.cache = &cache;
    return run_batch(entries, opts);
  };
  const BatchOutcome cold = run("cold");
  const BatchOutcome warm = run("warm");
  EXPECT_EQ(cold.summary["run"]["ingestions"], 20);
  EXPECT_EQ(warm.summary["run"]["ingestions"], 0);
  EXPECT_GT(warm.summary["run"]["cache"]["hits"].get<int>(), 0);
  EXPECT_DOUBLE_EQ(warm.summary["run"]["cache"]["hit_rate"].get<double>(), 1.0);
  for (const BatchEntry& e : entries) {
    const json a = read_json(dir.path() / "cold" / (e.name + ".json"));
    const json b = read_json(dir.path() / "warm" / (e.name + ".json"));
    EXPECT_EQ(without_run_section(a), without_run_section(b)) << e.name;
    EXPECT_EQ(schema_errors(b), "") << e.name;
  }
}

// --- CLI binary ----------------------------------------------------------------------

TEST(Cli, ExitCodes) {
  TempDir out("proxydiff-cli");
  const std::string cli = PROXYDIFF_CLI;
  const std::string fixtures = " --fixtures '" + fixture("trace").string() + "'";
  const std::string quiet = " >/dev/null 2>&1";
  const auto dir = fixture("seeded/s04_tx_origin");
  const auto report = out.path() / "r.json";
  EXPECT_EQ(run_command(cli + " analyze '" + (dir / "v1.sol").string() + "' '" + (dir / "v2.sol").string() +
                        "' --attrib stub --no-enhanced-matching --threshold 0.5 --report-out '" + report.string() +
                        "'" + quiet),
            0);
  const json rep = read_json(report);
  EXPECT_EQ(rep["classification"]["verdict"], "IntroduceVulnerability");
  EXPECT_EQ(schema_errors(rep), "");
  for (const json& m : rep["matches"]) {
    EXPECT_EQ(m["confidence"].get<double>(),
              0.3 * m["scores"]["position"].get<double>() + 0.25 * m["scores"]["pattern"].get<double>() +
                  0.15 * m["scores"]["type"].get<double>());
    EXPECT_GT(m["confidence"].get<double>(), 0.5);
  }

  EXPECT_EQ(run_command(cli + " analyze /nonexistent.sol /nonexistent2.sol" + quiet), 1);
  EXPECT_EQ(run_command(cli + " trace " + kIntroduceProxy + fixtures + quiet), 0);
  EXPECT_EQ(run_command(cli + " trace " + kSingleImplProxy + fixtures + quiet), 3);
  EXPECT_EQ(run_command(cli + " trace " + kUnverifiedProxy + fixtures + quiet), 2);
  EXPECT_NE(run_command(cli + " analyze only-one.sol" + quiet), 0);
  EXPECT_NE(run_command(cli + " analyze a.sol b.sol --threshold 2" + quiet), 0);
  EXPECT_NE(run_command(cli + " analyze a.sol b.sol --attrib maybe" + quiet), 0);
}
