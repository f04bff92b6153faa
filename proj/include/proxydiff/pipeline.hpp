#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "proxydiff/cache.hpp"
#include "proxydiff/change_match.hpp"
#include "proxydiff/explorer_client.hpp"
#include "proxydiff/llm_attrib.hpp"
#include "proxydiff/tree_diff.hpp"
#include "proxydiff/upgrade_classify.hpp"
#include "proxydiff/upgrade_trace.hpp"
#include "proxydiff/vuln_detect.hpp"

namespace proxydiff {

/// One side of an analysis: the source text plus, when available, the
/// compiler AST for it. Without an AST the built-in parser is used.
struct VersionInput {
  std::string tag;   // "v1" / "v2"
  std::string path;  // for reporting only
  std::string source;
  std::optional<nlohmann::json> ast_document;
};

/// Reads `path` and a sibling `<stem>.ast.json` if one exists.
VersionInput load_version_file(const std::string& path, std::string tag);

struct LoadedVersion {
  std::string tag;
  std::string path;
  std::string source;
  Ast ast;
  std::string engine;  // "compiler-json" or "builtin-parser"
  bool cache_hit = false;
};

/// Ingests (or fetches from the cache) the AST of one version. Increments
/// `*ingestions` when a document was actually parsed.
LoadedVersion load_version(const VersionInput& input, AstCache* cache, int* ingestions = nullptr);

enum class AttribMode { Off, Stub, Http };

struct PipelineOptions {
  DiffOptions diff;
  MatchOptions match;
  AttribMode attrib = AttribMode::Off;
  LlmBackend* backend = nullptr;  // required for AttribMode::Http
  int llm_jobs = 4;
  AstCache* cache = nullptr;
};

struct Attribution {
  int change_id = 0;
  int finding_id = 0;
  std::string prompt;
  std::optional<AttributionResult> result;
  std::optional<std::string> error;
  std::string raw_response;
};

struct StageTimings {
  double load_ms = 0;
  double diff_ms = 0;
  double detect_ms = 0;
  double match_ms = 0;
  double attrib_ms = 0;
  double total_ms = 0;
};

struct TraceInfo {
  std::string proxy;
  std::vector<VersionRecord> history;  // dual-sorted
  std::string sort_mode;               // "semver" or "timestamp"
  std::optional<std::string> v1_address;
  std::optional<std::string> v2_address;
  std::vector<std::string> unverified;
};

struct AnalysisResult {
  LoadedVersion v1;
  LoadedVersion v2;
  std::vector<std::string> warnings;
  bool quality_ok = true;
  DiffResult diff;
  std::vector<ChangeRecord> changes;
  std::vector<Finding> v1_findings;
  std::vector<Finding> v2_findings;  // ids continue after v1's
  StorageSlotLayout v1_layout;
  StorageSlotLayout v2_layout;
  std::vector<MatchPair> matches;
  std::vector<TypeClassification> classification;
  RiskSummary summary;
  std::vector<Attribution> attributions;
  std::vector<std::pair<std::string, int>> risk_patterns;
  std::optional<TraceInfo> trace;
  int ingestions = 0;
  StageTimings timings;
};

AnalysisResult analyze(const VersionInput& v1, const VersionInput& v2, const PipelineOptions& options);

struct TraceOutcome {
  TraceInfo info;
  std::optional<VersionInput> v1;  // absent when not verified
  std::optional<VersionInput> v2;
};

/// Reconstructs the proxy's history and fetches the selected pair. Offline
/// when `fixtures_root` is set (reads `<root>/<proxy>/history.json`).
/// Throws Error{InsufficientHistory}.
TraceOutcome trace_proxy(const std::string& proxy, const std::optional<std::string>& fixtures_root,
                         ExplorerConfig explorer, std::optional<std::size_t> pair_index = std::nullopt);

}  // namespace proxydiff
