#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "proxydiff/pipeline.hpp"

namespace proxydiff {

/// Outcome of one analyze/trace run. Exit codes: 0 success, 1 error,
/// 2 quality gate failed or a side is not verified, 3 insufficient history.
struct RunResult {
  int exit_code = 0;
  std::optional<nlohmann::json> report;
  std::string error;
  int ingestions = 0;
};

RunResult run_analyze(const std::string& v1_path, const std::string& v2_path, const PipelineOptions& options);
RunResult run_trace(const std::string& proxy, const std::optional<std::string>& fixtures,
                    const ExplorerConfig& explorer, const PipelineOptions& options,
                    std::optional<std::size_t> pair_index = std::nullopt);

struct BatchEntry {
  std::string name;
  std::string v1_path;  // pair entries
  std::string v2_path;
  std::string proxy;  // proxy entries (traced)
  bool is_proxy() const { return !proxy.empty(); }
};

/// Manifest formats:
///   JSON: [{"name"?, "v1", "v2"} | {"name"?, "proxy"}] or {"entries": [...]}
///   text: one "V1.sol V2.sol" or "proxy 0xADDR" per line; '#' starts a comment
/// Relative paths resolve against the manifest's directory. Malformed entries
/// are kept with an empty payload so they surface as per-entry failures.
std::vector<BatchEntry> parse_manifest(const std::string& path);

struct BatchOptions {
  PipelineOptions pipeline;
  std::string out_dir;
  int jobs = 1;
  std::optional<std::string> fixtures;  // for proxy entries
  ExplorerConfig explorer;
};

struct BatchOutcome {
  nlohmann::json summary;
  int succeeded = 0;
  int failed = 0;
};

/// Runs every entry on a worker pool, writes `<out_dir>/<name>.json` per entry
/// and `<out_dir>/summary.json`. Entry failures never abort the batch.
BatchOutcome run_batch(const std::vector<BatchEntry>& entries, const BatchOptions& options);

}  // namespace proxydiff
