#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "proxydiff/pipeline.hpp"

namespace proxydiff {

inline constexpr std::string_view kToolName = "proxydiff";
inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr std::string_view kReportSchemaVersion = "1.0";

/// Full audit report. Everything except the "run" section is a pure function
/// of the inputs and options.
nlohmann::json build_report(const AnalysisResult& result, const std::optional<CacheStats>& cache_stats = {});

/// Report for a trace that stopped before analysis (e.g. an unverified side).
nlohmann::json build_trace_only_report(const TraceInfo& trace, const std::vector<std::string>& warnings);

nlohmann::json to_json(const TraceInfo& trace);
nlohmann::json to_json(const Finding& finding);
nlohmann::json to_json(const ChangeRecord& change);
nlohmann::json to_json(const MatchPair& match);

/// The report minus its "run" section, for reproducibility comparisons.
nlohmann::json without_run_section(nlohmann::json report);

/// Pretty-printed with a trailing newline; throws Error{Io}.
void write_json_file(const std::string& path, const nlohmann::json& doc);

}  // namespace proxydiff
