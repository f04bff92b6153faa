#include "proxydiff/report.hpp"

#include <filesystem>
#include <fstream>

#include "proxydiff/error.hpp"

namespace proxydiff {

using nlohmann::json;

namespace {

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

json version_meta(const LoadedVersion& v) {
  const QualityMetrics& q = v.ast.quality;
  return {
      {"tag", v.tag},
      {"path", v.path},
      {"source_hash", v.ast.source_hash},
      {"engine", v.engine},
      {"node_count", v.ast.node_count()},
      {"quality",
       {{"node_completeness", q.node_completeness},
        {"structural_integrity", q.structural_integrity},
        {"semantic_completeness", q.semantic_completeness}}},
      {"usable", is_usable(q)},
  };
}

json layout_json(const StorageSlotLayout& layout) {
  json entries = json::array();
  for (const StorageEntry& e : layout.entries)
    entries.push_back({{"slot", e.slot},
                       {"offset", e.offset},
                       {"size", e.size},
                       {"type", e.type},
                       {"name", e.name},
                       {"contract", e.contract},
                       {"line", e.line},
                       {"unknown_type", e.unknown_type}});
  return entries;
}

json header() {
  return {{"name", kToolName}, {"version", kToolVersion}, {"keyword_table_version", kKeywordTableVersion}};
}

}  // namespace

json to_json(const Finding& f) {
  return {
      {"id", f.finding_id},
      {"type", to_string(f.vuln_type)},
      {"severity", to_string(f.severity)},
      {"line", f.line},
      {"function", optional_string(f.function_name)},
      {"contract", optional_string(f.contract_name)},
      {"description", f.description},
      {"keywords", f.keywords},
      {"detector", f.detector_id},
  };
}

json to_json(const ChangeRecord& c) {
  return {
      {"id", c.change_id},
      {"op", to_string(c.op)},
      {"side", c.side == Side::V1 ? "v1" : "v2"},
      {"line", c.line},
      {"end_line", c.span.end_line},
      {"function", optional_string(c.function_name)},
      {"contract", optional_string(c.contract_name)},
      {"node_kind", c.node_kind},
      {"identifiers", c.identifiers},
      {"snippet", c.snippet},
  };
}

json to_json(const MatchPair& m) {
  const SemanticFeatures& f = m.features;
  return {
      {"change_id", m.change_id},
      {"finding_id", m.finding_id},
      {"scores",
       {{"position", m.scores.position},
        {"pattern", m.scores.pattern},
        {"semantic", m.scores.semantic},
        {"type", m.scores.type}}},
      {"features",
       {{"function_name", f.function_name},
        {"node_type", f.node_type},
        {"keyword_overlap", f.keyword_overlap},
        {"op_similarity", f.op_similarity},
        {"trait_match", f.trait_match},
        {"impact_area", f.impact_area}}},
      {"confidence", m.confidence},
  };
}

json to_json(const TraceInfo& t) {
  json history = json::array();
  for (const VersionRecord& r : t.history)
    history.push_back({{"implementation", r.implementation_address},
                       {"version", optional_string(r.version_string)},
                       {"name", optional_string(r.contract_name)},
                       {"block", r.block_number},
                       {"timestamp", r.timestamp},
                       {"verified", r.source_text.has_value()}});
  return {
      {"proxy", t.proxy},
      {"sort_mode", t.sort_mode},
      {"history", history},
      {"v1", optional_string(t.v1_address)},
      {"v2", optional_string(t.v2_address)},
      {"unverified", t.unverified},
  };
}

json build_report(const AnalysisResult& r, const std::optional<CacheStats>& cache_stats) {
  json report;
  report["schema_version"] = kReportSchemaVersion;
  report["tool"] = header();
  report["pair"] = r.trace ? "proxy " + r.trace->proxy : r.v1.path + " -> " + r.v2.path;
  report["v1"] = version_meta(r.v1);
  report["v2"] = version_meta(r.v2);
  report["warnings"] = r.warnings;

  json changes = json::array();
  for (const ChangeRecord& c : r.changes) changes.push_back(to_json(c));
  report["changes"] = changes;

  json v1f = json::array();
  json v2f = json::array();
  for (const Finding& f : r.v1_findings) v1f.push_back(to_json(f));
  for (const Finding& f : r.v2_findings) v2f.push_back(to_json(f));
  report["findings"] = {{"v1", v1f}, {"v2", v2f}};
  report["storage"] = {{"v1", layout_json(r.v1_layout)}, {"v2", layout_json(r.v2_layout)}};

  json matches = json::array();
  for (const MatchPair& m : r.matches) matches.push_back(to_json(m));
  report["matches"] = matches;

  json rows = json::array();
  for (const TypeClassification& row : r.classification)
    rows.push_back({{"type", to_string(row.vuln_type)},
                    {"v1_present", row.v1_present},
                    {"v2_present", row.v2_present},
                    {"behavior", to_string(row.behavior)},
                    {"conclusion", conclusion(row.behavior)},
                    {"v1_findings", row.v1_findings},
                    {"v2_findings", row.v2_findings},
                    {"needs_analysis", row.behavior == UpgradeBehavior::InvalidUpgrade}});
  json counts = json::object();
  for (const auto& [behavior, n] : r.summary.behavior_counts) counts[std::string(to_string(behavior))] = n;
  report["classification"] = {
      {"rows", rows},
      {"verdict", to_string(r.summary.verdict)},
      {"verdict_conclusion", conclusion(r.summary.verdict)},
      {"behavior_counts", counts},
      {"severity_distribution",
       {{"High", r.summary.severity.high}, {"Medium", r.summary.severity.medium}, {"Low", r.summary.severity.low}}},
  };

  json attributions = json::array();
  for (const Attribution& a : r.attributions) {
    json entry = {{"change_id", a.change_id},
                  {"finding_id", a.finding_id},
                  {"status", a.result ? "ok" : "error"},
                  {"prompt", a.prompt},
                  {"raw_response", a.raw_response}};
    if (a.result) {
      entry["result"] = {{"root_cause", a.result->root_cause},
                         {"security_impact", a.result->security_impact},
                         {"change_vuln_correlation", a.result->change_vuln_correlation},
                         {"risk_labels", a.result->risk_labels},
                         {"remediation", a.result->remediation}};
    }
    if (a.error) entry["error"] = *a.error;
    attributions.push_back(entry);
  }
  report["attributions"] = attributions;
  json patterns = json::array();
  for (const auto& [label, count] : r.risk_patterns) patterns.push_back({{"label", label}, {"count", count}});
  report["risk_patterns"] = patterns;
  report["trace"] = r.trace ? to_json(*r.trace) : json(nullptr);

  json run = {
      {"timings_ms",
       {{"load", r.timings.load_ms},
        {"diff", r.timings.diff_ms},
        {"detect", r.timings.detect_ms},
        {"match", r.timings.match_ms},
        {"attrib", r.timings.attrib_ms},
        {"total", r.timings.total_ms}}},
      {"ingestions", r.ingestions},
      {"cache_hits", {{"v1", r.v1.cache_hit}, {"v2", r.v2.cache_hit}}},
  };
  if (cache_stats)
    run["cache"] = {{"hits", cache_stats->hits},
                    {"misses", cache_stats->misses},
                    {"evictions", cache_stats->evictions},
                    {"corrupt", cache_stats->corrupt},
                    {"hit_rate", cache_stats->hit_rate()}};
  report["run"] = run;
  return report;
}

json build_trace_only_report(const TraceInfo& trace, const std::vector<std::string>& warnings) {
  json report;
  report["schema_version"] = kReportSchemaVersion;
  report["tool"] = header();
  report["pair"] = "proxy " + trace.proxy;
  report["warnings"] = warnings;
  report["trace"] = to_json(trace);
  return report;
}

json without_run_section(json report) {
  report.erase("run");
  return report;
}

void write_json_file(const std::string& path, const json& doc) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace proxydiff
