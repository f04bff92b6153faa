#include "proxydiff/batch.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "proxydiff/error.hpp"
#include "proxydiff/report.hpp"

namespace proxydiff {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::optional<CacheStats> stats_of(const PipelineOptions& options) {
  if (!options.cache) return std::nullopt;
  return options.cache->stats();
}

RunResult finish(AnalysisResult result, const PipelineOptions& options) {
  RunResult out;
  out.ingestions = result.ingestions;
  out.exit_code = result.quality_ok ? 0 : 2;
  out.report = build_report(result, stats_of(options));
  return out;
}

}  // namespace

RunResult run_analyze(const std::string& v1_path, const std::string& v2_path, const PipelineOptions& options) {
  RunResult out;
  try {
    return finish(analyze(load_version_file(v1_path, "v1"), load_version_file(v2_path, "v2"), options), options);
  } catch (const std::exception& e) {
    out.exit_code = 1;
    out.error = e.what();
  }
  return out;
}

RunResult run_trace(const std::string& proxy, const std::optional<std::string>& fixtures,
                    const ExplorerConfig& explorer, const PipelineOptions& options,
                    std::optional<std::size_t> pair_index) {
  RunResult out;
  try {
    TraceOutcome traced = trace_proxy(proxy, fixtures, explorer, pair_index);
    if (!traced.v1 || !traced.v2) {
      std::vector<std::string> warnings;
      for (const std::string& addr : traced.info.unverified)
        warnings.push_back("NotVerified: no verified source for implementation " + addr);
      out.exit_code = 2;
      out.error = "selected implementation pair is not fully verified";
      out.report = build_trace_only_report(traced.info, warnings);
      return out;
    }
    AnalysisResult result = analyze(*traced.v1, *traced.v2, options);
    result.trace = traced.info;
    for (const std::string& addr : traced.info.unverified)
      result.warnings.push_back("NotVerified: no verified source for implementation " + addr);
    return finish(std::move(result), options);
  } catch (const Error& e) {
    out.exit_code = e.code() == ErrorCode::InsufficientHistory ? 3 : 1;
    out.error = e.what();
  } catch (const std::exception& e) {
    out.exit_code = 1;
    out.error = e.what();
  }
  return out;
}

// --- Manifest ----------------------------------------------------------------------

namespace {

std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

std::string default_name(std::size_t index, const BatchEntry& e) {
  char prefix[16];
  std::snprintf(prefix, sizeof prefix, "%03zu-", index);
  if (e.is_proxy()) return prefix + e.proxy;
  const fs::path v2(e.v2_path);
  std::string stem = v2.stem().string();
  if (v2.has_parent_path() && !v2.parent_path().filename().empty()) stem = v2.parent_path().filename().string() + "_" + stem;
  return prefix + (stem.empty() ? std::string("entry") : stem);
}

std::string safe_name(std::string name) {
  for (char& c : name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  return name;
}

}  // namespace

std::vector<BatchEntry> parse_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read manifest " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const fs::path base = fs::path(path).parent_path();

  std::vector<BatchEntry> entries;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (text[first] == '[' || text[first] == '{')) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorCode::MalformedDocument, "manifest " + path + " is not valid JSON");
    const json& list = doc.is_object() ? doc.value("entries", json::array()) : doc;
    if (!list.is_array()) throw Error(ErrorCode::MalformedDocument, "manifest entries must be an array");
    for (const json& item : list) {
      BatchEntry e;
      if (item.is_object()) {
        e.name = item.value("name", "");
        e.v1_path = resolve(base, item.value("v1", ""));
        e.v2_path = resolve(base, item.value("v2", ""));
        e.proxy = item.value("proxy", "");
      }
      entries.push_back(std::move(e));
    }
  } else {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      std::istringstream words(line);
      std::vector<std::string> parts;
      for (std::string w; words >> w;) parts.push_back(w);
      if (parts.empty()) continue;
      BatchEntry e;
      if (parts.size() == 2 && parts[0] == "proxy") {
        e.proxy = parts[1];
      } else if (parts.size() == 2) {
        e.v1_path = resolve(base, parts[0]);
        e.v2_path = resolve(base, parts[1]);
      }
      entries.push_back(std::move(e));
    }
  }
  for (std::size_t i = 0; i < entries.size(); ++i)
    entries[i].name = safe_name(entries[i].name.empty() ? default_name(i, entries[i]) : entries[i].name);
  return entries;
}

// --- Batch -------------------------------------------------------------------------

BatchOutcome run_batch(const std::vector<BatchEntry>& entries, const BatchOptions& options) {
  std::vector<RunResult> results(entries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      const BatchEntry& e = entries[i];
      if (e.is_proxy()) {
        results[i] = run_trace(e.proxy, options.fixtures, options.explorer, options.pipeline);
      } else if (e.v1_path.empty() || e.v2_path.empty()) {
        results[i].exit_code = 1;
        results[i].error = "malformed manifest entry";
      } else {
        results[i] = run_analyze(e.v1_path, e.v2_path, options.pipeline);
      }
      if (results[i].report) {
        try {
          write_json_file((fs::path(options.out_dir) / (e.name + ".json")).string(), *results[i].report);
        } catch (const std::exception& ex) {
          results[i].exit_code = 1;
          results[i].error = ex.what();
        }
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(std::max<std::size_t>(1, entries.size()))));
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  BatchOutcome outcome;
  json verdicts = json::object();
  for (UpgradeBehavior b : {UpgradeBehavior::IntroduceVulnerability, UpgradeBehavior::FixVulnerability,
                            UpgradeBehavior::SmoothUpgrade, UpgradeBehavior::InvalidUpgrade})
    verdicts[std::string(to_string(b))] = 0;
  double high = 0, medium = 0, low = 0;
  int ingestions = 0;
  json reports = json::array();
  json failures = json::array();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const RunResult& r = results[i];
    ingestions += r.ingestions;
    const bool analyzed = r.report && r.report->contains("classification");
    if (analyzed) {
      const json& rep = *r.report;
      verdicts[rep["classification"]["verdict"].get<std::string>()] =
          verdicts[rep["classification"]["verdict"].get<std::string>()].get<int>() + 1;
      for (const json& f : rep["findings"]["v2"]) {
        const std::string sev = f["severity"];
        high += sev == "High";
        medium += sev == "Medium";
        low += sev == "Low";
      }
    }
    if (r.exit_code == 1 || !analyzed) {
      ++outcome.failed;
      failures.push_back({{"entry", entries[i].name}, {"exit_code", r.exit_code}, {"error", r.error}});
    } else {
      ++outcome.succeeded;
    }
    json item = {{"entry", entries[i].name}, {"exit_code", r.exit_code}};
    item["report"] = r.report ? json(entries[i].name + ".json") : json(nullptr);
    item["verdict"] = analyzed ? (*r.report)["classification"]["verdict"] : json(nullptr);
    reports.push_back(item);
  }
  const double total = high + medium + low;
  json severity = {{"High", total > 0 ? 100.0 * high / total : 0.0},
                   {"Medium", total > 0 ? 100.0 * medium / total : 0.0},
                   {"Low", total > 0 ? 100.0 * low / total : 0.0}};
  json cache = nullptr;
  if (options.pipeline.cache) {
    const CacheStats s = options.pipeline.cache->stats();
    cache = {{"hits", s.hits}, {"misses", s.misses}, {"evictions", s.evictions}, {"corrupt", s.corrupt},
             {"hit_rate", s.hit_rate()}};
  }
  outcome.summary = {
      {"schema_version", kReportSchemaVersion},
      {"tool", {{"name", kToolName}, {"version", kToolVersion}}},
      {"entries", entries.size()},
      {"succeeded", outcome.succeeded},
      {"failed", outcome.failed},
      {"verdicts", verdicts},
      {"severity_distribution", severity},
      {"reports", reports},
      {"failures", failures},
      {"run", {{"ingestions", ingestions}, {"cache", cache}}},
  };
  write_json_file((fs::path(options.out_dir) / "summary.json").string(), outcome.summary);
  return outcome;
}

}  // namespace proxydiff
