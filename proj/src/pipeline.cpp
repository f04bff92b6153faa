#include "proxydiff/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include "proxydiff/error.hpp"
#include "proxydiff/source_parser.hpp"

namespace proxydiff {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

constexpr std::size_t kMaxAttributions = 50;

std::string describe_quality(const QualityMetrics& q) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "node %.3f, structural %.3f, semantic %.3f", q.node_completeness,
                q.structural_integrity, q.semantic_completeness);
  return buf;
}

}  // namespace

VersionInput load_version_file(const std::string& path, std::string tag) {
  auto source = read_file(path);
  if (!source) throw Error(ErrorCode::Io, "cannot read " + path);
  VersionInput in;
  in.tag = std::move(tag);
  in.path = path;
  in.source = std::move(*source);
  fs::path ast_path(path);
  ast_path.replace_extension(".ast.json");
  if (auto doc = read_file(ast_path)) {
    try {
      in.ast_document = json::parse(*doc);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedDocument, ast_path.string() + ": " + e.what());
    }
  }
  return in;
}

LoadedVersion load_version(const VersionInput& input, AstCache* cache, int* ingestions) {
  LoadedVersion out;
  out.tag = input.tag;
  out.path = input.path;
  out.source = input.source;
  out.engine = input.ast_document ? "compiler-json" : "builtin-parser";
  const std::string key = AstCache::key_for(out.engine, source_hash(input.source));
  if (cache) {
    if (auto hit = cache->get(key)) {
      out.ast = std::move(*hit);
      out.ast.version_tag = input.tag;
      out.cache_hit = true;
      return out;
    }
  }
  out.ast = input.ast_document ? ingest_ast(*input.ast_document, input.source, input.tag)
                               : parse_source(input.source, input.tag);
  if (ingestions) ++*ingestions;
  if (cache) cache->put(key, out.ast);
  return out;
}

AnalysisResult analyze(const VersionInput& v1_in, const VersionInput& v2_in, const PipelineOptions& options) {
  const auto start = Clock::now();
  AnalysisResult r;

  auto t = Clock::now();
  r.v1 = load_version(v1_in, options.cache, &r.ingestions);
  r.v2 = load_version(v2_in, options.cache, &r.ingestions);
  r.timings.load_ms = elapsed_ms(t);
  for (const LoadedVersion* v : {&r.v1, &r.v2}) {
    if (!is_usable(v->ast.quality)) {
      r.quality_ok = false;
      r.warnings.push_back(v->tag + " AST quality below threshold (" + describe_quality(v->ast.quality) + ")");
    }
  }

  t = Clock::now();
  r.diff = diff_trees(r.v1.ast, r.v2.ast, options.diff);
  r.changes = extract_changes(r.diff.script, r.v1.ast, r.v2.ast, r.v1.source, r.v2.source);
  r.timings.diff_ms = elapsed_ms(t);

  t = Clock::now();
  r.v1_findings = detect(r.v1.ast, r.v1.source);
  r.v2_findings = detect(r.v2.ast, r.v2.source);
  r.v1_layout = compute_storage_layout(r.v1.ast);
  r.v2_layout = compute_storage_layout(r.v2.ast);
  for (const std::string& w : r.v1_layout.warnings) r.warnings.push_back("v1 storage layout: " + w);
  for (const std::string& w : r.v2_layout.warnings) r.warnings.push_back("v2 storage layout: " + w);
  std::vector<Finding> collisions = compare_layouts(r.v1_layout, r.v2_layout);
  r.v2_findings.insert(r.v2_findings.end(), collisions.begin(), collisions.end());
  std::stable_sort(r.v2_findings.begin(), r.v2_findings.end(), [](const Finding& a, const Finding& b) {
    return std::tie(a.line, a.vuln_type) < std::tie(b.line, b.vuln_type);
  });
  int next_id = 0;
  for (Finding& f : r.v1_findings) f.finding_id = next_id++;
  for (Finding& f : r.v2_findings) f.finding_id = next_id++;
  r.timings.detect_ms = elapsed_ms(t);

  t = Clock::now();
  r.matches = match_all(r.changes, r.v2_findings, r.v2.source, r.v1.source, options.match);
  r.classification = classify_pair(r.v1_findings, r.v2_findings);
  r.summary = risk_summary(r.classification, r.v2_findings);
  r.timings.match_ms = elapsed_ms(t);

  t = Clock::now();
  if (options.attrib != AttribMode::Off) {
    StubBackend stub;
    LlmBackend* backend = options.attrib == AttribMode::Stub ? &stub : options.backend;
    if (backend == nullptr) throw Error(ErrorCode::NetworkError, "no LLM backend configured");
    std::vector<AttributionRequest> requests;
    for (const MatchPair& m : r.matches) {
      if (requests.size() >= kMaxAttributions) break;
      const ChangeRecord& c = r.changes[static_cast<std::size_t>(m.change_id)];
      const Finding& f = *std::find_if(r.v2_findings.begin(), r.v2_findings.end(),
                                       [&](const Finding& x) { return x.finding_id == m.finding_id; });
      std::string v1_snip;
      std::string v2_snip;
      if (c.v1_node != kNoNode) v1_snip = span_text(r.v1.source, r.v1.ast.node(c.v1_node).span);
      if (c.v2_node != kNoNode) v2_snip = span_text(r.v2.source, r.v2.ast.node(c.v2_node).span);
      const TypeClassification& row = r.classification[static_cast<std::size_t>(f.vuln_type)];
      requests.push_back(make_request(m, c, f, std::move(v1_snip), std::move(v2_snip), row));
    }
    r.attributions.resize(requests.size());
    const std::size_t jobs = static_cast<std::size_t>(std::max(1, options.llm_jobs));
    for (std::size_t begin = 0; begin < requests.size(); begin += jobs) {
      std::vector<std::future<void>> batch;
      for (std::size_t i = begin; i < std::min(requests.size(), begin + jobs); ++i) {
        batch.push_back(std::async(std::launch::async, [&, i] {
          Attribution& a = r.attributions[i];
          a.change_id = requests[i].match.change_id;
          a.finding_id = requests[i].match.finding_id;
          a.prompt = requests[i].prompt_text;
          try {
            a.raw_response = backend->complete(requests[i]);
            a.result = parse_attribution(a.raw_response);
          } catch (const std::exception& e) {
            a.error = e.what();
          }
        }));
      }
      for (auto& f : batch) f.get();
    }
    std::vector<AttributionResult> ok;
    for (const Attribution& a : r.attributions)
      if (a.result) ok.push_back(*a.result);
    r.risk_patterns = extract_risk_patterns(ok);
  }
  r.timings.attrib_ms = elapsed_ms(t);
  r.timings.total_ms = elapsed_ms(start);
  return r;
}

TraceOutcome trace_proxy(const std::string& proxy, const std::optional<std::string>& fixtures_root,
                         ExplorerConfig explorer, std::optional<std::size_t> pair_index) {
  TraceOutcome out;
  const auto normalized = normalize_address(proxy);
  out.info.proxy = normalized ? *normalized : proxy;

  std::vector<RawLog> logs;
  std::map<std::string, ImplementationMetadata> metadata;
  if (fixtures_root) {
    fs::path dir = fs::path(*fixtures_root) / proxy;
    if (!fs::exists(dir)) dir = fs::path(*fixtures_root) / out.info.proxy;
    auto text = read_file(dir / "history.json");
    if (!text) throw Error(ErrorCode::Io, "no history.json for " + proxy + " under " + *fixtures_root);
    json doc = json::parse(*text, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorCode::MalformedDocument, (dir / "history.json").string() + " is not JSON");
    HistoryFile history = parse_history_file(doc);
    logs = std::move(history.logs);
    metadata = std::move(history.metadata);
    explorer.fixture_dir = dir;
  }
  ExplorerClient client(explorer);
  if (!fixtures_root) logs = client.fetch_logs(out.info.proxy, std::string(kUpgradedTopic));

  std::vector<VersionRecord> records = build_history(parse_upgrade_events(logs), metadata);
  for (VersionRecord& rec : records) {
    try {
      ContractSource src = client.fetch_contract(rec.implementation_address);
      rec.source_text = std::move(src.source);
      rec.ast_document = std::move(src.ast);
      if (!rec.contract_name) rec.contract_name = src.metadata.name;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotVerified) throw;
      if (std::find(out.info.unverified.begin(), out.info.unverified.end(), rec.implementation_address) ==
          out.info.unverified.end())
        out.info.unverified.push_back(rec.implementation_address);
    }
  }
  const bool semver = !records.empty() && std::all_of(records.begin(), records.end(), [](const VersionRecord& r) {
    return r.version_string && parse_semver(*r.version_string);
  });
  out.info.history = dual_sort(std::move(records));
  out.info.sort_mode = semver ? "semver" : "timestamp";
  auto [v1, v2] = select_pair(out.info.history, pair_index);
  out.info.v1_address = v1.implementation_address;
  out.info.v2_address = v2.implementation_address;

  auto to_input = [](const VersionRecord& rec, const char* tag) -> std::optional<VersionInput> {
    if (!rec.source_text) return std::nullopt;
    VersionInput in;
    in.tag = tag;
    in.path = rec.implementation_address + ".sol";
    in.source = *rec.source_text;
    in.ast_document = rec.ast_document;
    return in;
  };
  out.v1 = to_input(v1, "v1");
  out.v2 = to_input(v2, "v2");
  return out;
}

}  // namespace proxydiff
