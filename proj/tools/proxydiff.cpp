#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "proxydiff/batch.hpp"
#include "proxydiff/report.hpp"

namespace {

using namespace proxydiff;

struct CommonFlags {
  std::string report_out;
  std::optional<std::string> fixtures;
  bool enhanced = true;
  std::string attrib = "off";
  double threshold = 0.6;
  int jobs = 4;
  std::string cache_dir;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--report-out", f.report_out, "Report path (batch: output directory)");
  cmd->add_option("--fixtures", f.fixtures, "Offline fixture root for proxy histories");
  cmd->add_flag("--enhanced-matching,!--no-enhanced-matching", f.enhanced,
                "Include the semantic dimension in match confidence (default on)");
  cmd->add_option("--attrib", f.attrib, "Attribution backend")->check(CLI::IsMember({"off", "stub", "http"}));
  cmd->add_option("--threshold", f.threshold, "Match confidence threshold (exclusive)")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--jobs", f.jobs, "Worker threads for batch and LLM calls")->check(CLI::PositiveNumber);
  cmd->add_option("--cache-dir", f.cache_dir, "On-disk AST cache directory");
}

struct Runtime {
  PipelineOptions options;
  std::unique_ptr<AstCache> cache;
  std::unique_ptr<LlmBackend> backend;
};

Runtime make_runtime(const CommonFlags& f) {
  Runtime rt;
  rt.options.match.threshold = f.threshold;
  rt.options.match.enhanced = f.enhanced;
  rt.options.llm_jobs = f.jobs;
  if (f.attrib == "stub") {
    rt.options.attrib = AttribMode::Stub;
  } else if (f.attrib == "http") {
    HttpBackendConfig cfg = http_backend_config_from_env();
    cfg.max_in_flight = f.jobs;
    rt.backend = std::make_unique<HttpChatBackend>(cfg);
    rt.options.attrib = AttribMode::Http;
    rt.options.backend = rt.backend.get();
  }
  if (!f.cache_dir.empty()) {
    rt.cache = std::make_unique<AstCache>(f.cache_dir);
    rt.options.cache = rt.cache.get();
  }
  return rt;
}

int emit(const RunResult& r, const std::string& report_out) {
  if (!r.error.empty()) std::cerr << "proxydiff: " << r.error << "\n";
  if (!r.report) return r.exit_code;
  if (report_out.empty() || report_out == "-") {
    std::cout << r.report->dump(2) << "\n";
  } else {
    write_json_file(report_out, *r.report);
    std::cerr << "report written to " << report_out << "\n";
  }
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Security diff for upgradeable smart contract implementations"};
  app.require_subcommand(1);

  CommonFlags analyze_flags;
  std::string v1_path;
  std::string v2_path;
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "Compare two implementation versions");
  analyze_cmd->add_option("V1", v1_path, "Old version (.sol, optional sibling .ast.json)")->required();
  analyze_cmd->add_option("V2", v2_path, "New version (.sol, optional sibling .ast.json)")->required();
  add_common(analyze_cmd, analyze_flags);

  CommonFlags trace_flags;
  std::string proxy;
  std::optional<std::size_t> pair_index;
  CLI::App* trace_cmd = app.add_subcommand("trace", "Trace a proxy's upgrades and analyze one pair");
  trace_cmd->add_option("PROXY", proxy, "Proxy address")->required();
  trace_cmd->add_option("--pair-index", pair_index, "Analyze history[i] -> history[i+1] (default: last two)");
  add_common(trace_cmd, trace_flags);

  CommonFlags batch_flags;
  std::string manifest;
  CLI::App* batch_cmd = app.add_subcommand("batch", "Analyze every entry of a manifest");
  batch_cmd->add_option("MANIFEST", manifest, "JSON or line-based manifest")->required();
  add_common(batch_cmd, batch_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze_cmd->parsed()) {
      Runtime rt = make_runtime(analyze_flags);
      return emit(run_analyze(v1_path, v2_path, rt.options), analyze_flags.report_out);
    }
    if (trace_cmd->parsed()) {
      Runtime rt = make_runtime(trace_flags);
      ExplorerConfig explorer = explorer_config_from_env();
      return emit(run_trace(proxy, trace_flags.fixtures, explorer, rt.options, pair_index), trace_flags.report_out);
    }
    if (batch_cmd->parsed()) {
      BatchOptions opts;
      opts.out_dir = batch_flags.report_out.empty() ? "proxydiff-reports" : batch_flags.report_out;
      if (batch_flags.cache_dir.empty()) batch_flags.cache_dir = (std::filesystem::path(opts.out_dir) / "cache").string();
      Runtime rt = make_runtime(batch_flags);
      opts.pipeline = rt.options;
      opts.jobs = batch_flags.jobs;
      opts.fixtures = batch_flags.fixtures;
      opts.explorer = explorer_config_from_env();
      const BatchOutcome outcome = run_batch(parse_manifest(manifest), opts);
      std::cerr << outcome.succeeded << " succeeded, " << outcome.failed << " failed; summary in "
                << (std::filesystem::path(opts.out_dir) / "summary.json").string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "proxydiff: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
