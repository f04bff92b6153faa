#pragma once

#include <chrono>
#include <memory>
#include <semaphore>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "proxydiff/change_match.hpp"
#include "proxydiff/upgrade_classify.hpp"

namespace proxydiff {

/// Section headings every prompt carries, in order.
inline constexpr std::string_view kPromptHeadings[] = {
    "Root cause analysis",
    "Impact of code changes on security",
    "Correlation of change types and vulnerability types",
    "Risk pattern labels",
    "Remediation recommendations",
};

/// Required keys of a model answer, in order.
inline constexpr std::string_view kResponseKeys[] = {
    "root_cause", "security_impact", "change_vuln_correlation", "risk_labels", "remediation",
};

struct AttributionRequest {
  MatchPair match;
  ChangeRecord change;
  Finding finding;
  std::string v1_snippet;
  std::string v2_snippet;
  TypeClassification classification;
  std::string prompt_text;
};

std::string build_prompt(const AttributionRequest& request);

/// Assembles a request and renders its prompt.
AttributionRequest make_request(const MatchPair& match, const ChangeRecord& change, const Finding& finding,
                                std::string v1_snippet, std::string v2_snippet,
                                const TypeClassification& classification);

struct AttributionResult {
  std::string root_cause;
  std::string security_impact;
  std::string change_vuln_correlation;
  std::vector<std::string> risk_labels;
  std::string remediation;
  std::string raw_json;
};

/// Parses the first JSON object in `response`, ignoring surrounding prose.
/// Throws Error{NoJsonFound} or SchemaViolation.
AttributionResult parse_attribution(std::string_view response);

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string complete(const AttributionRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Deterministic offline answers derived from the request.
std::string stub_backend(const AttributionRequest& request);

class StubBackend : public LlmBackend {
 public:
  std::string complete(const AttributionRequest& request) override { return stub_backend(request); }
  std::string name() const override { return "stub"; }
};

struct HttpBackendConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o-mini";
  std::string api_key;  // see http_backend_config_from_env
  int max_in_flight = 4;
  std::chrono::seconds timeout{120};
};

/// Reads LLM_API_KEY, LLM_ENDPOINT and LLM_MODEL when set.
HttpBackendConfig http_backend_config_from_env();

/// Chat-completions style client; at most `max_in_flight` concurrent requests.
class HttpChatBackend : public LlmBackend {
 public:
  explicit HttpChatBackend(HttpBackendConfig config);
  std::string complete(const AttributionRequest& request) override;
  std::string name() const override { return "http"; }

 private:
  HttpBackendConfig config_;
  std::counting_semaphore<64> slots_;
};

/// Normalized (lowercase, trimmed) label counts, most frequent first.
std::vector<std::pair<std::string, int>> extract_risk_patterns(const std::vector<AttributionResult>& results);

}  // namespace proxydiff
