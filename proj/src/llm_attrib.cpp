#include "proxydiff/llm_attrib.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <map>

#include <httplib.h>
#include <json.hpp>

#include "proxydiff/error.hpp"

namespace proxydiff {

using nlohmann::json;

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string snippet_or_placeholder(const std::string& s) {
  return s.empty() ? "(snippet unavailable)" : s;
}

}  // namespace

std::string build_prompt(const AttributionRequest& r) {
  const ChangeRecord& c = r.change;
  const Finding& f = r.finding;
  const DimensionScores& s = r.match.scores;
  std::string p;
  p += "You are auditing an upgrade of a proxied smart contract. A code change between the old\n";
  p += "implementation (V1) and the new implementation (V2) has been linked to a vulnerability\n";
  p += "finding. Analyse the link and answer in JSON.\n\n";

  p += "### Change\n";
  p += "operation: " + std::string(to_string(c.op)) + "\n";
  p += "node kind: " + c.node_kind + "\n";
  p += "line (" + std::string(c.side == Side::V1 ? "V1" : "V2") + "): " + std::to_string(c.line) + "\n";
  p += "function: " + c.function_name.value_or("(none)") + "\n";
  p += "V1 snippet:\n```solidity\n" + snippet_or_placeholder(r.v1_snippet) + "\n```\n";
  p += "V2 snippet:\n```solidity\n" + snippet_or_placeholder(r.v2_snippet) + "\n```\n\n";

  p += "### Finding\n";
  p += "type: " + std::string(to_string(f.vuln_type)) + "\n";
  p += "severity: " + std::string(to_string(f.severity)) + "\n";
  p += "line (V2): " + std::to_string(f.line) + "\n";
  p += "function: " + f.function_name.value_or("(none)") + "\n";
  p += "description: " + f.description + "\n\n";

  p += "### Match scores\n";
  p += "position " + fixed3(s.position) + ", pattern " + fixed3(s.pattern) + ", semantic " +
       fixed3(s.semantic) + ", change type " + fixed3(s.type) + ", confidence " + fixed3(r.match.confidence) + "\n";
  p += "upgrade behavior for this type: " + std::string(to_string(r.classification.behavior)) + " (" +
       std::string(conclusion(r.classification.behavior)) + ")\n\n";

  p += "### Analysis dimensions\n";
  const char* guidance[] = {
      "Explain which code construct causes the vulnerability.",
      "Describe how the change alters the security of the contract.",
      "Relate the operation type of the change to the vulnerability type.",
      "Give short labels for recurring risk patterns, such as missing privilege control.",
      "Recommend concrete fixes.",
  };
  for (std::size_t i = 0; i < std::size(kPromptHeadings); ++i)
    p += "#### " + std::string(kPromptHeadings[i]) + "\n" + guidance[i] + "\n";
  p += "\n### Answer format\n";
  p += "Reply with a single JSON object with exactly these keys:\n";
  p += "{\"root_cause\": string, \"security_impact\": string, \"change_vuln_correlation\": string, "
       "\"risk_labels\": [string], \"remediation\": string}\n";
  return p;
}

AttributionRequest make_request(const MatchPair& match, const ChangeRecord& change, const Finding& finding,
                                std::string v1_snippet, std::string v2_snippet,
                                const TypeClassification& classification) {
  AttributionRequest r;
  r.match = match;
  r.change = change;
  r.finding = finding;
  r.v1_snippet = std::move(v1_snippet);
  r.v2_snippet = std::move(v2_snippet);
  r.classification = classification;
  r.prompt_text = build_prompt(r);
  return r;
}

// --- Parsing ------------------------------------------------------------------------

namespace {

// End index (exclusive) of the balanced object starting at `open`, or npos.
std::size_t object_end(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') in_string = true;
    if (c == '{') ++depth;
    if (c == '}' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

}  // namespace

AttributionResult parse_attribution(std::string_view response) {
  json doc;
  std::string raw;
  for (std::size_t open = response.find('{'); open != std::string_view::npos;
       open = response.find('{', open + 1)) {
    const std::size_t end = object_end(response, open);
    if (end == std::string_view::npos) continue;
    json candidate = json::parse(response.substr(open, end - open), nullptr, false);
    if (candidate.is_discarded() || !candidate.is_object()) continue;
    doc = std::move(candidate);
    raw = std::string(response.substr(open, end - open));
    break;
  }
  if (!doc.is_object()) throw Error(ErrorCode::NoJsonFound, "response contains no JSON object");

  std::vector<std::string> missing;
  for (std::string_view key : kResponseKeys) {
    auto it = doc.find(std::string(key));
    const bool ok = it != doc.end() &&
                    (key == "risk_labels" ? it->is_array() && std::all_of(it->begin(), it->end(),
                                                                          [](const json& l) { return l.is_string(); })
                                          : it->is_string());
    if (!ok) missing.emplace_back(key);
  }
  if (!missing.empty()) throw SchemaViolation(std::move(missing));

  AttributionResult r;
  r.root_cause = doc["root_cause"].get<std::string>();
  r.security_impact = doc["security_impact"].get<std::string>();
  r.change_vuln_correlation = doc["change_vuln_correlation"].get<std::string>();
  for (const json& l : doc["risk_labels"]) r.risk_labels.push_back(l.get<std::string>());
  r.remediation = doc["remediation"].get<std::string>();
  r.raw_json = std::move(raw);
  return r;
}

// --- Stub backend ----------------------------------------------------------------------

namespace {

struct StubRule {
  std::vector<std::string> labels;
  std::string remediation;
};

const StubRule& stub_rule(VulnType type) {
  static const std::map<VulnType, StubRule> rules = {
      {VulnType::Reentrancy,
       {{"external call risks", "unsynchronized state variables"},
        "Update state before external calls and add a reentrancy guard."}},
      {VulnType::AccessControl,
       {{"missing privilege control"}, "Restore an owner or role check on the state-changing function."}},
      {VulnType::IntegerOverflow,
       {{"unchecked arithmetic"}, "Use checked arithmetic or a 0.8+ compiler outside unchecked blocks."}},
      {VulnType::TxOriginAuth,
       {{"missing privilege control", "tx.origin authentication"}, "Authenticate callers with msg.sender."}},
      {VulnType::UnprotectedDelegatecall,
       {{"external call risks", "missing privilege control"},
        "Restrict delegatecall targets to trusted, access-controlled addresses."}},
      {VulnType::UninitializedProxy,
       {{"missing privilege control", "uninitialized proxy state"},
        "Guard the initializer and lock it in the logic contract constructor."}},
      {VulnType::StorageCollision,
       {{"unsynchronized state variables", "storage layout drift"},
        "Keep the storage layout append-only across upgrades."}},
      {VulnType::UnprotectedUpgrade,
       {{"missing privilege control", "unprotected upgrade path"},
        "Require an admin or owner check before changing the implementation."}},
  };
  return rules.at(type);
}

}  // namespace

std::string stub_backend(const AttributionRequest& r) {
  const std::string type(to_string(r.finding.vuln_type));
  const std::string op(to_string(r.change.op));
  const StubRule& rule = stub_rule(r.finding.vuln_type);
  json out;
  out["root_cause"] = type + " at line " + std::to_string(r.finding.line) + " (" + r.finding.description + ")";
  out["security_impact"] = "The " + op + " of a " + r.change.node_kind + " node changes the " + type +
                           " exposure: " + std::string(conclusion(r.classification.behavior)) + ".";
  out["change_vuln_correlation"] = op + " x " + type + " with confidence " + fixed3(r.match.confidence);
  out["risk_labels"] = rule.labels;
  out["remediation"] = rule.remediation;
  return out.dump();
}

// --- HTTP backend -------------------------------------------------------------------------

HttpBackendConfig http_backend_config_from_env() {
  HttpBackendConfig config;
  if (const char* key = std::getenv("LLM_API_KEY")) config.api_key = key;
  if (const char* url = std::getenv("LLM_ENDPOINT")) config.endpoint = url;
  if (const char* model = std::getenv("LLM_MODEL")) config.model = model;
  return config;
}

HttpChatBackend::HttpChatBackend(HttpBackendConfig config)
    : config_(std::move(config)), slots_(std::clamp(config_.max_in_flight, 1, 64)) {}

std::string HttpChatBackend::complete(const AttributionRequest& request) {
  // Split "scheme://host[:port]/path" into client base and path.
  const std::size_t scheme_end = config_.endpoint.find("://");
  const std::size_t path_start =
      config_.endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string base = config_.endpoint.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);

  json body = {
      {"model", config_.model},
      {"temperature", 0},
      {"messages",
       json::array({{{"role", "system"}, {"content", "You are a smart contract security auditor."}},
                    {{"role", "user"}, {"content", request.prompt_text}}})},
  };
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  slots_.acquire();
  httplib::Client client(base);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  auto res = client.Post(path, headers, body.dump(), "application/json");
  slots_.release();

  if (!res) throw Error(ErrorCode::NetworkError, "LLM request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw Error(ErrorCode::NetworkError, "LLM endpoint returned HTTP " + std::to_string(res->status));
  json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded()) throw Error(ErrorCode::NetworkError, "LLM endpoint returned a non-JSON body");
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::NetworkError, "LLM reply has no choices[0].message.content");
  }
}

// --- Risk patterns ------------------------------------------------------------------------

std::vector<std::pair<std::string, int>> extract_risk_patterns(const std::vector<AttributionResult>& results) {
  std::map<std::string, int> counts;
  for (const AttributionResult& r : results) {
    for (const std::string& label : r.risk_labels) {
      std::string norm;
      for (char c : label) norm += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      const auto first = norm.find_first_not_of(" \t\r\n");
      const auto last = norm.find_last_not_of(" \t\r\n");
      norm = first == std::string::npos ? "" : norm.substr(first, last - first + 1);
      ++counts[norm];
    }
  }
  std::vector<std::pair<std::string, int>> out(counts.begin(), counts.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

}  // namespace proxydiff
