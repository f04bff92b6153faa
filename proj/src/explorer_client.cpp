#include "proxydiff/explorer_client.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "proxydiff/error.hpp"

namespace proxydiff {

using nlohmann::json;

ExplorerConfig explorer_config_from_env() {
  ExplorerConfig config;
  if (const char* key = std::getenv("ETHERSCAN_API_KEY")) config.api_key = key;
  if (const char* url = std::getenv("ETHERSCAN_BASE_URL")) config.base_url = url;
  return config;
}

ExplorerClient::ExplorerClient(ExplorerConfig config) : config_(std::move(config)) {
  if (!config_.sleep) config_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

int ExplorerClient::attempts() const {
  std::lock_guard lock(mutex_);
  return attempts_;
}

ContractSource ExplorerClient::fetch_contract(const std::string& address) {
  const auto normalized = normalize_address(address);
  const std::string key = normalized ? *normalized : address;
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  ContractSource fetched = config_.fixture_dir ? fetch_offline(key) : fetch_online(key);
  std::lock_guard lock(mutex_);
  return cache_.emplace(key, std::move(fetched)).first->second;
}

namespace {

std::optional<std::string> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool rate_limited(const json& body) {
  if (!body.is_object() || body.value("status", "1") != "0") return false;
  const std::string result = body.contains("result") && body["result"].is_string() ? body["result"].get<std::string>() : "";
  return result.find("rate limit") != std::string::npos || result.find("Max calls") != std::string::npos;
}

}  // namespace

ContractSource ExplorerClient::fetch_offline(const std::string& address) const {
  ContractSource out;
  out.address = address;
  auto source = read_file(*config_.fixture_dir / (address + ".sol"));
  if (!source) throw Error(ErrorCode::NotVerified, "no verified source for " + address + " in fixtures");
  out.source = std::move(*source);
  if (auto ast = read_file(*config_.fixture_dir / (address + ".ast.json"))) {
    try {
      out.ast = json::parse(*ast);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedDocument, address + ".ast.json: " + e.what());
    }
  }
  return out;
}

json ExplorerClient::get_json(const std::multimap<std::string, std::string>& params) {
  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_follow_location(true);

  httplib::Params query(params.begin(), params.end());
  if (!config_.api_key.empty()) query.emplace("apikey", config_.api_key);

  std::string last_error;
  auto backoff = config_.initial_backoff;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      config_.sleep(backoff);
      backoff *= 2;
    }
    {
      std::lock_guard lock(mutex_);
      ++attempts_;
    }
    auto res = client.Get(config_.api_path, query, httplib::Headers{});
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) throw Error(ErrorCode::NetworkError, "explorer returned HTTP " + std::to_string(res->status));
    json body;
    try {
      body = json::parse(res->body);
    } catch (const json::exception&) {
      throw Error(ErrorCode::NetworkError, "explorer returned a non-JSON body");
    }
    if (rate_limited(body)) {
      last_error = "rate limited";
      continue;
    }
    return body;
  }
  throw Error(ErrorCode::NetworkError,
              "explorer unreachable after " + std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
}

std::string flatten_source_code(const std::string& source_code) {
  std::string text = source_code;
  if (text.size() >= 4 && text.rfind("{{", 0) == 0 && text.substr(text.size() - 2) == "}}")
    text = text.substr(1, text.size() - 2);
  if (text.empty() || text.front() != '{') return source_code;
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return source_code;
  const json& sources = doc.contains("sources") ? doc["sources"] : doc;
  std::string out;
  for (const auto& [path, entry] : sources.items()) {  // json objects iterate in key order
    if (!entry.is_object() || !entry.contains("content") || !entry["content"].is_string()) continue;
    out += "// File: " + path + "\n";
    out += entry["content"].get<std::string>();
    if (!out.empty() && out.back() != '\n') out += '\n';
  }
  return out.empty() ? source_code : out;
}

ContractSource ExplorerClient::fetch_online(const std::string& address) {
  json body = get_json({{"module", "contract"}, {"action", "getsourcecode"}, {"address", address}});
  if (!body.contains("result") || !body["result"].is_array() || body["result"].empty())
    throw Error(ErrorCode::NotVerified, "explorer has no source entry for " + address);
  const json& entry = body["result"][0];
  const std::string code = entry.value("SourceCode", "");
  if (code.empty()) throw Error(ErrorCode::NotVerified, address + " is not verified");
  ContractSource out;
  out.address = address;
  out.source = flatten_source_code(code);
  const std::string name = entry.value("ContractName", "");
  if (!name.empty()) out.metadata.name = name;
  return out;
}

std::vector<RawLog> ExplorerClient::fetch_logs(const std::string& proxy, const std::string& topic0) {
  json body = get_json({{"module", "logs"},
                        {"action", "getLogs"},
                        {"address", proxy},
                        {"fromBlock", "0"},
                        {"toBlock", "latest"},
                        {"topic0", topic0}});
  std::vector<RawLog> logs;
  if (!body.contains("result") || !body["result"].is_array()) return logs;
  for (const json& l : body["result"]) logs.push_back(raw_log_from_json(l));
  return logs;
}

}  // namespace proxydiff
