#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "proxydiff/upgrade_trace.hpp"

namespace proxydiff {

struct ExplorerConfig {
  std::string base_url = "https://api.etherscan.io";
  std::string api_path = "/api";
  std::string api_key;  // see explorer_config_from_env
  /// Offline mode: read `<address>.sol` / `<address>.ast.json` from here.
  std::optional<std::filesystem::path> fixture_dir;
  int max_retries = 3;  // retries after the first attempt
  std::chrono::milliseconds initial_backoff{1000};
  std::chrono::seconds timeout{30};
  /// Replaceable for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;
};

/// Default config with the API key taken from ETHERSCAN_API_KEY and the base
/// URL from ETHERSCAN_BASE_URL when set.
ExplorerConfig explorer_config_from_env();

struct ContractSource {
  std::string address;
  std::string source;
  std::optional<nlohmann::json> ast;  // offline fixtures only
  ImplementationMetadata metadata;
};

/// Explorer access with retry/backoff and a per-address response cache.
/// Thread-safe.
class ExplorerClient {
 public:
  explicit ExplorerClient(ExplorerConfig config);

  /// Throws Error{NotVerified} when no source is published, Error{NetworkError}
  /// after retries are exhausted.
  ContractSource fetch_contract(const std::string& address);

  /// Raw logs for the proxy filtered by topic0.
  std::vector<RawLog> fetch_logs(const std::string& proxy, const std::string& topic0);

  /// HTTP attempts issued so far, including retries.
  int attempts() const;

 private:
  nlohmann::json get_json(const std::multimap<std::string, std::string>& params);
  ContractSource fetch_offline(const std::string& address) const;
  ContractSource fetch_online(const std::string& address);

  ExplorerConfig config_;
  mutable std::mutex mutex_;
  std::map<std::string, ContractSource> cache_;
  int attempts_ = 0;
};

/// Flattens an explorer SourceCode field; multi-file standard-JSON payloads
/// (optionally wrapped in an extra pair of braces) are concatenated in path order.
std::string flatten_source_code(const std::string& source_code);

}  // namespace proxydiff
