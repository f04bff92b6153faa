#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace proxydiff {

/// topic0 of `Upgraded(address)`.
inline constexpr std::string_view kUpgradedTopic =
    "0xbc7cd75a20ee27fd9adebab32041f755214dbc6bffa90cc0225b39da2e5c2d3b";

/// A log record as returned by an explorer's getLogs endpoint.
struct RawLog {
  std::string address;
  std::vector<std::string> topics;
  std::string data;
  std::uint64_t block_number = 0;
  std::uint64_t timestamp = 0;
  std::string tx_hash;
};

/// Accepts hex ("0x1a") or decimal numbers, as strings or integers.
RawLog raw_log_from_json(const nlohmann::json& j);

struct UpgradeEvent {
  std::string proxy_address;           // lowercase 0x-prefixed
  std::string implementation_address;  // lowercase 0x-prefixed
  std::uint64_t block_number = 0;
  std::uint64_t timestamp = 0;
  std::string tx_hash;
};

/// Upgrade events in block order. The implementation address comes from
/// topic1, or from the first data word for non-indexed variants.
/// Throws Error{MalformedLog}.
std::vector<UpgradeEvent> parse_upgrade_events(
    const std::vector<RawLog>& logs,
    const std::vector<std::string>& event_topics = {std::string(kUpgradedTopic)});

/// Lowercases and validates a 20-byte address; nullopt if malformed.
std::optional<std::string> normalize_address(std::string_view text);

struct VersionRecord {
  std::string implementation_address;
  std::optional<std::string> version_string;
  std::optional<std::string> contract_name;
  std::uint64_t timestamp = 0;
  std::uint64_t block_number = 0;
  std::optional<std::string> source_text;  // absent when not verified
  std::optional<nlohmann::json> ast_document;
};

struct SemVer {
  int major = 0;
  int minor = 0;
  int patch = 0;

  friend auto operator<=>(const SemVer&, const SemVer&) = default;
};

/// `major.minor[.patch]` with an optional leading v/V.
std::optional<SemVer> parse_semver(std::string_view text);

/// Semantic-version order when every record has a parseable version, else
/// (timestamp, block) order. Stable.
std::vector<VersionRecord> dual_sort(std::vector<VersionRecord> records);

/// (V1, V2): the last two records, or the adjacent pair starting at `index`.
/// Throws Error{InsufficientHistory}.
std::pair<VersionRecord, VersionRecord> select_pair(const std::vector<VersionRecord>& ordered,
                                                    std::optional<std::size_t> index = std::nullopt);

struct ImplementationMetadata {
  std::optional<std::string> version;
  std::optional<std::string> name;
};

/// One record per upgrade event; metadata fills version strings and names.
std::vector<VersionRecord> build_history(const std::vector<UpgradeEvent>& events,
                                         const std::map<std::string, ImplementationMetadata>& metadata);

/// Offline history file: {"proxy", "logs": [...], "metadata": {addr: {version, name}}}.
struct HistoryFile {
  std::string proxy;
  std::vector<RawLog> logs;
  std::map<std::string, ImplementationMetadata> metadata;
};
HistoryFile parse_history_file(const nlohmann::json& j);

}  // namespace proxydiff
