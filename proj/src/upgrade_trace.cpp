#include "proxydiff/upgrade_trace.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "proxydiff/error.hpp"

namespace proxydiff {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedLog, what); }

std::uint64_t number_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return 0;
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  if (it->is_number_integer()) {
    const auto v = it->get<std::int64_t>();
    if (v < 0) malformed(std::string(key) + " is negative");
    return static_cast<std::uint64_t>(v);
  }
  if (!it->is_string()) malformed(std::string(key) + " is not a number");
  const std::string& s = it->get_ref<const std::string&>();
  std::uint64_t v = 0;
  const bool hex = s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X');
  const char* begin = s.data() + (hex ? 2 : 0);
  auto [p, ec] = std::from_chars(begin, s.data() + s.size(), v, hex ? 16 : 10);
  if (ec != std::errc{} || p != s.data() + s.size()) malformed(std::string(key) + " '" + s + "' is not a number");
  return v;
}

std::string string_field(const json& j, const char* key) {
  auto it = j.find(key);
  return it != j.end() && it->is_string() ? it->get<std::string>() : std::string();
}

bool is_hex(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
}

std::string strip0x(std::string_view s) {
  if (s.size() >= 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) s.remove_prefix(2);
  return std::string(s);
}

}  // namespace

RawLog raw_log_from_json(const json& j) {
  if (!j.is_object()) malformed("log record is not an object");
  RawLog log;
  log.address = string_field(j, "address");
  auto topics = j.find("topics");
  if (topics == j.end() || !topics->is_array()) malformed("log record has no topics array");
  for (const json& t : *topics) {
    if (t.is_null()) continue;
    if (!t.is_string()) malformed("topic is not a string");
    log.topics.push_back(t.get<std::string>());
  }
  log.data = string_field(j, "data");
  log.block_number = number_field(j, "blockNumber");
  log.timestamp = number_field(j, "timeStamp");
  if (log.timestamp == 0) log.timestamp = number_field(j, "timestamp");
  log.tx_hash = lower(string_field(j, "transactionHash"));
  return log;
}

std::optional<std::string> normalize_address(std::string_view text) {
  const std::string hex = strip0x(text);
  if (hex.size() != 40 || !is_hex(hex)) return std::nullopt;
  return "0x" + lower(hex);
}

std::vector<UpgradeEvent> parse_upgrade_events(const std::vector<RawLog>& logs,
                                               const std::vector<std::string>& event_topics) {
  std::vector<std::string> wanted;
  for (const std::string& t : event_topics) wanted.push_back(lower(t));
  std::vector<UpgradeEvent> out;
  for (const RawLog& log : logs) {
    if (log.topics.empty()) continue;
    if (std::find(wanted.begin(), wanted.end(), lower(log.topics[0])) == wanted.end()) continue;
    std::string word;
    if (log.topics.size() >= 2) {
      word = strip0x(log.topics[1]);
      if (word.size() != 64 || !is_hex(word)) malformed("topic1 of upgrade log is not a 32-byte word");
    } else {
      word = strip0x(log.data);
      if (word.size() < 64 || !is_hex(word)) malformed("upgrade log carries no implementation address");
      word.resize(64);
    }
    UpgradeEvent e;
    e.implementation_address = "0x" + lower(word.substr(24));
    auto proxy = normalize_address(log.address);
    e.proxy_address = proxy ? *proxy : lower(log.address);
    e.block_number = log.block_number;
    e.timestamp = log.timestamp;
    e.tx_hash = log.tx_hash;
    out.push_back(std::move(e));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const UpgradeEvent& a, const UpgradeEvent& b) { return a.block_number < b.block_number; });
  return out;
}

std::optional<SemVer> parse_semver(std::string_view text) {
  if (!text.empty() && (text[0] == 'v' || text[0] == 'V')) text.remove_prefix(1);
  int parts[3] = {0, 0, 0};
  int count = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  while (count < 3) {
    if (p == end || !std::isdigit(static_cast<unsigned char>(*p))) return std::nullopt;
    auto [next, ec] = std::from_chars(p, end, parts[count]);
    if (ec != std::errc{}) return std::nullopt;
    p = next;
    ++count;
    if (p == end) break;
    if (*p != '.') return std::nullopt;
    ++p;
  }
  if (p != end || count < 2) return std::nullopt;
  return SemVer{parts[0], parts[1], parts[2]};
}

std::vector<VersionRecord> dual_sort(std::vector<VersionRecord> records) {
  std::vector<std::optional<SemVer>> versions;
  bool all_semver = true;
  for (const VersionRecord& r : records) {
    versions.push_back(r.version_string ? parse_semver(*r.version_string) : std::nullopt);
    all_semver = all_semver && versions.back().has_value();
  }
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (all_semver) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return *versions[a] < *versions[b]; });
  } else {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::pair(records[a].timestamp, records[a].block_number) <
             std::pair(records[b].timestamp, records[b].block_number);
    });
  }
  std::vector<VersionRecord> out;
  out.reserve(records.size());
  for (std::size_t i : order) out.push_back(std::move(records[i]));
  return out;
}

std::pair<VersionRecord, VersionRecord> select_pair(const std::vector<VersionRecord>& ordered,
                                                    std::optional<std::size_t> index) {
  if (ordered.size() < 2)
    throw Error(ErrorCode::InsufficientHistory,
                "need at least two implementations, found " + std::to_string(ordered.size()));
  const std::size_t first = index ? *index : ordered.size() - 2;
  if (first + 1 >= ordered.size())
    throw Error(ErrorCode::InsufficientHistory,
                "pair index " + std::to_string(first) + " out of range for " + std::to_string(ordered.size()) +
                    " implementations");
  return {ordered[first], ordered[first + 1]};
}

std::vector<VersionRecord> build_history(const std::vector<UpgradeEvent>& events,
                                         const std::map<std::string, ImplementationMetadata>& metadata) {
  std::vector<VersionRecord> out;
  for (const UpgradeEvent& e : events) {
    VersionRecord r;
    r.implementation_address = e.implementation_address;
    r.timestamp = e.timestamp;
    r.block_number = e.block_number;
    if (auto it = metadata.find(e.implementation_address); it != metadata.end()) {
      r.version_string = it->second.version;
      r.contract_name = it->second.name;
    }
    out.push_back(std::move(r));
  }
  return out;
}

HistoryFile parse_history_file(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedDocument, "history file is not an object");
  HistoryFile h;
  h.proxy = lower(string_field(j, "proxy"));
  auto logs = j.find("logs");
  if (logs == j.end() || !logs->is_array()) throw Error(ErrorCode::MalformedDocument, "history file has no logs array");
  for (const json& l : *logs) h.logs.push_back(raw_log_from_json(l));
  auto meta = j.find("metadata");
  if (meta != j.end() && meta->is_object()) {
    for (const auto& [addr, info] : meta->items()) {
      ImplementationMetadata m;
      if (info.contains("version") && info["version"].is_string()) m.version = info["version"].get<std::string>();
      if (info.contains("name") && info["name"].is_string()) m.name = info["name"].get<std::string>();
      auto key = normalize_address(addr);
      h.metadata[key ? *key : lower(addr)] = m;
    }
  }
  return h;
}

}  // namespace proxydiff
