#include "proxydiff/cache.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "proxydiff/error.hpp"

namespace proxydiff {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_atomically(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

bool valid_key(const std::string& key) {
  return !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  });
}

}  // namespace

AstCache::AstCache(fs::path dir, std::size_t capacity) : dir_(std::move(dir)), capacity_(std::max<std::size_t>(1, capacity)) {
  fs::create_directories(dir_);
  load_index();
}

std::string AstCache::key_for(std::string_view engine, std::string_view source_hash) {
  return std::string(engine) + "-" + std::string(source_hash);
}

fs::path AstCache::entry_path(const std::string& key) const { return dir_ / (key + ".ast.json"); }

void AstCache::load_index() {
  std::ifstream in(dir_ / "index.json");
  if (!in) return;
  json j = json::parse(in, nullptr, false);
  if (!j.is_object() || !j.contains("entries") || !j["entries"].is_object()) return;
  for (const auto& [key, e] : j["entries"].items()) {
    if (!valid_key(key) || !e.is_object()) continue;
    IndexEntry entry;
    entry.created_at = e.value("created_at", std::int64_t{0});
    entry.hits = e.value("hits", std::uint64_t{0});
    entry.last_used = e.value("last_used", std::uint64_t{0});
    index_[key] = entry;
    clock_ = std::max(clock_, entry.last_used);
  }
}

void AstCache::save_index() const {
  json entries = json::object();
  for (const auto& [key, e] : index_)
    entries[key] = {{"created_at", e.created_at}, {"hits", e.hits}, {"last_used", e.last_used}};
  write_atomically(dir_ / "index.json", json{{"capacity", capacity_}, {"entries", entries}}.dump(1) + "\n");
}

void AstCache::drop(const std::string& key) {
  std::error_code ec;
  fs::remove(entry_path(key), ec);
  index_.erase(key);
}

std::optional<Ast> AstCache::get(const std::string& key) {
  std::lock_guard lock(mutex_);
  auto it = index_.find(key);
  if (!valid_key(key) || it == index_.end()) {
    ++stats_.misses;
    return std::nullopt;
  }
  std::ifstream in(entry_path(key), std::ios::binary);
  std::optional<Ast> ast;
  if (in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
      ast = ast_from_json(json::parse(buf.str()));
    } catch (const std::exception&) {
      ast.reset();
    }
  }
  if (!ast) {
    ++stats_.corrupt;
    ++stats_.misses;
    drop(key);
    save_index();
    return std::nullopt;
  }
  ++stats_.hits;
  ++it->second.hits;
  it->second.last_used = ++clock_;
  save_index();
  return ast;
}

void AstCache::put(const std::string& key, const Ast& ast) {
  if (!valid_key(key)) throw Error(ErrorCode::Io, "invalid cache key '" + key + "'");
  std::lock_guard lock(mutex_);
  write_atomically(entry_path(key), to_json(ast).dump() + "\n");
  IndexEntry& entry = index_[key];
  if (entry.created_at == 0)
    entry.created_at = std::chrono::duration_cast<std::chrono::seconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();
  entry.last_used = ++clock_;
  ++stats_.puts;
  while (index_.size() > capacity_) {
    auto oldest = std::min_element(index_.begin(), index_.end(), [](const auto& a, const auto& b) {
      return a.second.last_used < b.second.last_used;
    });
    drop(oldest->first);
    ++stats_.evictions;
  }
  save_index();
}

CacheStats AstCache::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

std::size_t AstCache::size() const {
  std::lock_guard lock(mutex_);
  return index_.size();
}

}  // namespace proxydiff
