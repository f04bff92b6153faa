#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "proxydiff/ast.hpp"

namespace proxydiff {

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t puts = 0;
  std::uint64_t evictions = 0;
  std::uint64_t corrupt = 0;

  double hit_rate() const {
    const auto total = hits + misses;
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
  }
};

/// Content-addressed on-disk AST cache with LRU eviction. Entries live in
/// `<dir>/<key>.ast.json`; `<dir>/index.json` keeps recency and hit counts
/// across processes. All operations are serialized by one mutex.
class AstCache {
 public:
  explicit AstCache(std::filesystem::path dir, std::size_t capacity = 4096);

  /// Corrupt or unreadable entries count as misses and are dropped.
  std::optional<Ast> get(const std::string& key);
  void put(const std::string& key, const Ast& ast);

  CacheStats stats() const;
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  const std::filesystem::path& dir() const { return dir_; }

  /// Cache key for a source text parsed by a given engine.
  static std::string key_for(std::string_view engine, std::string_view source_hash);

 private:
  struct IndexEntry {
    std::int64_t created_at = 0;
    std::uint64_t hits = 0;
    std::uint64_t last_used = 0;
  };

  std::filesystem::path entry_path(const std::string& key) const;
  void load_index();
  void save_index() const;
  void drop(const std::string& key);

  std::filesystem::path dir_;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::map<std::string, IndexEntry> index_;
  std::uint64_t clock_ = 0;
  CacheStats stats_;
};

}  // namespace proxydiff
