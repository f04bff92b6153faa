#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "proxydiff/ast.hpp"

namespace proxydiff {

enum class VulnType {
  Reentrancy,
  AccessControl,
  IntegerOverflow,
  TxOriginAuth,
  UnprotectedDelegatecall,
  UninitializedProxy,
  StorageCollision,
  UnprotectedUpgrade,
};

inline constexpr VulnType kAllVulnTypes[] = {
    VulnType::Reentrancy,       VulnType::AccessControl,          VulnType::IntegerOverflow,
    VulnType::TxOriginAuth,     VulnType::UnprotectedDelegatecall, VulnType::UninitializedProxy,
    VulnType::StorageCollision, VulnType::UnprotectedUpgrade,
};

std::string_view to_string(VulnType type);
std::optional<VulnType> parse_vuln_type(std::string_view s);

enum class Severity { High, Medium, Low };
std::string_view to_string(Severity severity);

/// Lowercase trigger keywords per vulnerability type. Shared by the detectors,
/// the pattern score and the trait feature of change matching.
const std::set<std::string>& vuln_keywords(VulnType type);
inline constexpr std::string_view kKeywordTableVersion = "1";

struct Finding {
  int finding_id = 0;
  VulnType vuln_type = VulnType::Reentrancy;
  Severity severity = Severity::Medium;
  int line = 1;
  std::optional<std::string> function_name;
  std::optional<std::string> contract_name;
  std::string description;
  std::set<std::string> keywords;
  std::string detector_id;
};

/// Runs every AST detector; sorted by (line, type), ids numbered from 0.
std::vector<Finding> detect(const Ast& ast, std::string_view source);

std::vector<Finding> detect_reentrancy(const Ast& ast, std::string_view source);
std::vector<Finding> detect_access_control(const Ast& ast, std::string_view source);
std::vector<Finding> detect_overflow(const Ast& ast, std::string_view source);
std::vector<Finding> detect_tx_origin(const Ast& ast, std::string_view source);
std::vector<Finding> detect_delegatecall(const Ast& ast, std::string_view source);
std::vector<Finding> detect_uninitialized_proxy(const Ast& ast, std::string_view source);
std::vector<Finding> detect_unprotected_upgrade(const Ast& ast, std::string_view source);

// --- Storage layout --------------------------------------------------------------

struct StorageEntry {
  int slot = 0;
  int offset = 0;  // byte offset within the slot, 0-31
  int size = 32;   // bytes; 32 for types that always occupy full slots
  std::string type;
  std::string name;
  std::string contract;
  int line = 1;
  bool unknown_type = false;

  friend bool operator==(const StorageEntry&, const StorageEntry&) = default;
};

struct StorageSlotLayout {
  std::vector<StorageEntry> entries;  // sorted by (slot, offset)
  std::vector<std::string> warnings;

  friend bool operator==(const StorageSlotLayout&, const StorageSlotLayout&) = default;
};

/// Slot assignment for the state variables of `contract_name` (default: the
/// last deployable contract in the file), bases first in linearized order.
StorageSlotLayout compute_storage_layout(const Ast& ast,
                                         const std::optional<std::string>& contract_name = {});

/// Storage collisions between two layouts of the same proxy. Findings carry
/// the v2 line of the colliding variable.
std::vector<Finding> compare_layouts(const StorageSlotLayout& v1, const StorageSlotLayout& v2);

/// Canonical type string and byte size for a declared type; nullopt size
/// marks a type outside the supported subset.
struct CanonicalType {
  std::string name;
  std::optional<int> size;  // value types only
  int slots = 1;            // for full-slot types
  bool value_type = false;
};
CanonicalType canonical_type(std::string_view declared);

}  // namespace proxydiff
