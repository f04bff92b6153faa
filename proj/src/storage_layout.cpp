#include <algorithm>
#include <charconv>
#include <map>

#include "proxydiff/vuln_detect.hpp"

namespace proxydiff {

namespace {

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string strip_suffix(std::string s, std::string_view suffix) {
  if (s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0)
    s.resize(s.size() - suffix.size());
  return s;
}

std::optional<int> elementary_size(const std::string& t) {
  if (t == "bool") return 1;
  if (t == "address") return 20;
  auto bits = [&](std::string_view prefix) -> std::optional<int> {
    if (t.rfind(prefix, 0) != 0) return std::nullopt;
    auto n = parse_int(std::string_view(t).substr(prefix.size()));
    if (!n || *n % 8 != 0 || *n < 8 || *n > 256) return std::nullopt;
    return *n / 8;
  };
  if (auto s = bits("uint")) return s;
  if (auto s = bits("int")) return s;
  if (t.rfind("bytes", 0) == 0 && t.size() > 5) {
    auto n = parse_int(std::string_view(t).substr(5));
    if (n && *n >= 1 && *n <= 32) return *n;
  }
  return std::nullopt;
}

}  // namespace

CanonicalType canonical_type(std::string_view declared) {
  std::string t(declared);
  for (std::string_view suffix : {" storage ref", " storage pointer", " memory", " calldata"})
    t = strip_suffix(t, suffix);
  if (t == "uint") t = "uint256";
  if (t == "int") t = "int256";
  if (t == "byte") t = "bytes1";
  if (t == "address payable") t = "address";
  if (t.rfind("contract ", 0) == 0 || t.rfind("interface ", 0) == 0) t = "address";
  if (t.rfind("enum ", 0) == 0) return {t, 1, 1, true};

  if (t.rfind("mapping", 0) == 0 || t == "string" || t == "bytes") return {t, std::nullopt, 1, false};
  if (!t.empty() && t.back() == ']') {
    const std::size_t open = t.rfind('[');
    const std::string_view len = std::string_view(t).substr(open + 1, t.size() - open - 2);
    if (len.empty()) return {t, std::nullopt, 1, false};  // dynamic array
    const CanonicalType elem = canonical_type(t.substr(0, open));
    auto n = parse_int(len);
    if (!n || (!elem.value_type && !elem.size && elem.name.rfind("struct", 0) == 0))
      return {t, std::nullopt, 1, false};
    int slots = 0;
    if (elem.value_type && elem.size) {
      const int per_slot = 32 / *elem.size;
      slots = (*n + per_slot - 1) / per_slot;
    } else {
      slots = *n * elem.slots;
    }
    return {t, std::nullopt, std::max(1, slots), false};
  }
  if (auto size = elementary_size(t)) return {t, size, 1, true};
  return {t, std::nullopt, 1, false};
}

namespace {

bool supported(const CanonicalType& c) {
  if (c.value_type) return true;
  if (c.name.rfind("mapping", 0) == 0 || c.name == "string" || c.name == "bytes") return true;
  if (!c.name.empty() && c.name.back() == ']') {
    const std::size_t open = c.name.rfind('[');
    return supported(canonical_type(c.name.substr(0, open)));
  }
  return false;
}

struct ContractInfo {
  const AstNode* node = nullptr;
  std::vector<std::string> bases;  // as written, left to right
};

// C3 linearization, most derived first.
std::vector<std::string> linearize(const std::string& name, const std::map<std::string, ContractInfo>& contracts,
                                   std::vector<std::string>& warnings, int depth = 0) {
  auto it = contracts.find(name);
  if (it == contracts.end() || depth > 64) return {name};
  std::vector<std::vector<std::string>> seqs;
  const auto& bases = it->second.bases;
  // Solidity lists bases from most base-like to most derived.
  for (auto b = bases.rbegin(); b != bases.rend(); ++b) seqs.push_back(linearize(*b, contracts, warnings, depth + 1));
  seqs.emplace_back(bases.rbegin(), bases.rend());
  std::vector<std::string> result{name};
  for (;;) {
    seqs.erase(std::remove_if(seqs.begin(), seqs.end(), [](const auto& s) { return s.empty(); }), seqs.end());
    if (seqs.empty()) return result;
    std::string head;
    for (const auto& s : seqs) {
      const std::string& cand = s.front();
      const bool in_tail = std::any_of(seqs.begin(), seqs.end(), [&](const auto& o) {
        return std::find(o.begin() + 1, o.end(), cand) != o.end();
      });
      if (!in_tail) {
        head = cand;
        break;
      }
    }
    if (head.empty()) {
      warnings.push_back("inheritance graph of " + name + " cannot be linearized");
      return result;
    }
    result.push_back(head);
    for (auto& s : seqs)
      if (!s.empty() && s.front() == head) s.erase(s.begin());
  }
}

}  // namespace

StorageSlotLayout compute_storage_layout(const Ast& ast, const std::optional<std::string>& contract_name) {
  StorageSlotLayout layout;
  std::map<std::string, ContractInfo> contracts;
  std::map<std::string, std::string> user_types;  // bare name -> canonical form
  std::string target;
  for (const AstNode& n : ast.nodes()) {
    if (n.is(NodeKind::ContractDefinition)) {
      ContractInfo info{&n, {}};
      for (NodeId c : n.children) {
        const AstNode& child = ast.node(c);
        if (child.is(NodeKind::InheritanceSpecifier) && !child.children.empty())
          info.bases.push_back(ast.node(child.children[0]).label);
      }
      contracts[n.label] = info;
      user_types[n.label] = "contract " + n.label;
      const std::string* kind = n.attr("contractKind");
      if (!kind || *kind == "contract") target = n.label;
    } else if (n.is_tag("EnumDefinition")) {
      user_types[n.label] = "enum " + n.label;
    } else if (n.is_tag("StructDefinition")) {
      user_types[n.label] = "struct " + n.label;
    } else if (n.is_tag("UserDefinedValueTypeDefinition") && !n.children.empty()) {
      user_types[n.label] = ast.node(n.children[0]).label;
    }
  }
  if (contract_name) target = *contract_name;
  if (target.empty() || !contracts.count(target)) return layout;

  std::vector<std::string> order = linearize(target, contracts, layout.warnings);
  std::reverse(order.begin(), order.end());

  int slot = 0;
  int offset = 0;
  for (const std::string& cname : order) {
    auto it = contracts.find(cname);
    if (it == contracts.end()) {
      layout.warnings.push_back("base contract " + cname + " is not defined in this source");
      continue;
    }
    for (NodeId c : it->second.node->children) {
      const AstNode& var = ast.node(c);
      if (!var.is(NodeKind::VariableDeclaration) || !var.attr_is("stateVariable", "true")) continue;
      const std::string* mut = var.attr("mutability");
      if (var.attr_is("constant", "true") || (mut && *mut != "mutable")) continue;
      const std::string* ts = var.attr("typeString");
      std::string declared = ts ? *ts : "";
      if (auto ut = user_types.find(declared); ut != user_types.end()) declared = ut->second;
      const CanonicalType type = canonical_type(declared);
      StorageEntry e;
      e.type = type.name;
      e.name = var.label;
      e.contract = cname;
      e.line = var.span.start_line;
      e.unknown_type = !supported(type);
      if (e.unknown_type)
        layout.warnings.push_back("UnknownType: " + declared + " " + var.label + " given a full slot");
      if (type.value_type && type.size) {
        if (offset + *type.size > 32) {
          ++slot;
          offset = 0;
        }
        e.slot = slot;
        e.offset = offset;
        e.size = *type.size;
        offset += *type.size;
      } else {
        if (offset > 0) {
          ++slot;
          offset = 0;
        }
        e.slot = slot;
        e.offset = 0;
        e.size = 32;
        slot += type.slots;
      }
      layout.entries.push_back(std::move(e));
    }
  }
  return layout;
}

std::vector<Finding> compare_layouts(const StorageSlotLayout& v1, const StorageSlotLayout& v2) {
  std::map<std::pair<int, int>, const StorageEntry*> before;
  for (const StorageEntry& e : v1.entries) before[{e.slot, e.offset}] = &e;
  std::vector<Finding> out;
  for (const StorageEntry& e : v2.entries) {
    auto it = before.find({e.slot, e.offset});
    if (it == before.end()) continue;
    const StorageEntry& old = *it->second;
    if (old.type == e.type && old.name == e.name) continue;
    Finding f;
    f.vuln_type = VulnType::StorageCollision;
    f.line = e.line;
    f.contract_name = e.contract;
    f.keywords = vuln_keywords(VulnType::StorageCollision);
    f.detector_id = "storage-layout";
    const std::string where = "slot " + std::to_string(e.slot) + " offset " + std::to_string(e.offset);
    if (old.type != e.type) {
      f.severity = Severity::High;
      f.description = where + " changes from " + old.type + " " + old.name + " to " + e.type + " " + e.name;
    } else {
      f.severity = Severity::Medium;
      f.description = where + " renamed from " + old.name + " to " + e.name;
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace proxydiff
