#include "proxydiff/vuln_detect.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>

namespace proxydiff {

std::string_view to_string(VulnType type) {
  switch (type) {
    case VulnType::Reentrancy: return "Reentrancy";
    case VulnType::AccessControl: return "AccessControl";
    case VulnType::IntegerOverflow: return "IntegerOverflow";
    case VulnType::TxOriginAuth: return "TxOriginAuth";
    case VulnType::UnprotectedDelegatecall: return "UnprotectedDelegatecall";
    case VulnType::UninitializedProxy: return "UninitializedProxy";
    case VulnType::StorageCollision: return "StorageCollision";
    case VulnType::UnprotectedUpgrade: return "UnprotectedUpgrade";
  }
  return "Reentrancy";
}

std::optional<VulnType> parse_vuln_type(std::string_view s) {
  for (VulnType t : kAllVulnTypes)
    if (to_string(t) == s) return t;
  return std::nullopt;
}

std::string_view to_string(Severity severity) {
  switch (severity) {
    case Severity::High: return "High";
    case Severity::Medium: return "Medium";
    case Severity::Low: return "Low";
  }
  return "Low";
}

const std::set<std::string>& vuln_keywords(VulnType type) {
  static const std::map<VulnType, std::set<std::string>> table = {
      {VulnType::Reentrancy, {"call", "send", "transfer", "balance", "withdraw", "nonreentrant"}},
      {VulnType::AccessControl, {"owner", "onlyowner", "admin", "require", "msg.sender", "auth"}},
      {VulnType::IntegerOverflow,
       {"unchecked", "safemath", "overflow", "underflow", "amount", "balance", "totalsupply", "add",
        "sub", "mul"}},
      {VulnType::TxOriginAuth, {"tx.origin", "origin", "tx", "owner", "require", "auth"}},
      {VulnType::UnprotectedDelegatecall,
       {"delegatecall", "target", "data", "call", "implementation", "address"}},
      {VulnType::UninitializedProxy,
       {"initialize", "initializer", "initialized", "init", "owner", "constructor"}},
      {VulnType::StorageCollision,
       {"uint256", "address", "mapping", "bool", "bytes32", "string", "storage", "slot"}},
      {VulnType::UnprotectedUpgrade,
       {"upgradeto", "implementation", "upgrade", "proxy", "admin", "owner"}},
  };
  return table.at(type);
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool contains_any(std::string_view haystack, std::initializer_list<std::string_view> needles) {
  for (std::string_view n : needles)
    if (haystack.find(n) != std::string_view::npos) return true;
  return false;
}

// --- AST helpers ----------------------------------------------------------------

const AstNode* child_with_tag(const Ast& ast, const AstNode& n, std::string_view tag) {
  for (NodeId c : n.children)
    if (ast.node(c).tag == tag) return &ast.node(c);
  return nullptr;
}

/// The Identifier or MemberAccess (`msg.sender`) a node denotes, skipping
/// casts and parentheses.
const AstNode& strip_wrappers(const Ast& ast, const AstNode& n) {
  const AstNode* cur = &n;
  for (;;) {
    if (cur->is_tag("TupleExpression") && cur->children.size() == 1) {
      cur = &ast.node(cur->children[0]);
    } else if (cur->is(NodeKind::FunctionCall) && cur->children.size() == 2 &&
               ast.node(cur->children[0]).is_tag("ElementaryTypeNameExpression")) {
      cur = &ast.node(cur->children[1]);  // address(x), payable(x)
    } else {
      return *cur;
    }
  }
}

bool is_member(const Ast& ast, const AstNode& n, std::string_view base, std::string_view member) {
  const AstNode& m = strip_wrappers(ast, n);
  if (!m.is(NodeKind::MemberAccess) || m.label != member || m.children.empty()) return false;
  const AstNode& b = ast.node(m.children[0]);
  return b.is(NodeKind::Identifier) && b.label == base;
}

bool is_msg_sender(const Ast& ast, const AstNode& n) { return is_member(ast, n, "msg", "sender"); }
bool is_tx_origin(const Ast& ast, const AstNode& n) { return is_member(ast, n, "tx", "origin"); }

/// The callee name of a FunctionCall: the Identifier label or the member name.
std::string callee_name(const Ast& ast, const AstNode& call) {
  if (!call.is(NodeKind::FunctionCall) || call.children.empty()) return {};
  const AstNode* callee = &ast.node(call.children[0]);
  if (callee->is_tag("FunctionCallOptions") && !callee->children.empty())
    callee = &ast.node(callee->children[0]);
  if (callee->is(NodeKind::Identifier) || callee->is(NodeKind::MemberAccess)) return callee->label;
  return {};
}

/// Base variable written by an lvalue expression: `a`, `a[i]`, `a.b[i]` all yield `a`.
const AstNode* lvalue_root(const Ast& ast, const AstNode& n) {
  const AstNode* cur = &n;
  for (;;) {
    if (cur->is(NodeKind::Identifier)) return cur;
    if ((cur->is_tag("IndexAccess") || cur->is(NodeKind::MemberAccess) ||
         cur->is_tag("IndexRangeAccess")) &&
        !cur->children.empty()) {
      cur = &ast.node(cur->children[0]);
    } else if (cur->is_tag("TupleExpression") && cur->children.size() == 1) {
      cur = &ast.node(cur->children[0]);
    } else {
      return nullptr;
    }
  }
}

struct StateVar {
  std::string type;
  bool mutable_ = true;
};

/// A FunctionDefinition (or ModifierDefinition) with the context detectors need.
struct FunctionInfo {
  const AstNode* node = nullptr;
  const AstNode* contract = nullptr;
  const AstNode* body = nullptr;
  std::vector<std::string> modifiers;  // lowercased
  std::set<std::string> locals;        // parameters, returns and local variables
  std::set<std::string> params;

  std::string name() const { return node->label; }
  std::string kind() const {
    const std::string* k = node->attr("kind");
    return k ? *k : "function";
  }
  bool externally_callable() const {
    return node->attr_is("visibility", "public") || node->attr_is("visibility", "external");
  }
  bool mutating() const {
    return !node->attr_is("stateMutability", "view") && !node->attr_is("stateMutability", "pure");
  }
  bool has_modifier_containing(std::initializer_list<std::string_view> parts) const {
    for (const std::string& m : modifiers)
      if (contains_any(m, parts)) return true;
    return false;
  }
};

class Context {
 public:
  Context(const Ast& ast, std::string_view source) : ast_(ast), source_(source) {
    for (const AstNode& n : ast.nodes()) {
      if (n.is(NodeKind::VariableDeclaration) && n.attr_is("stateVariable", "true") && !n.label.empty()) {
        StateVar v;
        const std::string* t = n.attr("typeString");
        v.type = t ? *t : "";
        const std::string* m = n.attr("mutability");
        v.mutable_ = !(n.attr_is("constant", "true") || (m && *m != "mutable"));
        state_vars_[n.label] = v;
      }
      if (n.is(NodeKind::FunctionDefinition)) functions_.push_back(describe(n));
    }
  }

  const Ast& ast() const { return ast_; }
  const std::vector<FunctionInfo>& functions() const { return functions_; }

  bool is_state_var(const FunctionInfo& fn, const std::string& name) const {
    return state_vars_.count(name) > 0 && fn.locals.count(name) == 0;
  }
  const StateVar* state_var(const FunctionInfo& fn, const std::string& name) const {
    if (fn.locals.count(name) > 0) return nullptr;
    auto it = state_vars_.find(name);
    return it == state_vars_.end() ? nullptr : &it->second;
  }

  /// The state variable a node writes, if it is a write.
  const AstNode* state_write(const FunctionInfo& fn, const AstNode& n) const {
    const AstNode* target = nullptr;
    if (n.is(NodeKind::Assignment) && !n.children.empty()) {
      target = &ast_.node(n.children[0]);
    } else if (n.is_tag("UnaryOperation") && !n.children.empty() &&
               (n.label == "++" || n.label == "--" || n.label == "delete")) {
      target = &ast_.node(n.children[0]);
    }
    if (target == nullptr) return nullptr;
    const AstNode* root = lvalue_root(ast_, *target);
    if (root == nullptr || !is_state_var(fn, root->label)) return nullptr;
    return root;
  }

  /// Whether an expression subtree checks the caller's identity.
  bool is_auth_condition(NodeId expr) const {
    for (NodeId d : ast_.subtree(expr)) {
      const AstNode& n = ast_.node(d);
      if (n.is_tag("BinaryOperation") && (n.label == "==" || n.label == "!=") && n.children.size() == 2) {
        for (NodeId side : n.children) {
          const AstNode& s = strip_wrappers(ast_, ast_.node(side));
          if (is_msg_sender(ast_, s)) return true;
          if ((s.is(NodeKind::Identifier) || s.is(NodeKind::MemberAccess)) && privileged_name(s.label))
            return true;
          if (s.is(NodeKind::FunctionCall) && privileged_name(callee_name(ast_, s))) return true;
        }
      }
      if (n.is_tag("IndexAccess") && n.children.size() == 2 && is_msg_sender(ast_, ast_.node(n.children[1]))) {
        const AstNode* base = lvalue_root(ast_, ast_.node(n.children[0]));
        if (base && contains_any(lower(base->label), {"admin", "owner", "auth", "role", "operator",
                                                       "whitelist", "allowed", "minter", "governor",
                                                       "keeper", "controller", "wards"}))
          return true;
      }
      if (n.is(NodeKind::FunctionCall) &&
          contains_any(lower(callee_name(ast_, n)), {"hasrole", "isowner", "isadmin", "isauthorized", "isoperator"}))
        return true;
    }
    return false;
  }

  /// Access guard in the modifier list or body.
  bool guarded(const FunctionInfo& fn) const {
    if (fn.has_modifier_containing({"only", "auth", "admin", "owner", "role", "governance", "restricted"}))
      return true;
    if (fn.body == nullptr) return false;
    for (NodeId d : ast_.subtree(fn.body->id)) {
      const AstNode& n = ast_.node(d);
      if (n.is(NodeKind::FunctionCall)) {
        const std::string name = lower(callee_name(ast_, n));
        if ((name == "require" || name == "assert") && n.children.size() >= 2 &&
            is_auth_condition(n.children[1]))
          return true;
        if (name == "_checkowner" || name == "checkowner" || name == "_checkrole" || name == "checkrole" ||
            name == "_onlyowner" || name == "_checkadmin" || name == "_authorizeupgrade" ||
            name == "_requireowner" || name == "_checkauth")
          return true;
      }
      if (n.is(NodeKind::IfStatement) && !n.children.empty() && is_auth_condition(n.children[0])) return true;
    }
    return false;
  }

  Finding make(VulnType type, Severity severity, const AstNode& anchor, const std::string& detector,
               std::string description) const {
    Finding f;
    f.vuln_type = type;
    f.severity = severity;
    f.line = anchor.span.start_line;
    f.function_name = enclosing_function(ast_, f.line);
    f.contract_name = enclosing_contract(ast_, f.line);
    f.description = std::move(description);
    f.keywords = vuln_keywords(type);
    f.detector_id = detector;
    return f;
  }

 private:
  static bool privileged_name(const std::string& name) {
    return contains_any(lower(name), {"owner", "admin", "governance", "governor", "authority", "guardian"});
  }

  FunctionInfo describe(const AstNode& n) const {
    FunctionInfo fn;
    fn.node = &n;
    for (NodeId p = n.parent; p != kNoNode; p = ast_.node(p).parent)
      if (ast_.node(p).is(NodeKind::ContractDefinition)) {
        fn.contract = &ast_.node(p);
        break;
      }
    fn.body = child_with_tag(ast_, n, "Block");
    bool first_list = true;
    for (NodeId c : n.children) {
      const AstNode& child = ast_.node(c);
      if (child.is_tag("ModifierInvocation") && !child.children.empty())
        fn.modifiers.push_back(lower(ast_.node(child.children[0]).label));
      if (child.is_tag("ParameterList")) {
        for (NodeId p : child.children) {
          fn.locals.insert(ast_.node(p).label);
          if (first_list) fn.params.insert(ast_.node(p).label);
        }
        first_list = false;
      }
    }
    if (fn.body)
      for (NodeId d : ast_.subtree(fn.body->id))
        if (ast_.node(d).is(NodeKind::VariableDeclaration)) fn.locals.insert(ast_.node(d).label);
    fn.locals.erase("");
    fn.params.erase("");
    return fn;
  }

  const Ast& ast_;
  std::string_view source_;
  std::map<std::string, StateVar> state_vars_;
  std::vector<FunctionInfo> functions_;
};

bool span_before(const SourceSpan& a, const SourceSpan& b) {
  return std::pair(a.start_line, a.start_col) < std::pair(b.start_line, b.start_col);
}

bool is_upgrade_name(const std::string& name) {
  const std::string l = lower(name);
  return l.rfind("upgradeto", 0) == 0 || l == "setimplementation" || l == "_setimplementation";
}

bool is_initializer_name(const std::string& name) {
  const std::string l = lower(name);
  return l.rfind("initialize", 0) == 0 || l == "init";
}

void dedupe(std::vector<Finding>& findings) {
  std::stable_sort(findings.begin(), findings.end(), [](const Finding& a, const Finding& b) {
    return std::tie(a.line, a.vuln_type, a.severity) < std::tie(b.line, b.vuln_type, b.severity);
  });
  findings.erase(std::unique(findings.begin(), findings.end(),
                             [](const Finding& a, const Finding& b) {
                               return a.line == b.line && a.vuln_type == b.vuln_type;
                             }),
                 findings.end());
}

}  // namespace

// --- Detectors --------------------------------------------------------------------

std::vector<Finding> detect_reentrancy(const Ast& ast, std::string_view source) {
  Context ctx(ast, source);
  std::vector<Finding> out;
  for (const FunctionInfo& fn : ctx.functions()) {
    if (fn.body == nullptr || fn.has_modifier_containing({"nonreentrant", "lock", "mutex"})) continue;
    std::vector<const AstNode*> calls;
    std::vector<const AstNode*> writes;
    for (NodeId d : ast.subtree(fn.body->id)) {
      const AstNode& n = ast.node(d);
      if (n.is(NodeKind::MemberAccess) &&
          (n.label == "call" || n.label == "send" || n.label == "transfer" || n.label == "delegatecall")) {
        // Only value-level calls, not e.g. `token.transfer` taking two arguments.
        const AstNode& parent = ast.node(n.parent);
        const AstNode* call = &parent;
        if (parent.is_tag("FunctionCallOptions") && parent.parent != kNoNode) call = &ast.node(parent.parent);
        const bool low_level = n.label != "transfer" || (call->is(NodeKind::FunctionCall) && call->children.size() == 2);
        if (low_level && call->is(NodeKind::FunctionCall)) calls.push_back(&n);
      }
      if (ctx.state_write(fn, n)) writes.push_back(&n);
    }
    for (const AstNode* call : calls) {
      const bool write_after = std::any_of(writes.begin(), writes.end(), [&](const AstNode* w) {
        return span_before(call->span, w->span) || ast.in_subtree(w->id, call->id);
      });
      if (write_after)
        out.push_back(ctx.make(VulnType::Reentrancy, Severity::High, *call, "reentrancy",
                               "external call via ." + call->label + " in " + fn.name() +
                                   " precedes a state variable update"));
    }
  }
  dedupe(out);
  return out;
}

std::vector<Finding> detect_access_control(const Ast& ast, std::string_view source) {
  Context ctx(ast, source);
  std::vector<Finding> out;
  for (const FunctionInfo& fn : ctx.functions()) {
    if (fn.body == nullptr || fn.kind() != "function" || !fn.externally_callable() || !fn.mutating())
      continue;
    if (is_initializer_name(fn.name()) || is_upgrade_name(fn.name()) ||
        fn.has_modifier_containing({"initializ"}))
      continue;
    if (fn.contract && fn.contract->attr_is("contractKind", "library")) continue;
    std::string written;
    for (NodeId d : ast.subtree(fn.body->id)) {
      const AstNode* root = ctx.state_write(fn, ast.node(d));
      if (root == nullptr) continue;
      const StateVar* v = ctx.state_var(fn, root->label);
      if (v && v->type.rfind("mapping", 0) != 0) {
        written = root->label;
        break;
      }
    }
    if (written.empty() || ctx.guarded(fn)) continue;
    out.push_back(ctx.make(VulnType::AccessControl, Severity::Medium, *fn.node, "access-control",
                           fn.name() + " updates state variable " + written +
                               " without an ownership or role check"));
  }
  dedupe(out);
  return out;
}

namespace {

/// Lowest compiler version allowed by the file's pragma, as (major, minor).
std::optional<std::pair<int, int>> pragma_floor(const Ast& ast) {
  static const std::regex version(R"((\d+)\.(\d+))");
  for (const AstNode& n : ast.nodes()) {
    if (!n.is(NodeKind::PragmaDirective) || n.label.rfind("solidity", 0) != 0) continue;
    std::smatch m;
    if (std::regex_search(n.label, m, version)) return std::pair(std::stoi(m[1]), std::stoi(m[2]));
  }
  return std::nullopt;
}

bool inside_tag(const Ast& ast, const AstNode& n, std::string_view tag) {
  for (NodeId p = n.parent; p != kNoNode; p = ast.node(p).parent)
    if (ast.node(p).tag == tag) return true;
  return false;
}

const AstNode* enclosing_contract_node(const Ast& ast, const AstNode& n) {
  for (NodeId p = n.parent; p != kNoNode; p = ast.node(p).parent)
    if (ast.node(p).is(NodeKind::ContractDefinition)) return &ast.node(p);
  return nullptr;
}

}  // namespace

std::vector<Finding> detect_overflow(const Ast& ast, std::string_view source) {
  Context ctx(ast, source);
  const auto floor = pragma_floor(ast);
  const bool legacy = floor && floor->first == 0 && floor->second < 8;
  std::vector<Finding> out;
  for (const AstNode& n : ast.nodes()) {
    const bool binary = n.is_tag("BinaryOperation") && (n.label == "+" || n.label == "-" || n.label == "*");
    const bool compound = n.is(NodeKind::Assignment) && (n.label == "+=" || n.label == "-=" || n.label == "*=");
    if (!binary && !compound) continue;
    if (std::all_of(n.children.begin(), n.children.end(),
                    [&](NodeId c) { return ast.node(c).is(NodeKind::Literal); }))
      continue;
    const std::string* type = n.attr("typeString");
    if (type && !type->empty() && type->rfind("uint", 0) != 0 && type->rfind("int", 0) != 0) continue;
    const bool unchecked = inside_tag(ast, n, "UncheckedBlock");
    if (!legacy && !unchecked) continue;
    const AstNode* contract = enclosing_contract_node(ast, n);
    if (legacy && !unchecked && contract && contract->attr_is("contractKind", "library") &&
        lower(contract->label).find("math") != std::string::npos)
      continue;
    if (!inside_tag(ast, n, "FunctionDefinition") && !inside_tag(ast, n, "ModifierDefinition")) continue;
    out.push_back(ctx.make(VulnType::IntegerOverflow, Severity::Medium, n, "integer-overflow",
                           std::string("unchecked arithmetic '") + n.label + "'" +
                               (unchecked ? " inside an unchecked block" : " under a pre-0.8 compiler")));
  }
  dedupe(out);
  return out;
}

std::vector<Finding> detect_tx_origin(const Ast& ast, std::string_view source) {
  Context ctx(ast, source);
  std::vector<Finding> out;
  for (const AstNode& n : ast.nodes()) {
    if (!n.is_tag("BinaryOperation") || (n.label != "==" && n.label != "!=") || n.children.size() != 2)
      continue;
    const AstNode& a = ast.node(n.children[0]);
    const AstNode& b = ast.node(n.children[1]);
    const bool origin_a = is_tx_origin(ast, a);
    const bool origin_b = is_tx_origin(ast, b);
    if (!origin_a && !origin_b) continue;
    if (is_msg_sender(ast, origin_a ? b : a)) continue;  // EOA check, not authentication
    out.push_back(ctx.make(VulnType::TxOriginAuth, Severity::Medium, n, "tx-origin",
                           "authorization compares tx.origin"));
  }
  dedupe(out);
  return out;
}

std::vector<Finding> detect_delegatecall(const Ast& ast, std::string_view source) {
  Context ctx(ast, source);
  std::vector<Finding> out;
  for (const FunctionInfo& fn : ctx.functions()) {
    if (fn.body == nullptr) continue;
    for (NodeId d : ast.subtree(fn.body->id)) {
      const AstNode& n = ast.node(d);
      if (!n.is(NodeKind::MemberAccess) || n.label != "delegatecall" || n.children.empty()) continue;
      bool from_param = false;
      bool from_state = false;
      for (NodeId t : ast.subtree(n.children[0])) {
        const AstNode& id = ast.node(t);
        if (!id.is(NodeKind::Identifier)) continue;
        if (fn.params.count(id.label)) from_param = true;
        const StateVar* v = ctx.state_var(fn, id.label);
        if (v && v->mutable_) from_state = true;
      }
      const bool entry_point = fn.kind() == "fallback" || fn.kind() == "receive";
      const bool tainted = (from_param && fn.externally_callable()) || (from_state && !entry_point);
      if (!tainted || ctx.guarded(fn)) continue;
      out.push_back(ctx.make(VulnType::UnprotectedDelegatecall, Severity::High, n, "delegatecall",
                             "delegatecall target in " + fn.name() + " is caller-influenced and unguarded"));
    }
  }
  dedupe(out);
  return out;
}

std::vector<Finding> detect_uninitialized_proxy(const Ast& ast, std::string_view source) {
  Context ctx(ast, source);
  std::vector<Finding> out;
  std::map<const AstNode*, bool> has_initializer;
  std::map<const AstNode*, bool> locked;
  for (const FunctionInfo& fn : ctx.functions()) {
    if (fn.contract == nullptr) continue;
    if (fn.kind() == "constructor" && fn.body) {
      for (NodeId d : ast.subtree(fn.body->id)) {
        const AstNode& n = ast.node(d);
        if (n.is(NodeKind::FunctionCall) && lower(callee_name(ast, n)) == "_disableinitializers")
          locked[fn.contract] = true;
        if (n.is(NodeKind::Assignment) && n.children.size() == 2) {
          const AstNode* root = lvalue_root(ast, ast.node(n.children[0]));
          if (root && lower(root->label).find("initialized") != std::string::npos) locked[fn.contract] = true;
        }
      }
    }
    if (fn.kind() != "function" || !fn.externally_callable() || !is_initializer_name(fn.name())) continue;
    has_initializer[fn.contract] = true;
    if (fn.has_modifier_containing({"initializer"}) || ctx.guarded(fn)) continue;
    bool flag_checked = false;
    if (fn.body) {
      for (NodeId d : ast.subtree(fn.body->id)) {
        const AstNode& n = ast.node(d);
        NodeId cond = kNoNode;
        if (n.is(NodeKind::FunctionCall) && n.children.size() >= 2 &&
            (callee_name(ast, n) == "require" || callee_name(ast, n) == "assert"))
          cond = n.children[1];
        if (n.is(NodeKind::IfStatement) && !n.children.empty()) cond = n.children[0];
        if (cond == kNoNode) continue;
        for (NodeId c : ast.subtree(cond))
          if (ast.node(c).is(NodeKind::Identifier) && lower(ast.node(c).label).find("initialized") != std::string::npos)
            flag_checked = true;
      }
    }
    if (flag_checked) continue;
    out.push_back(ctx.make(VulnType::UninitializedProxy, Severity::High, *fn.node, "uninitialized-proxy",
                           fn.name() + " can be called by anyone and has no initialization guard"));
  }
  for (const auto& [contract, present] : has_initializer) {
    if (!present || locked.count(contract) || contract->attr_is("abstract", "true")) continue;
    out.push_back(ctx.make(VulnType::UninitializedProxy, Severity::Low, *contract, "uninitialized-proxy",
                           "logic contract " + contract->label + " does not lock its initializer in the constructor"));
  }
  dedupe(out);
  return out;
}

std::vector<Finding> detect_unprotected_upgrade(const Ast& ast, std::string_view source) {
  Context ctx(ast, source);
  std::vector<Finding> out;
  for (const FunctionInfo& fn : ctx.functions()) {
    if (fn.body == nullptr || fn.kind() != "function") continue;
    const bool authorize_hook = lower(fn.name()) == "_authorizeupgrade";
    if (!authorize_hook && !(is_upgrade_name(fn.name()) && fn.externally_callable())) continue;
    if (ctx.guarded(fn)) continue;
    out.push_back(ctx.make(VulnType::UnprotectedUpgrade, Severity::High, *fn.node, "unprotected-upgrade",
                           fn.name() + " changes the implementation without an access guard"));
  }
  dedupe(out);
  return out;
}

std::vector<Finding> detect(const Ast& ast, std::string_view source) {
  std::vector<Finding> all;
  for (auto* detector : {detect_reentrancy, detect_access_control, detect_overflow, detect_tx_origin,
                         detect_delegatecall, detect_uninitialized_proxy, detect_unprotected_upgrade}) {
    std::vector<Finding> found = detector(ast, source);
    all.insert(all.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
  }
  std::stable_sort(all.begin(), all.end(), [](const Finding& a, const Finding& b) {
    return std::tie(a.line, a.vuln_type) < std::tie(b.line, b.vuln_type);
  });
  for (std::size_t i = 0; i < all.size(); ++i) all[i].finding_id = static_cast<int>(i);
  return all;
}

}  // namespace proxydiff
