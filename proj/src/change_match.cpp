#include "proxydiff/change_match.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>
#include <set>

namespace proxydiff {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

bool contains_word(std::string_view text, std::string_view word) {
  for (std::size_t at = text.find(word); at != std::string_view::npos; at = text.find(word, at + 1)) {
    const bool left = at == 0 || !word_char(text[at - 1]);
    const std::size_t end = at + word.size();
    const bool right = end >= text.size() || !word_char(text[end]);
    if (left && right) return true;
  }
  return false;
}

std::string window(std::string_view source, int center, int radius) {
  std::string out;
  int line = 1;
  std::size_t start = 0;
  while (start <= source.size()) {
    std::size_t nl = source.find('\n', start);
    if (nl == std::string_view::npos) nl = source.size();
    if (line >= center - radius && line <= center + radius) {
      out.append(source.substr(start, nl - start));
      out.push_back('\n');
    }
    if (line > center + radius || nl == source.size()) break;
    start = nl + 1;
    ++line;
  }
  return out;
}

/// Identifier tokens of a snippet; dotted chains are kept whole as well as split.
std::set<std::string> tokens(std::string_view text) {
  std::set<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!(std::isalpha(static_cast<unsigned char>(text[i])) || text[i] == '_' || text[i] == '$')) {
      ++i;
      continue;
    }
    std::size_t j = i;
    std::string chain;
    for (;;) {
      const std::size_t part_start = j;
      while (j < text.size() && (word_char(text[j]) || text[j] == '$')) ++j;
      const std::string part = lower(text.substr(part_start, j - part_start));
      out.insert(part);
      chain += chain.empty() ? part : "." + part;
      if (j + 1 < text.size() && text[j] == '.' &&
          (std::isalpha(static_cast<unsigned char>(text[j + 1])) || text[j + 1] == '_')) {
        ++j;
        continue;
      }
      break;
    }
    out.insert(chain);
    i = j;
  }
  return out;
}

struct Relevance {
  std::set<std::string> strong;
  std::set<std::string> weak;
};

const std::map<VulnType, Relevance>& relevance_table() {
  static const std::map<VulnType, Relevance> table = {
      {VulnType::Reentrancy,
       {{"FunctionCall", "MemberAccess", "FunctionCallOptions"},
        {"Assignment", "ExpressionStatement", "VariableDeclarationStatement", "FunctionDefinition", "Block"}}},
      {VulnType::AccessControl,
       {{"ExpressionStatement", "FunctionCall", "ModifierInvocation", "IfStatement", "BinaryOperation",
         "IdentifierPath"},
        {"Identifier", "MemberAccess", "FunctionDefinition", "Block"}}},
      {VulnType::IntegerOverflow,
       {{"BinaryOperation", "Assignment", "UncheckedBlock", "UnaryOperation"},
        {"FunctionCall", "MemberAccess", "PragmaDirective", "Identifier", "ExpressionStatement"}}},
      {VulnType::TxOriginAuth,
       {{"MemberAccess", "BinaryOperation"}, {"FunctionCall", "Identifier", "IfStatement", "ExpressionStatement"}}},
      {VulnType::UnprotectedDelegatecall,
       {{"FunctionCall", "MemberAccess", "FunctionDefinition"},
        {"ParameterList", "VariableDeclaration", "Identifier", "Block", "ExpressionStatement",
         "VariableDeclarationStatement"}}},
      {VulnType::UninitializedProxy,
       {{"ModifierInvocation", "FunctionDefinition", "IdentifierPath"},
        {"FunctionCall", "Assignment", "IfStatement", "Identifier", "ExpressionStatement"}}},
      {VulnType::StorageCollision,
       {{"VariableDeclaration", "ElementaryTypeName", "Mapping", "ArrayTypeName", "UserDefinedTypeName"},
        {"ContractDefinition", "InheritanceSpecifier", "IdentifierPath"}}},
      {VulnType::UnprotectedUpgrade,
       {{"ModifierInvocation", "FunctionDefinition", "IdentifierPath"},
        {"FunctionCall", "ExpressionStatement", "IfStatement", "Identifier"}}},
  };
  return table;
}

std::size_t type_column(VulnType type) { return static_cast<std::size_t>(type); }

}  // namespace

double position_score(int line_distance) {
  const int d = std::abs(line_distance);
  if (d == 0) return 1.0;
  if (d <= 2) return 0.8;
  if (d <= 5) return 0.5;
  if (d <= 10) return 0.2;
  return 0.1;
}

double position_score(const ChangeRecord& change, const Finding& finding) {
  return position_score(change.line - finding.line);
}

double pattern_score(const ChangeRecord& change, const Finding& finding, std::string_view source) {
  const std::string text = lower(window(source, change.line, 5));
  int count = 0;
  for (const std::string& kw : finding.keywords)
    if (contains_word(text, lower(kw))) ++count;
  return std::min(1.0, count * 0.1);
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

double name_similarity(std::string_view a, std::string_view b) {
  const std::string x = lower(a);
  const std::string y = lower(b);
  const std::size_t longest = std::max(x.size(), y.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(x, y)) / static_cast<double>(longest);
}

double node_type_relevance(std::string_view node_kind, VulnType type) {
  const Relevance& r = relevance_table().at(type);
  const std::string kind(node_kind);
  if (r.strong.count(kind)) return 1.0;
  if (r.weak.count(kind)) return 0.5;
  return 0.0;
}

double op_similarity(EditKind op, VulnType type) {
  // Columns follow VulnType declaration order.
  static constexpr double kTable[4][8] = {
      /* Insert */ {1.0, 0.5, 0.5, 1.0, 1.0, 0.5, 1.0, 0.5},
      /* Delete */ {0.5, 1.0, 0.5, 0.0, 0.5, 1.0, 1.0, 1.0},
      /* Update */ {0.5, 0.5, 1.0, 1.0, 0.5, 0.5, 1.0, 0.5},
      /* Move   */ {1.0, 0.5, 0.5, 0.0, 0.5, 0.5, 1.0, 0.5},
  };
  return kTable[static_cast<std::size_t>(op)][type_column(type)];
}

SemanticFeatures semantic_features(const ChangeRecord& change, const Finding& finding) {
  SemanticFeatures f;
  if (change.function_name && finding.function_name)
    f.function_name = name_similarity(*change.function_name, *finding.function_name);
  f.node_type = node_type_relevance(change.node_kind, finding.vuln_type);

  std::set<std::string> change_tokens = tokens(change.snippet);
  for (const std::string& id : change.identifiers) change_tokens.insert(lower(id));
  std::set<std::string> keywords;
  for (const std::string& kw : finding.keywords) keywords.insert(lower(kw));
  std::size_t common = 0;
  for (const std::string& kw : keywords) common += change_tokens.count(kw);
  const std::size_t united = change_tokens.size() + keywords.size() - common;
  f.keyword_overlap = united == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(united);

  f.op_similarity = op_similarity(change.op, finding.vuln_type);

  const std::string snippet = lower(change.snippet);
  for (const std::string& kw : vuln_keywords(finding.vuln_type))
    if (snippet.find(kw) != std::string::npos) {
      f.trait_match = 1.0;
      break;
    }

  const bool same_contract = change.contract_name && finding.contract_name &&
                             *change.contract_name == *finding.contract_name;
  if (same_contract && change.function_name && finding.function_name &&
      *change.function_name == *finding.function_name) {
    f.impact_area = 1.0;
  } else if (same_contract) {
    f.impact_area = 0.5;
  }
  return f;
}

double semantic_score(const SemanticFeatures& f, const SemanticWeights& w) {
  return std::min(1.0, w.function_name * f.function_name + w.node_type * f.node_type +
                           w.keyword_overlap * f.keyword_overlap + w.op_similarity * f.op_similarity +
                           w.trait_match * f.trait_match + w.impact_area * f.impact_area);
}

std::pair<double, SemanticFeatures> semantic_score(const ChangeRecord& change, const Finding& finding) {
  SemanticFeatures f = semantic_features(change, finding);
  return {semantic_score(f), f};
}

double type_score(EditKind op, VulnType type) {
  if (op == EditKind::Move) return 0.4;
  if (op == EditKind::Delete && type == VulnType::AccessControl) return 0.9;
  if (op == EditKind::Insert && type == VulnType::Reentrancy) return 0.8;
  if (op == EditKind::Update && type == VulnType::IntegerOverflow) return 0.7;
  if (op == EditKind::Insert && type == VulnType::UnprotectedDelegatecall) return 0.8;
  if (op == EditKind::Delete && type == VulnType::UninitializedProxy) return 0.8;
  if (op == EditKind::Update && type == VulnType::AccessControl) return 0.6;
  return 0.1;
}

double type_score(const ChangeRecord& change, const Finding& finding) {
  return type_score(change.op, finding.vuln_type);
}

double confidence(const DimensionScores& s, const MatchWeights& w) {
  return std::min(1.0, w.position * s.position + w.pattern * s.pattern + w.semantic * s.semantic +
                           w.type * s.type);
}

MatchPair score_pair(const ChangeRecord& change, const Finding& finding, std::string_view source,
                     const MatchOptions& options) {
  MatchPair p;
  p.change_id = change.change_id;
  p.finding_id = finding.finding_id;
  p.scores.position = position_score(change, finding);
  p.scores.pattern = pattern_score(change, finding, source);
  if (options.enhanced) {
    p.features = semantic_features(change, finding);
    p.scores.semantic = semantic_score(p.features);
  }
  p.scores.type = type_score(change, finding);
  p.confidence = confidence(p.scores);
  return p;
}

std::vector<MatchPair> match_all(const std::vector<ChangeRecord>& changes,
                                 const std::vector<Finding>& findings, std::string_view v2_source,
                                 std::string_view v1_source, const MatchOptions& options) {
  std::vector<MatchPair> out;
  for (const ChangeRecord& c : changes) {
    const std::string_view source = c.side == Side::V1 ? v1_source : v2_source;
    for (const Finding& f : findings) {
      MatchPair p = score_pair(c, f, source, options);
      if (p.confidence > options.threshold) out.push_back(p);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const MatchPair& a, const MatchPair& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return std::pair(a.change_id, a.finding_id) < std::pair(b.change_id, b.finding_id);
  });
  return out;
}

}  // namespace proxydiff
