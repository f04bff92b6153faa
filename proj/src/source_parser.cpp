#include "proxydiff/source_parser.hpp"

#include <array>
#include <cctype>
#include <optional>

#include "proxydiff/error.hpp"

namespace proxydiff {

namespace {

// --- Lexer ---------------------------------------------------------------------

enum class Tok { Ident, Number, String, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
};

constexpr std::array<std::string_view, 29> kPuncts = {
    ">>>=", "<<=", ">>=", ">>>", "**", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=",
    "*=",   "/=",  "%=",  "|=",  "&=", "^=", "<<", ">>", "=>", "->", ":=", "..", "**=", "...",
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }
bool ident_char(char c) { return ident_start(c) || std::isdigit(static_cast<unsigned char>(c)); }

class Lexer {
 public:
  Lexer(std::string_view src, const LineIndex& index) : src_(src), index_(index) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_trivia();
      if (pos_ >= src_.size()) break;
      out.push_back(next());
    }
    out.push_back(Token{Tok::End, "", src_.size(), src_.size()});
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(index_.line_of(pos_)) + ": " + what);
  }

  void skip_trivia() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (src_.substr(pos_, 2) == "//") {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (src_.substr(pos_, 2) == "/*") {
        const std::size_t close = src_.find("*/", pos_ + 2);
        if (close == std::string_view::npos) fail("unterminated comment");
        pos_ = close + 2;
      } else {
        break;
      }
    }
  }

  std::size_t scan_string(std::size_t at) {
    const char quote = src_[at];
    std::size_t i = at + 1;
    while (i < src_.size() && src_[i] != quote) {
      if (src_[i] == '\\') ++i;
      if (i < src_.size() && src_[i] == '\n') fail("newline in string literal");
      ++i;
    }
    if (i >= src_.size()) fail("unterminated string literal");
    return i + 1;
  }

  Token next() {
    const std::size_t start = pos_;
    const char c = src_[pos_];
    if (ident_start(c)) {
      while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
      const std::string_view word = src_.substr(start, pos_ - start);
      if ((word == "hex" || word == "unicode") && pos_ < src_.size() &&
          (src_[pos_] == '"' || src_[pos_] == '\'')) {
        pos_ = scan_string(pos_);
        return {Tok::String, std::string(src_.substr(start, pos_ - start)), start, pos_};
      }
      return {Tok::Ident, std::string(word), start, pos_};
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      if (src_.substr(pos_, 2) == "0x" || src_.substr(pos_, 2) == "0X") {
        pos_ += 2;
        while (pos_ < src_.size() && (std::isxdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
      } else {
        while (pos_ < src_.size()) {
          const char d = src_[pos_];
          if (std::isdigit(static_cast<unsigned char>(d)) || d == '_' || d == '.') {
            ++pos_;
          } else if ((d == 'e' || d == 'E') && pos_ + 1 < src_.size() &&
                     (std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])) || src_[pos_ + 1] == '-')) {
            pos_ += 2;
          } else {
            break;
          }
        }
      }
      return {Tok::Number, std::string(src_.substr(start, pos_ - start)), start, pos_};
    }
    if (c == '"' || c == '\'') {
      pos_ = scan_string(pos_);
      return {Tok::String, std::string(src_.substr(start, pos_ - start)), start, pos_};
    }
    std::string_view best;
    for (std::string_view p : kPuncts)
      if (p.size() > best.size() && src_.substr(pos_, p.size()) == p) best = p;
    if (best.empty()) best = src_.substr(pos_, 1);
    pos_ += best.size();
    return {Tok::Punct, std::string(best), start, pos_};
  }

  std::string_view src_;
  const LineIndex& index_;
  std::size_t pos_ = 0;
};

// --- Parser --------------------------------------------------------------------

bool is_elementary(std::string_view w) {
  if (w == "address" || w == "bool" || w == "string" || w == "bytes" || w == "byte" ||
      w == "uint" || w == "int" || w == "fixed" || w == "ufixed" || w == "payable")
    return true;
  auto numeric_suffix = [&](std::string_view prefix) {
    if (w.substr(0, prefix.size()) != prefix || w.size() == prefix.size()) return false;
    for (char ch : w.substr(prefix.size()))
      if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
    return true;
  };
  return numeric_suffix("uint") || numeric_suffix("int") || numeric_suffix("bytes");
}

std::string canonical_elementary(const std::string& w) {
  if (w == "uint") return "uint256";
  if (w == "int") return "int256";
  if (w == "byte") return "bytes1";
  return w;
}

bool is_location(std::string_view w) { return w == "memory" || w == "storage" || w == "calldata"; }

struct Node {
  DraftNode draft;
  std::string type_string;  // for type-name nodes only
};

class Parser {
 public:
  Parser(std::string_view src, std::vector<Token> toks)
      : src_(src), index_(src), toks_(std::move(toks)) {}

  DraftNode source_unit() {
    DraftNode unit;
    unit.tag = "SourceUnit";
    unit.span = index_.span_of(0, src_.size());
    while (!at_end()) {
      if (is("pragma")) {
        unit.children.push_back(pragma());
      } else if (is("import")) {
        unit.children.push_back(import_directive());
      } else if (is("contract") || is("interface") || is("library") || is("abstract")) {
        unit.children.push_back(contract());
      } else if (is(";")) {
        advance();
      } else {
        unit.children.push_back(member(""));
      }
    }
    return unit;
  }

 private:
  // -- token helpers --
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool at_end() const { return peek().kind == Tok::End; }
  bool is(std::string_view text, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind != Tok::End && t.kind != Tok::String && t.text == text;
  }
  bool is_ident(std::size_t ahead = 0) const { return peek(ahead).kind == Tok::Ident; }
  const Token& advance() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool accept(std::string_view text) {
    if (!is(text)) return false;
    advance();
    return true;
  }
  const Token& expect(std::string_view text) {
    if (!is(text)) fail("expected '" + std::string(text) + "'");
    return advance();
  }
  const Token& expect_ident() {
    if (!is_ident()) fail("expected identifier");
    return advance();
  }
  [[noreturn]] void fail(const std::string& what) const {
    const Token& t = peek();
    throw Error(ErrorCode::ParseError, "line " + std::to_string(index_.line_of(t.begin)) + ": " +
                                           what + ", found '" + t.text + "'");
  }
  std::size_t prev_end() const { return pos_ == 0 ? 0 : toks_[pos_ - 1].end; }

  DraftNode make(std::string tag, std::string label, std::size_t begin) const {
    DraftNode n;
    n.tag = std::move(tag);
    n.label = std::move(label);
    const std::size_t end = std::max(prev_end(), begin + 1);
    n.span = index_.span_of(begin, std::min(end, src_.size()) - begin);
    return n;
  }

  // Skips a balanced bracket group starting at the current open token.
  void skip_balanced() {
    int depth = 0;
    do {
      if (at_end()) fail("unbalanced brackets");
      const std::string& t = advance().text;
      if (t == "{" || t == "(" || t == "[") ++depth;
      if (t == "}" || t == ")" || t == "]") --depth;
    } while (depth > 0);
  }
  void skip_to_semicolon() {
    while (!at_end() && !is(";")) {
      if (is("{") || is("(") || is("[")) {
        skip_balanced();
      } else {
        advance();
      }
    }
    expect(";");
  }

  // -- top level --
  DraftNode pragma() {
    const std::size_t begin = peek().begin;
    advance();
    std::string text;
    const std::string name = expect_ident().text;
    std::string rest;
    while (!at_end() && !is(";")) rest += advance().text;
    expect(";");
    text = rest.empty() ? name : name + " " + rest;
    return make("PragmaDirective", text, begin);
  }

  DraftNode import_directive() {
    const std::size_t begin = peek().begin;
    std::string file;
    while (!at_end() && !is(";")) {
      const Token& t = advance();
      if (t.kind == Tok::String && file.empty()) file = t.text.substr(1, t.text.size() - 2);
    }
    expect(";");
    return make("ImportDirective", file, begin);
  }

  DraftNode identifier_path() {
    const std::size_t begin = peek().begin;
    std::string name = expect_ident().text;
    while (is(".") && is_ident(1)) {
      advance();
      name += "." + advance().text;
    }
    return make("IdentifierPath", name, begin);
  }

  DraftNode contract() {
    const std::size_t begin = peek().begin;
    bool is_abstract = accept("abstract");
    const std::string kind = advance().text;
    const std::string name = expect_ident().text;
    std::vector<DraftNode> children;
    if (accept("is")) {
      do {
        const std::size_t spec_begin = peek().begin;
        DraftNode base = identifier_path();
        std::vector<DraftNode> args;
        if (is("(")) {
          advance();
          args = call_arguments(")");
        }
        DraftNode inherit = make("InheritanceSpecifier", "", spec_begin);
        inherit.children.push_back(std::move(base));
        for (auto& a : args) inherit.children.push_back(std::move(a));
        children.push_back(std::move(inherit));
      } while (accept(","));
    }
    expect("{");
    while (!is("}")) {
      if (at_end()) fail("unterminated contract body");
      if (accept(";")) continue;
      children.push_back(member(name));
    }
    expect("}");
    DraftNode c = make("ContractDefinition", name, begin);
    c.attrs["contractKind"] = kind;
    c.attrs["abstract"] = is_abstract ? "true" : "false";
    c.children = std::move(children);
    return c;
  }

  DraftNode member(const std::string& contract_name) {
    if (is("function") || is("constructor") || is("fallback") || is("receive"))
      return function_definition();
    if (is("modifier")) return modifier_definition();
    if (is("struct")) return struct_definition();
    if (is("enum")) return enum_definition();
    if (is("event") || is("error")) return event_or_error();
    if (is("using")) {
      const std::size_t begin = peek().begin;
      skip_to_semicolon();
      return make("UsingForDirective", "", begin);
    }
    if (is("type") && is_ident(1) && is("is", 2)) {
      const std::size_t begin = peek().begin;
      advance();
      const std::string name = advance().text;
      advance();
      Node underlying = type_name();
      expect(";");
      DraftNode n = make("UserDefinedValueTypeDefinition", name, begin);
      n.children.push_back(std::move(underlying.draft));
      return n;
    }
    (void)contract_name;
    DraftNode var = variable_declaration(true);
    expect(";");
    return var;
  }

  DraftNode struct_definition() {
    const std::size_t begin = peek().begin;
    advance();
    const std::string name = expect_ident().text;
    expect("{");
    std::vector<DraftNode> fields;
    while (!accept("}")) {
      if (at_end()) fail("unterminated struct");
      fields.push_back(variable_declaration(false));
      expect(";");
    }
    DraftNode n = make("StructDefinition", name, begin);
    n.children = std::move(fields);
    return n;
  }

  DraftNode enum_definition() {
    const std::size_t begin = peek().begin;
    advance();
    const std::string name = expect_ident().text;
    expect("{");
    std::vector<DraftNode> values;
    while (!accept("}")) {
      if (at_end()) fail("unterminated enum");
      const std::size_t vb = peek().begin;
      const std::string v = expect_ident().text;
      values.push_back(make("EnumValue", v, vb));
      accept(",");
    }
    DraftNode n = make("EnumDefinition", name, begin);
    n.children = std::move(values);
    return n;
  }

  DraftNode event_or_error() {
    const std::size_t begin = peek().begin;
    const std::string tag = advance().text == "event" ? "EventDefinition" : "ErrorDefinition";
    const std::string name = expect_ident().text;
    DraftNode params = parameter_list();
    accept("anonymous");
    expect(";");
    DraftNode n = make(tag, name, begin);
    n.children.push_back(std::move(params));
    return n;
  }

  DraftNode parameter_list() {
    const std::size_t begin = peek().begin;
    expect("(");
    std::vector<DraftNode> params;
    while (!is(")")) {
      if (at_end()) fail("unterminated parameter list");
      params.push_back(variable_declaration(false));
      if (!accept(",")) break;
    }
    expect(")");
    DraftNode n = make("ParameterList", "", begin);
    n.children = std::move(params);
    return n;
  }

  DraftNode modifier_invocation() {
    const std::size_t begin = peek().begin;
    DraftNode name = identifier_path();
    std::vector<DraftNode> args;
    if (accept("(")) args = call_arguments(")");
    DraftNode n = make("ModifierInvocation", "", begin);
    n.children.push_back(std::move(name));
    for (auto& a : args) n.children.push_back(std::move(a));
    return n;
  }

  DraftNode override_specifier() {
    const std::size_t begin = peek().begin;
    advance();
    std::vector<DraftNode> paths;
    if (accept("(")) {
      while (!accept(")")) {
        paths.push_back(identifier_path());
        accept(",");
      }
    }
    DraftNode n = make("OverrideSpecifier", "", begin);
    n.children = std::move(paths);
    return n;
  }

  DraftNode function_definition() {
    const std::size_t begin = peek().begin;
    const std::string keyword = advance().text;
    std::string name;
    std::string kind = keyword;
    if (keyword == "function") {
      if (is_ident()) name = advance().text;
      if (name == "fallback" || name == "receive") kind = name, name.clear();
    }
    std::vector<DraftNode> children;
    children.push_back(parameter_list());
    std::string visibility;
    std::string mutability = "nonpayable";
    bool is_virtual = false;
    while (!is("{") && !is(";") && !is("returns")) {
      if (at_end()) fail("unterminated function header");
      if (is("public") || is("external") || is("internal") || is("private")) {
        visibility = advance().text;
      } else if (is("view") || is("pure") || is("payable") || is("constant")) {
        mutability = advance().text == "constant" ? "view" : toks_[pos_ - 1].text;
      } else if (is("virtual")) {
        advance();
        is_virtual = true;
      } else if (is("override")) {
        children.push_back(override_specifier());
      } else if (is_ident()) {
        children.push_back(modifier_invocation());
      } else {
        fail("unexpected token in function header");
      }
    }
    if (accept("returns")) children.push_back(parameter_list());
    bool implemented = false;
    if (is("{")) {
      children.push_back(block());
      implemented = true;
    } else {
      expect(";");
    }
    if (visibility.empty()) visibility = kind == "function" ? "public" : (kind == "constructor" ? "public" : "external");
    DraftNode n = make("FunctionDefinition", name.empty() ? kind : name, begin);
    n.attrs["kind"] = kind;
    n.attrs["visibility"] = visibility;
    n.attrs["stateMutability"] = mutability;
    n.attrs["virtual"] = is_virtual ? "true" : "false";
    n.attrs["implemented"] = implemented ? "true" : "false";
    n.children = std::move(children);
    return n;
  }

  DraftNode modifier_definition() {
    const std::size_t begin = peek().begin;
    advance();
    const std::string name = expect_ident().text;
    std::vector<DraftNode> children;
    if (is("(")) {
      children.push_back(parameter_list());
    } else {
      DraftNode empty = make("ParameterList", "", prev_end() - 1);
      children.push_back(std::move(empty));
    }
    while (is("virtual") || is("override")) {
      if (is("override")) {
        children.push_back(override_specifier());
      } else {
        advance();
      }
    }
    if (is("{")) {
      children.push_back(block());
    } else {
      expect(";");
    }
    DraftNode n = make("ModifierDefinition", name, begin);
    n.attrs["visibility"] = "internal";
    n.children = std::move(children);
    return n;
  }

  // -- types --
  Node type_name() {
    const std::size_t begin = peek().begin;
    Node base;
    if (is("mapping")) {
      advance();
      expect("(");
      Node key = type_name();
      if (is_ident() && !is("=>")) advance();  // named mapping key
      expect("=>");
      Node value = type_name();
      if (is_ident()) advance();
      expect(")");
      base.draft = make("Mapping", "", begin);
      base.type_string = "mapping(" + key.type_string + " => " + value.type_string + ")";
      base.draft.children.push_back(std::move(key.draft));
      base.draft.children.push_back(std::move(value.draft));
    } else if (is("function")) {
      advance();
      DraftNode params = parameter_list();
      while (is("internal") || is("external") || is("view") || is("pure") || is("payable")) advance();
      std::vector<DraftNode> rets;
      if (accept("returns")) rets.push_back(parameter_list());
      base.draft = make("FunctionTypeName", "", begin);
      base.draft.children.push_back(std::move(params));
      for (auto& r : rets) base.draft.children.push_back(std::move(r));
      base.type_string = "function";
    } else if (is_ident() && is_elementary(peek().text)) {
      std::string name = advance().text;
      if (name == "address" && is("payable")) {
        advance();
        name = "address payable";
      }
      base.draft = make("ElementaryTypeName", name, begin);
      base.type_string = name == "address payable" ? "address" : canonical_elementary(name);
    } else if (is_ident()) {
      DraftNode path = identifier_path();
      base.type_string = path.label;
      base.draft = make("UserDefinedTypeName", "", begin);
      base.draft.children.push_back(std::move(path));
    } else {
      fail("expected type name");
    }
    while (is("[")) {
      advance();
      std::vector<DraftNode> length;
      std::string len_text;
      if (!is("]")) {
        const std::size_t lb = peek().begin;
        length.push_back(expression());
        len_text = std::string(src_.substr(lb, prev_end() - lb));
      }
      expect("]");
      Node arr;
      arr.draft = make("ArrayTypeName", "", begin);
      arr.type_string = base.type_string + "[" + len_text + "]";
      arr.draft.children.push_back(std::move(base.draft));
      for (auto& l : length) arr.draft.children.push_back(std::move(l));
      base = std::move(arr);
    }
    return base;
  }

  // Parses `Type [attributes] name [= value]` without the terminator.
  DraftNode variable_declaration(bool state) {
    const std::size_t begin = peek().begin;
    Node type = type_name();
    std::string visibility = state ? "internal" : "internal";
    std::string mutability = "mutable";
    std::string location = "default";
    bool indexed = false;
    std::vector<DraftNode> extra;
    for (;;) {
      if (is("public") || is("private") || is("internal") || is("external")) {
        visibility = advance().text;
      } else if (is("constant") || is("immutable")) {
        mutability = advance().text;
      } else if (is_ident() && is_location(peek().text)) {
        location = advance().text;
      } else if (is("indexed")) {
        advance();
        indexed = true;
      } else if (is("override")) {
        extra.push_back(override_specifier());
      } else if (is("transient")) {
        advance();
      } else {
        break;
      }
    }
    std::string name;
    if (is_ident()) name = advance().text;
    std::vector<DraftNode> value;
    if (state && accept("=")) value.push_back(expression());
    DraftNode n = make("VariableDeclaration", name, begin);
    n.attrs["stateVariable"] = state ? "true" : "false";
    n.attrs["visibility"] = visibility;
    n.attrs["mutability"] = mutability;
    n.attrs["constant"] = mutability == "constant" ? "true" : "false";
    n.attrs["storageLocation"] = location;
    if (indexed) n.attrs["indexed"] = "true";
    n.attrs["typeString"] = type.type_string;
    n.children.push_back(std::move(type.draft));
    for (auto& e : extra) n.children.push_back(std::move(e));
    for (auto& v : value) n.children.push_back(std::move(v));
    return n;
  }

  // -- statements --
  DraftNode block() {
    const std::size_t begin = peek().begin;
    expect("{");
    std::vector<DraftNode> stmts;
    while (!is("}")) {
      if (at_end()) fail("unterminated block");
      stmts.push_back(statement());
    }
    expect("}");
    DraftNode n = make("Block", "", begin);
    n.children = std::move(stmts);
    return n;
  }

  DraftNode statement() {
    const std::size_t begin = peek().begin;
    if (is("{")) return block();
    if (is("unchecked") && is("{", 1)) {
      advance();
      DraftNode inner = block();
      DraftNode n = make("UncheckedBlock", "", begin);
      n.children = std::move(inner.children);
      return n;
    }
    if (is("if")) {
      advance();
      expect("(");
      DraftNode cond = expression();
      expect(")");
      DraftNode then = statement();
      DraftNode n;
      std::vector<DraftNode> rest;
      if (accept("else")) rest.push_back(statement());
      n = make("IfStatement", "", begin);
      n.children.push_back(std::move(cond));
      n.children.push_back(std::move(then));
      for (auto& r : rest) n.children.push_back(std::move(r));
      return n;
    }
    if (is("for")) {
      advance();
      expect("(");
      std::vector<DraftNode> parts;
      if (!accept(";")) parts.push_back(simple_statement());
      if (!is(";")) parts.push_back(expression());
      expect(";");
      if (!is(")")) {
        const std::size_t eb = peek().begin;
        DraftNode loop = expression();
        DraftNode stmt = make("ExpressionStatement", "", eb);
        stmt.children.push_back(std::move(loop));
        parts.push_back(std::move(stmt));
      }
      expect(")");
      parts.push_back(statement());
      DraftNode n = make("ForStatement", "", begin);
      n.children = std::move(parts);
      return n;
    }
    if (is("while")) {
      advance();
      expect("(");
      DraftNode cond = expression();
      expect(")");
      DraftNode body = statement();
      DraftNode n = make("WhileStatement", "", begin);
      n.children.push_back(std::move(cond));
      n.children.push_back(std::move(body));
      return n;
    }
    if (is("do")) {
      advance();
      DraftNode body = statement();
      expect("while");
      expect("(");
      DraftNode cond = expression();
      expect(")");
      expect(";");
      DraftNode n = make("DoWhileStatement", "", begin);
      n.children.push_back(std::move(body));
      n.children.push_back(std::move(cond));
      return n;
    }
    if (is("return")) {
      advance();
      std::vector<DraftNode> value;
      if (!is(";")) value.push_back(expression());
      expect(";");
      DraftNode n = make("Return", "", begin);
      for (auto& v : value) n.children.push_back(std::move(v));
      return n;
    }
    if (is("emit") || (is("revert") && is_ident(1))) {
      const bool emit = advance().text == "emit";
      DraftNode call = expression();
      expect(";");
      DraftNode n = make(emit ? "EmitStatement" : "RevertStatement", "", begin);
      n.children.push_back(std::move(call));
      return n;
    }
    if (is("break") || is("continue")) {
      const std::string tag = advance().text == "break" ? "Break" : "Continue";
      expect(";");
      return make(tag, "", begin);
    }
    if (is("_") && is(";", 1)) {
      advance();
      advance();
      return make("PlaceholderStatement", "", begin);
    }
    if (is("assembly")) {
      advance();
      if (peek().kind == Tok::String) advance();
      if (is("(")) skip_balanced();
      if (!is("{")) fail("expected assembly block");
      skip_balanced();
      return make("InlineAssembly", "", begin);
    }
    if (is("try")) {
      advance();
      DraftNode call = expression();
      while (!is("{")) {
        if (at_end()) fail("unterminated try");
        if (is("(")) {
          skip_balanced();
        } else {
          advance();
        }
      }
      std::vector<DraftNode> clauses;
      const std::size_t cb = peek().begin;
      DraftNode body = block();
      DraftNode first = make("TryCatchClause", "", cb);
      first.children.push_back(std::move(body));
      clauses.push_back(std::move(first));
      while (is("catch")) {
        const std::size_t kb = peek().begin;
        advance();
        std::string name;
        if (is_ident()) name = advance().text;
        if (is("(")) skip_balanced();
        DraftNode handler = block();
        DraftNode clause = make("TryCatchClause", name, kb);
        clause.children.push_back(std::move(handler));
        clauses.push_back(std::move(clause));
      }
      DraftNode n = make("TryStatement", "", begin);
      n.children.push_back(std::move(call));
      for (auto& c : clauses) n.children.push_back(std::move(c));
      return n;
    }
    return simple_statement();
  }

  // Declaration or expression statement, including the terminating ';'.
  DraftNode simple_statement() {
    const std::size_t begin = peek().begin;
    if (auto decl = try_declaration_statement()) return std::move(*decl);
    DraftNode expr = expression();
    expect(";");
    DraftNode n = make("ExpressionStatement", "", begin);
    n.children.push_back(std::move(expr));
    return n;
  }

  std::optional<DraftNode> try_declaration_statement() {
    const std::size_t save = pos_;
    const std::size_t begin = peek().begin;
    try {
      std::vector<DraftNode> decls;
      if (is("(")) {
        // Tuple form: (T a, , T b) = expr;
        advance();
        while (!is(")")) {
          if (is(",")) {
            advance();
            continue;
          }
          decls.push_back(local_declaration());
          if (!accept(",")) break;
        }
        expect(")");
        if (decls.empty() || !is("=")) throw Error(ErrorCode::ParseError, "not a declaration");
      } else {
        if (!is_ident() || is("delete") || is("new") || is("true") || is("false") || is("type"))
          throw Error(ErrorCode::ParseError, "not a declaration");
        decls.push_back(local_declaration());
      }
      std::vector<DraftNode> value;
      if (accept("=")) value.push_back(expression());
      expect(";");
      DraftNode n = make("VariableDeclarationStatement", "", begin);
      for (auto& d : decls) n.children.push_back(std::move(d));
      for (auto& v : value) n.children.push_back(std::move(v));
      return n;
    } catch (const Error&) {
      pos_ = save;
      return std::nullopt;
    }
  }

  DraftNode local_declaration() {
    const std::size_t begin = peek().begin;
    Node type = type_name();
    std::string location = "default";
    if (is_ident() && is_location(peek().text)) location = advance().text;
    if (!is_ident()) throw Error(ErrorCode::ParseError, "not a declaration");
    const std::string name = advance().text;
    DraftNode n = make("VariableDeclaration", name, begin);
    n.attrs["stateVariable"] = "false";
    n.attrs["visibility"] = "internal";
    n.attrs["mutability"] = "mutable";
    n.attrs["constant"] = "false";
    n.attrs["storageLocation"] = location;
    n.attrs["typeString"] = type.type_string;
    n.children.push_back(std::move(type.draft));
    return n;
  }

  // -- expressions --
  std::vector<DraftNode> call_arguments(std::string_view close) {
    std::vector<DraftNode> args;
    if (is("{") && close == ")") {
      // Named arguments: f({a: 1, b: 2})
      advance();
      while (!accept("}")) {
        expect_ident();
        expect(":");
        args.push_back(expression());
        accept(",");
      }
      expect(close);
      return args;
    }
    while (!is(close)) {
      args.push_back(expression());
      if (!accept(",")) break;
    }
    expect(close);
    return args;
  }

  static int binary_precedence(const std::string& op) {
    if (op == "||") return 1;
    if (op == "&&") return 2;
    if (op == "==" || op == "!=") return 3;
    if (op == "<" || op == ">" || op == "<=" || op == ">=") return 4;
    if (op == "|") return 5;
    if (op == "^") return 6;
    if (op == "&") return 7;
    if (op == "<<" || op == ">>" || op == ">>>") return 8;
    if (op == "+" || op == "-") return 9;
    if (op == "*" || op == "/" || op == "%") return 10;
    if (op == "**") return 11;
    return 0;
  }

  static bool is_assignment_op(const std::string& op) {
    return op == "=" || op == "+=" || op == "-=" || op == "*=" || op == "/=" || op == "%=" ||
           op == "|=" || op == "&=" || op == "^=" || op == "<<=" || op == ">>=" || op == ">>>=" ||
           op == "**=";
  }

  DraftNode expression() {
    const std::size_t begin = peek().begin;
    DraftNode lhs = conditional();
    if (peek().kind == Tok::Punct && is_assignment_op(peek().text)) {
      const std::string op = advance().text;
      DraftNode rhs = expression();
      DraftNode n = make("Assignment", op, begin);
      n.attrs["operator"] = op;
      n.children.push_back(std::move(lhs));
      n.children.push_back(std::move(rhs));
      return n;
    }
    return lhs;
  }

  DraftNode conditional() {
    const std::size_t begin = peek().begin;
    DraftNode cond = binary(1);
    if (!accept("?")) return cond;
    DraftNode yes = expression();
    expect(":");
    DraftNode no = expression();
    DraftNode n = make("Conditional", "", begin);
    n.children.push_back(std::move(cond));
    n.children.push_back(std::move(yes));
    n.children.push_back(std::move(no));
    return n;
  }

  DraftNode binary(int min_prec) {
    const std::size_t begin = peek().begin;
    DraftNode lhs = unary();
    for (;;) {
      if (peek().kind != Tok::Punct) break;
      const std::string op = peek().text;
      const int prec = binary_precedence(op);
      if (prec == 0 || prec < min_prec) break;
      advance();
      // `**` is right-associative; everything else left-associative.
      DraftNode rhs = binary(op == "**" ? prec : prec + 1);
      DraftNode n = make("BinaryOperation", op, begin);
      n.attrs["operator"] = op;
      n.children.push_back(std::move(lhs));
      n.children.push_back(std::move(rhs));
      lhs = std::move(n);
    }
    return lhs;
  }

  DraftNode unary() {
    const std::size_t begin = peek().begin;
    if (is("!") || is("-") || is("~") || is("++") || is("--") || is("delete")) {
      const std::string op = advance().text;
      DraftNode operand = unary();
      DraftNode n = make("UnaryOperation", op, begin);
      n.attrs["operator"] = op;
      n.attrs["prefix"] = "true";
      n.children.push_back(std::move(operand));
      return n;
    }
    DraftNode e = postfix();
    while (is("++") || is("--")) {
      const std::string op = advance().text;
      DraftNode n = make("UnaryOperation", op, begin);
      n.attrs["operator"] = op;
      n.attrs["prefix"] = "false";
      n.children.push_back(std::move(e));
      e = std::move(n);
    }
    return e;
  }

  DraftNode postfix() {
    const std::size_t begin = peek().begin;
    DraftNode e = primary();
    for (;;) {
      if (is(".")) {
        advance();
        const Token& member = advance();
        if (member.kind != Tok::Ident) fail("expected member name");
        DraftNode n = make("MemberAccess", member.text, begin);
        n.children.push_back(std::move(e));
        e = std::move(n);
      } else if (is("[")) {
        advance();
        std::vector<DraftNode> parts;
        bool range = false;
        if (!is("]") && !is(":")) parts.push_back(expression());
        if (accept(":")) {
          range = true;
          if (!is("]")) parts.push_back(expression());
        }
        expect("]");
        DraftNode n = make(range ? "IndexRangeAccess" : "IndexAccess", "", begin);
        n.children.push_back(std::move(e));
        for (auto& p : parts) n.children.push_back(std::move(p));
        e = std::move(n);
      } else if (is("{") && call_options_follow()) {
        advance();
        std::vector<DraftNode> opts;
        while (!accept("}")) {
          expect_ident();
          expect(":");
          opts.push_back(expression());
          accept(",");
        }
        DraftNode n = make("FunctionCallOptions", "", begin);
        n.children.push_back(std::move(e));
        for (auto& o : opts) n.children.push_back(std::move(o));
        e = std::move(n);
      } else if (is("(")) {
        advance();
        std::vector<DraftNode> args = call_arguments(")");
        DraftNode n = make("FunctionCall", "", begin);
        n.children.push_back(std::move(e));
        for (auto& a : args) n.children.push_back(std::move(a));
        e = std::move(n);
      } else {
        break;
      }
    }
    return e;
  }

  bool call_options_follow() const { return is_ident(1) && is(":", 2); }

  DraftNode primary() {
    const std::size_t begin = peek().begin;
    const Token& t = peek();
    if (t.kind == Tok::Number) {
      std::string value = advance().text;
      static constexpr std::array<std::string_view, 11> kUnits = {
          "wei", "gwei", "ether", "seconds", "minutes", "hours", "days", "weeks", "years", "szabo", "finney"};
      std::string unit;
      if (is_ident())
        for (std::string_view u : kUnits)
          if (peek().text == u) unit = advance().text;
      DraftNode n = make("Literal", value, begin);
      n.attrs["kind"] = "number";
      if (!unit.empty()) n.attrs["subdenomination"] = unit;
      return n;
    }
    if (t.kind == Tok::String) {
      std::string text = advance().text;
      std::string kind = "string";
      if (text.rfind("hex", 0) == 0) {
        kind = "hexString";
        text = text.substr(3);
      } else if (text.rfind("unicode", 0) == 0) {
        kind = "unicodeString";
        text = text.substr(7);
      }
      DraftNode n = make("Literal", text.substr(1, text.size() - 2), begin);
      n.attrs["kind"] = kind;
      return n;
    }
    if (is("true") || is("false")) {
      DraftNode n = make("Literal", advance().text, begin);
      n.attrs["kind"] = "bool";
      return n;
    }
    if (is("(") || is("[")) {
      const bool inline_array = is("[");
      const std::string close = inline_array ? "]" : ")";
      advance();
      std::vector<DraftNode> parts;
      while (!is(close)) {
        if (at_end()) fail("unterminated tuple");
        if (accept(",")) continue;
        parts.push_back(expression());
        if (!accept(",")) break;
      }
      expect(close);
      DraftNode n = make("TupleExpression", "", begin);
      if (inline_array) n.attrs["isInlineArray"] = "true";
      n.children = std::move(parts);
      return n;
    }
    if (is("new")) {
      advance();
      Node type = type_name();
      DraftNode n = make("NewExpression", "", begin);
      n.children.push_back(std::move(type.draft));
      return n;
    }
    if (is("type") && is("(", 1)) {
      DraftNode n = make("Identifier", advance().text, begin);
      return n;
    }
    if (t.kind == Tok::Ident && is_elementary(t.text) && (is("(", 1) || is("payable", 1) || is("[", 1))) {
      Node type = type_name();
      DraftNode n = make("ElementaryTypeNameExpression", "", begin);
      n.children.push_back(std::move(type.draft));
      return n;
    }
    if (t.kind == Tok::Ident) return make("Identifier", advance().text, begin);
    fail("expected expression");
  }

  std::string_view src_;
  LineIndex index_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

Ast parse_source(std::string_view source, std::string version_tag) {
  LineIndex index(source);
  Lexer lexer(source, index);
  Parser parser(source, lexer.run());
  Ast ast = build_ast(parser.source_unit());
  ast.version_tag = std::move(version_tag);
  ast.source_hash = source_hash(source);
  ast.quality = assess_quality(ast, source);
  return ast;
}

}  // namespace proxydiff
