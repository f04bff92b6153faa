#pragma once

#include <string>
#include <string_view>

#include "proxydiff/ast.hpp"

namespace proxydiff {

/// Built-in fallback for when no compiler AST is available: a tokenizer plus
/// recursive-descent parser for the commonly used Solidity subset. Emits the
/// same node tags and attributes as the compiler's JSON AST so every
/// downstream analysis works unchanged. Coverage gaps show up as lower
/// quality scores rather than failures where possible.
///
/// Throws Error{ParseError} on input it cannot recover from.
Ast parse_source(std::string_view source, std::string version_tag = {});

}  // namespace proxydiff
