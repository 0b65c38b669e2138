#pragma once

#include <map>
#include <string>

#include "gencalc/netexpr.hpp"

namespace gencalc {

/// Parses a small arithmetic grammar into a NetExpr:
///
///     expr  := term (('+' | '-') term)*
///     term  := unary (('*' | '/') unary)*
///     unary := '-' unary | power
///     power := atom ('^' ['-'] integer)?
///     atom  := number | identifier | func '(' expr ')' | '(' expr ')'
///
/// with func ∈ {sin, cos, exp, log, abs}. Identifiers resolve through
/// `variables` (name -> axis); `eps` is the net parameter and `pi` a constant.
/// Throws ArgumentError with the character offset on malformed input.
NetExpr parse_expression(const std::string& text, const std::map<std::string, int>& variables);

/// Variables x, y mapped to axes 0, 1.
NetExpr parse_expression(const std::string& text);

}  // namespace gencalc
