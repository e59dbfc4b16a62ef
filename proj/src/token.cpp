#include "fdsr/token.hpp"

#include <algorithm>
#include <charconv>

namespace fdsr {

std::string_view to_string(Notation n) { return n == Notation::Prefix ? "prefix" : "postfix"; }

Notation parse_notation(std::string_view s) {
  if (s == "prefix") return Notation::Prefix;
  if (s == "postfix") return Notation::Postfix;
  throw std::invalid_argument("unknown notation '" + std::string(s) + "' (expected prefix or postfix)");
}

namespace {

constexpr std::string_view kUnarySymbols[] = {"sin", "cos", "sqrt", "exp", "log", "tan"};
constexpr std::string_view kBinarySymbols[] = {"+", "-", "*", "/", "^"};

}  // namespace

std::string_view symbol(UnaryOp op) { return kUnarySymbols[static_cast<int>(op)]; }
std::string_view symbol(BinaryOp op) { return kBinarySymbols[static_cast<int>(op)]; }

std::optional<UnaryOp> parse_unary(std::string_view s) {
  for (std::size_t i = 0; i < std::size(kUnarySymbols); ++i)
    if (kUnarySymbols[i] == s) return static_cast<UnaryOp>(i);
  return std::nullopt;
}

std::optional<BinaryOp> parse_binary(std::string_view s) {
  for (std::size_t i = 0; i < std::size(kBinarySymbols); ++i)
    if (kBinarySymbols[i] == s) return static_cast<BinaryOp>(i);
  return std::nullopt;
}

std::string token_text(Token t) {
  switch (t.kind) {
    case TokenKind::UnaryOp: return std::string(symbol(t.unary_op()));
    case TokenKind::BinaryOp: return std::string(symbol(t.binary_op()));
    case TokenKind::Variable: return "x" + std::to_string(t.code + 1);
    case TokenKind::Constant: return "const";
  }
  return "?";
}

std::optional<Token> parse_token(std::string_view s) {
  if (s == "const") return Token::constant();
  if (auto u = parse_unary(s)) return Token::unary(*u);
  if (auto b = parse_binary(s)) return Token::binary(*b);
  if (s.size() >= 2 && s.front() == 'x') {
    unsigned index = 0;
    auto [ptr, ec] = std::from_chars(s.data() + 1, s.data() + s.size(), index);
    if (ec == std::errc{} && ptr == s.data() + s.size() && index >= 1 && index <= 65535)
      return Token::variable(static_cast<std::uint16_t>(index - 1));
  }
  return std::nullopt;
}

TokenTable::TokenTable(std::vector<UnaryOp> unary, std::vector<BinaryOp> binary, std::size_t num_variables,
                       bool has_constant)
    : num_variables_(num_variables), has_constant_(has_constant) {
  if (num_variables > 65535) throw std::invalid_argument("too many variables");
  for (auto op : unary) {
    Token t = Token::unary(op);
    if (std::find(unary_.begin(), unary_.end(), t) != unary_.end())
      throw std::invalid_argument("duplicate unary operator " + std::string(symbol(op)));
    unary_.push_back(t);
  }
  for (auto op : binary) {
    Token t = Token::binary(op);
    if (std::find(binary_.begin(), binary_.end(), t) != binary_.end())
      throw std::invalid_argument("duplicate binary operator " + std::string(symbol(op)));
    binary_.push_back(t);
  }
  for (std::size_t i = 0; i < num_variables; ++i) leaves_.push_back(Token::variable(static_cast<std::uint16_t>(i)));
  if (has_constant) leaves_.push_back(Token::constant());

  for (int mask = 0; mask < 8; ++mask) {
    auto& out = combos_[mask];
    if (mask & 4) out.insert(out.end(), unary_.begin(), unary_.end());
    if (mask & 2) out.insert(out.end(), binary_.begin(), binary_.end());
    if (mask & 1) out.insert(out.end(), leaves_.begin(), leaves_.end());
  }
}

TokenTable TokenTable::full(std::size_t num_variables, bool has_constant) {
  return TokenTable({UnaryOp::Sin, UnaryOp::Cos, UnaryOp::Sqrt, UnaryOp::Exp, UnaryOp::Log, UnaryOp::Tan},
                    {BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div, BinaryOp::Pow}, num_variables,
                    has_constant);
}

bool TokenTable::contains(Token t) const {
  switch (t.kind) {
    case TokenKind::UnaryOp: return std::find(unary_.begin(), unary_.end(), t) != unary_.end();
    case TokenKind::BinaryOp: return std::find(binary_.begin(), binary_.end(), t) != binary_.end();
    case TokenKind::Variable: return t.code < num_variables_;
    case TokenKind::Constant: return has_constant_;
  }
  return false;
}

void TokenTable::require_supports_depth(int depth) const {
  if (depth < 0) throw std::invalid_argument("depth must be non-negative");
  if (leaves_.empty()) throw std::invalid_argument("token table has no leaf tokens");
  if (depth >= 1 && unary_.empty() && binary_.empty())
    throw std::invalid_argument("depth " + std::to_string(depth) + " requires at least one operator");
}

}  // namespace fdsr
