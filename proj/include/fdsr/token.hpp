#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fdsr {

enum class Notation : std::uint8_t { Prefix, Postfix };

std::string_view to_string(Notation n);
Notation parse_notation(std::string_view s);

enum class TokenKind : std::uint8_t { UnaryOp, BinaryOp, Variable, Constant };

enum class UnaryOp : std::uint8_t { Sin, Cos, Sqrt, Exp, Log, Tan };
enum class BinaryOp : std::uint8_t { Add, Sub, Mul, Div, Pow };

std::string_view symbol(UnaryOp op);
std::string_view symbol(BinaryOp op);
std::optional<UnaryOp> parse_unary(std::string_view s);
std::optional<BinaryOp> parse_binary(std::string_view s);

/// A single expression token. The code is the operator enum value for
/// operators, the zero-based feature index for variables, and 0 for the
/// constant token. Tokens do not depend on any particular TokenTable.
struct Token {
  TokenKind kind = TokenKind::Constant;
  std::uint16_t code = 0;

  static constexpr Token unary(UnaryOp op) { return {TokenKind::UnaryOp, static_cast<std::uint16_t>(op)}; }
  static constexpr Token binary(BinaryOp op) { return {TokenKind::BinaryOp, static_cast<std::uint16_t>(op)}; }
  static constexpr Token variable(std::uint16_t index) { return {TokenKind::Variable, index}; }
  static constexpr Token constant() { return {TokenKind::Constant, 0}; }

  constexpr int arity() const {
    switch (kind) {
      case TokenKind::UnaryOp: return 1;
      case TokenKind::BinaryOp: return 2;
      default: return 0;
    }
  }
  constexpr bool is_leaf() const { return arity() == 0; }
  UnaryOp unary_op() const { return static_cast<UnaryOp>(code); }
  BinaryOp binary_op() const { return static_cast<BinaryOp>(code); }

  friend constexpr bool operator==(Token, Token) = default;
  friend constexpr auto operator<=>(Token, Token) = default;
};

/// Spelling used by the expression text format: operator symbols, `x1..xD`
/// for variables and `const` for the constant token.
std::string token_text(Token t);
std::optional<Token> parse_token(std::string_view s);

/// The token inventory a search draws from. Legal-token lists are always
/// ordered unary operators, binary operators, variables, constant.
class TokenTable {
 public:
  TokenTable() = default;
  TokenTable(std::vector<UnaryOp> unary, std::vector<BinaryOp> binary, std::size_t num_variables,
             bool has_constant);

  /// Every operator this library knows, with `num_variables` inputs and the constant.
  static TokenTable full(std::size_t num_variables, bool has_constant = true);

  std::size_t num_unary() const { return unary_.size(); }
  std::size_t num_binary() const { return binary_.size(); }
  std::size_t num_leaves() const { return leaves_.size(); }
  std::size_t num_tokens() const { return num_unary() + num_binary() + num_leaves(); }
  std::size_t num_variables() const { return num_variables_; }
  bool has_constant() const { return has_constant_; }

  std::span<const Token> unary_tokens() const { return unary_; }
  std::span<const Token> binary_tokens() const { return binary_; }
  std::span<const Token> leaf_tokens() const { return leaves_; }

  /// Concatenation of the selected classes, in canonical order.
  std::span<const Token> tokens_for(bool unary, bool binary, bool leaf) const {
    return combos_[(unary ? 4 : 0) | (binary ? 2 : 0) | (leaf ? 1 : 0)];
  }

  bool contains(Token t) const;

  /// Throws std::invalid_argument when no complete expression of exactly
  /// `depth` can be formed from this table.
  void require_supports_depth(int depth) const;

 private:
  std::vector<Token> unary_;
  std::vector<Token> binary_;
  std::vector<Token> leaves_;
  std::size_t num_variables_ = 0;
  bool has_constant_ = false;
  std::vector<Token> combos_[8];
};

/// Flat token sequence in one notation. Never a tree.
struct ExpressionSeq {
  Notation notation = Notation::Prefix;
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  friend bool operator==(const ExpressionSeq&, const ExpressionSeq&) = default;
};

/// Malformed or structurally invalid expression input. `position` is the
/// zero-based token index at fault, when one exists.
class ExpressionError : public std::runtime_error {
 public:
  explicit ExpressionError(const std::string& what, std::optional<std::size_t> position = std::nullopt)
      : std::runtime_error(what), position_(position) {}
  std::optional<std::size_t> position() const { return position_; }

 private:
  std::optional<std::size_t> position_;
};

}  // namespace fdsr
