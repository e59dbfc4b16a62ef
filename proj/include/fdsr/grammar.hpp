#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "fdsr/expr.hpp"
#include "fdsr/random.hpp"
#include "fdsr/token.hpp"

namespace fdsr {

/// Which token classes may be appended next.
struct LegalMask {
  bool unary = false;
  bool binary = false;
  bool leaf = false;

  bool any() const { return unary || binary || leaf; }
  bool allows(Token t) const {
    switch (t.kind) {
      case TokenKind::UnaryOp: return unary;
      case TokenKind::BinaryOp: return binary;
      default: return leaf;
    }
  }
  friend bool operator==(const LegalMask&, const LegalMask&) = default;
};

/// Partial expression under construction toward a fixed target depth.
///
/// Prefix keeps the stack of open argument slots (with a running maximum, so
/// the deepest open slot is O(1)) plus the deepest placed token. Postfix keeps
/// the stack of completed-subtree depths together with the running maximum of
/// d_i + i, which makes the top-down fold that gives the minimum completion
/// depth an O(1) query:
///   fold(d_1..d_k) = max(max_{i<k}(d_i + i), d_k + k - 1)   (1-based, k >= 2).
class GrammarState {
 public:
  GrammarState(Notation notation, int target_depth);

  /// Replays `tokens` without legality checks; throws ExpressionError on a
  /// structurally impossible sequence.
  static GrammarState from_tokens(Notation notation, int target_depth, std::span<const Token> tokens);

  Notation notation() const { return notation_; }
  int target_depth() const { return target_; }
  std::span<const Token> tokens() const { return tokens_; }
  std::size_t num_leaves() const { return num_leaves_; }
  std::size_t num_binary() const { return num_binary_; }
  std::size_t num_unary() const { return num_unary_; }

  /// The tokens form exactly one tree (possibly shallower than the target in
  /// postfix).
  bool complete() const;
  /// Complete and exactly at the target depth: nothing more may be appended.
  bool finished() const { return complete() && depth() == target_; }

  /// Same value pn_depth / rpn_depth report for the current tokens.
  int depth() const;
  /// Same value min_completion_depth reports for the current tokens.
  int min_completion() const;

  /// Minimum completion depth after appending a token of the given arity.
  /// Postfix binary needs at least two stack entries.
  int min_completion_after(int arity) const;

  /// Appends without checking legality.
  void apply(Token t);

  ExpressionSeq expression() const { return {notation_, tokens_}; }

 private:
  struct Entry {
    int depth;
    int running;  // prefix: max open-slot depth so far; postfix: max of d_i + i so far
  };
  void push_entry(int depth);

  Notation notation_;
  int target_;
  std::vector<Token> tokens_;
  std::size_t num_leaves_ = 0;
  std::size_t num_binary_ = 0;
  std::size_t num_unary_ = 0;
  std::vector<Entry> stack_;
  int deepest_ = 0;  // prefix: deepest placed token; postfix: deepest completed subtree ever
};

/// Legal token classes for the next step. Throws std::logic_error when the
/// state is already finished.
LegalMask legal_mask(const GrammarState& state, const TokenTable& table);

LegalMask legal_mask_prefix(const GrammarState& state, const TokenTable& table);
LegalMask legal_mask_postfix(const GrammarState& state, const TokenTable& table);

/// Legal tokens in canonical order (unary, binary, variables, constant). The
/// span points into `table`.
std::span<const Token> legal_tokens(const GrammarState& state, const TokenTable& table);

/// Appends `t` after checking it is legal; throws std::invalid_argument otherwise.
GrammarState step(GrammarState state, Token t, const TokenTable& table);

/// Appends uniformly chosen legal tokens until the expression is complete at
/// exactly `depth`.
ExpressionSeq random_rollout(Notation notation, int depth, const TokenTable& table, Rng& rng);

class EnumerationLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Depth-first walk over every sequence the grammar can produce. Throws
/// EnumerationLimitError once more than `limit` expressions are found.
std::size_t enumerate_all(Notation notation, int depth, const TokenTable& table,
                          const std::function<void(const ExpressionSeq&)>& visit,
                          std::size_t limit = 1'000'000);

std::vector<ExpressionSeq> enumerate_all(Notation notation, int depth, const TokenTable& table,
                                         std::size_t limit = 1'000'000);

}  // namespace fdsr
