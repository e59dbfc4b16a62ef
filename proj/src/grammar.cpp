#include "fdsr/grammar.hpp"

#include <algorithm>
#include <stdexcept>

namespace fdsr {

GrammarState::GrammarState(Notation notation, int target_depth) : notation_(notation), target_(target_depth) {
  if (target_depth < 0) throw std::invalid_argument("target depth must be non-negative");
  if (notation_ == Notation::Prefix) stack_.push_back({0, 0});
}

GrammarState GrammarState::from_tokens(Notation notation, int target_depth, std::span<const Token> tokens) {
  GrammarState s(notation, target_depth);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    try {
      s.apply(tokens[i]);
    } catch (const ExpressionError& e) {
      throw ExpressionError(e.what(), i);
    }
  }
  return s;
}

bool GrammarState::complete() const {
  if (notation_ == Notation::Prefix) return !tokens_.empty() && stack_.empty();
  return stack_.size() == 1;
}

int GrammarState::depth() const {
  if (notation_ == Notation::Prefix) return std::max(deepest_, stack_.empty() ? 0 : stack_.back().running);
  return deepest_;
}

int GrammarState::min_completion() const {
  if (notation_ == Notation::Prefix) return depth();
  const std::size_t k = stack_.size();
  if (k == 0) return 0;
  if (k == 1) return stack_[0].depth;
  return std::max(stack_[k - 2].running, stack_[k - 1].depth + static_cast<int>(k) - 1);
}

int GrammarState::min_completion_after(int arity) const {
  if (notation_ == Notation::Prefix) {
    if (stack_.empty()) throw std::logic_error("prefix expression is already complete");
    const int slot = stack_.back().depth;
    const int rest = stack_.size() > 1 ? stack_[stack_.size() - 2].running : 0;
    return arity == 0 ? std::max({deepest_, slot, rest}) : std::max({deepest_, rest, slot + 1});
  }
  const int k = static_cast<int>(stack_.size());
  switch (arity) {
    case 0:
      if (k == 0) return 0;
      return std::max(stack_[k - 1].running, k);
    case 1:
      if (k == 0) throw std::logic_error("unary operator needs an operand");
      if (k == 1) return stack_[0].depth + 1;
      return std::max(stack_[k - 2].running, stack_[k - 1].depth + k);
    default: {
      if (k < 2) throw std::logic_error("binary operator needs two operands");
      const int merged = std::max(stack_[k - 2].depth, stack_[k - 1].depth) + 1;
      if (k == 2) return merged;
      return std::max(stack_[k - 3].running, merged + k - 2);
    }
  }
}

void GrammarState::push_entry(int depth) {
  if (notation_ == Notation::Prefix) {
    const int prev = stack_.empty() ? depth : stack_.back().running;
    stack_.push_back({depth, std::max(prev, depth)});
  } else {
    const int position = static_cast<int>(stack_.size()) + 1;
    const int value = depth + position;
    stack_.push_back({depth, stack_.empty() ? value : std::max(stack_.back().running, value)});
    deepest_ = std::max(deepest_, depth);
  }
}

void GrammarState::apply(Token t) {
  const int arity = t.arity();
  if (notation_ == Notation::Prefix) {
    if (stack_.empty()) throw ExpressionError("token after the expression is already complete");
    const int slot = stack_.back().depth;
    stack_.pop_back();
    deepest_ = std::max(deepest_, slot);
    for (int i = 0; i < arity; ++i) push_entry(slot + 1);
  } else {
    if (static_cast<int>(stack_.size()) < arity) throw ExpressionError("operator without enough operands");
    int depth = 0;
    for (int i = 0; i < arity; ++i) {
      depth = std::max(depth, stack_.back().depth + 1);
      stack_.pop_back();
    }
    push_entry(depth);
  }
  switch (t.kind) {
    case TokenKind::UnaryOp: ++num_unary_; break;
    case TokenKind::BinaryOp: ++num_binary_; break;
    default: ++num_leaves_;
  }
  tokens_.push_back(t);
}

LegalMask legal_mask_prefix(const GrammarState& s, const TokenTable& table) {
  if (s.complete()) throw std::logic_error("no tokens may follow a complete expression");
  const int n = s.target_depth();
  LegalMask m;
  const bool op_fits = s.min_completion_after(1) <= n;
  m.unary = table.num_unary() > 0 && op_fits;
  m.binary = table.num_binary() > 0 && op_fits;
  const bool would_complete = s.num_leaves() == s.num_binary();
  m.leaf = table.num_leaves() > 0 && !(s.num_leaves() == s.num_binary() + 1) &&
           !(s.min_completion_after(0) < n && would_complete);
  return m;
}

LegalMask legal_mask_postfix(const GrammarState& s, const TokenTable& table) {
  if (s.finished()) throw std::logic_error("no tokens may follow a finished expression");
  const int n = s.target_depth();
  LegalMask m;
  if (s.tokens().empty()) {
    m.leaf = table.num_leaves() > 0;
    return m;
  }
  m.unary = table.num_unary() > 0 && s.num_leaves() >= 1 && s.min_completion_after(1) <= n;
  m.binary = table.num_binary() > 0 && s.num_binary() + 1 != s.num_leaves();
  // Without binary operators nothing can ever merge a second operand.
  const bool mergeable = table.num_binary() > 0;
  m.leaf = table.num_leaves() > 0 && mergeable && s.min_completion_after(0) <= n;
  return m;
}

LegalMask legal_mask(const GrammarState& state, const TokenTable& table) {
  return state.notation() == Notation::Prefix ? legal_mask_prefix(state, table) : legal_mask_postfix(state, table);
}

std::span<const Token> legal_tokens(const GrammarState& state, const TokenTable& table) {
  const auto m = legal_mask(state, table);
  return table.tokens_for(m.unary, m.binary, m.leaf);
}

GrammarState step(GrammarState state, Token t, const TokenTable& table) {
  if (!table.contains(t)) throw std::invalid_argument("token '" + token_text(t) + "' is not in the token table");
  if (!legal_mask(state, table).allows(t)) throw std::invalid_argument("token '" + token_text(t) + "' is not legal here");
  state.apply(t);
  return state;
}

ExpressionSeq random_rollout(Notation notation, int depth, const TokenTable& table, Rng& rng) {
  table.require_supports_depth(depth);
  GrammarState state(notation, depth);
  while (!state.finished()) {
    const auto legal = legal_tokens(state, table);
    if (legal.empty())
      throw std::logic_error("grammar reached a state with no legal tokens: " + format_tokens(state.tokens()));
    state.apply(legal[uniform_index(rng, legal.size())]);
  }
  return state.expression();
}

namespace {

void enumerate_from(const GrammarState& state, const TokenTable& table,
                    const std::function<void(const ExpressionSeq&)>& visit, std::size_t limit,
                    std::size_t& count) {
  if (state.finished()) {
    if (++count > limit)
      throw EnumerationLimitError("enumeration exceeded the limit of " + std::to_string(limit) + " expressions");
    visit(state.expression());
    return;
  }
  for (Token t : legal_tokens(state, table)) {
    GrammarState next = state;
    next.apply(t);
    enumerate_from(next, table, visit, limit, count);
  }
}

}  // namespace

std::size_t enumerate_all(Notation notation, int depth, const TokenTable& table,
                          const std::function<void(const ExpressionSeq&)>& visit, std::size_t limit) {
  table.require_supports_depth(depth);
  std::size_t count = 0;
  enumerate_from(GrammarState(notation, depth), table, visit, limit, count);
  return count;
}

std::vector<ExpressionSeq> enumerate_all(Notation notation, int depth, const TokenTable& table, std::size_t limit) {
  std::vector<ExpressionSeq> out;
  enumerate_all(notation, depth, table, [&](const ExpressionSeq& e) { out.push_back(e); }, limit);
  return out;
}

}  // namespace fdsr
