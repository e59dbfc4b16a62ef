#include "fdsr/expr.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace fdsr {

DepthInfo pn_depth(std::span<const Token> tokens) {
  if (tokens.empty()) throw ExpressionError("empty expression");
  // Depths of argument slots still waiting for a token; the root slot first.
  std::vector<int> open{0};
  int deepest = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (open.empty()) throw ExpressionError("token after the expression is already complete", i);
    const int slot = open.back();
    open.pop_back();
    deepest = std::max(deepest, slot);
    for (int k = 0; k < tokens[i].arity(); ++k) open.push_back(slot + 1);
  }
  for (int slot : open) deepest = std::max(deepest, slot);
  return {deepest, open.empty()};
}

DepthInfo rpn_depth(std::span<const Token> tokens) {
  if (tokens.empty()) throw ExpressionError("empty expression");
  std::vector<int> stack;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    switch (tokens[i].arity()) {
      case 0: stack.push_back(0); break;
      case 1:
        if (stack.empty()) throw ExpressionError("unary operator with an empty stack", i);
        ++stack.back();
        break;
      default: {
        if (stack.size() < 2) throw ExpressionError("binary operator with fewer than two operands", i);
        const int right = stack.back();
        stack.pop_back();
        stack.back() = std::max(stack.back(), right) + 1;
      }
    }
  }
  return {*std::max_element(stack.begin(), stack.end()), stack.size() == 1};
}

DepthInfo depth_info(const ExpressionSeq& seq) {
  return seq.notation == Notation::Prefix ? pn_depth(seq.tokens) : rpn_depth(seq.tokens);
}

void require_complete(const ExpressionSeq& seq) {
  if (!depth_info(seq).complete) throw ExpressionError("expression is incomplete");
}

int depth_of(const ExpressionSeq& seq) {
  const auto info = depth_info(seq);
  if (!info.complete) throw ExpressionError("expression is incomplete");
  return info.depth;
}

int min_completion_depth(const ExpressionSeq& seq) {
  if (seq.empty()) return 0;
  if (seq.notation == Notation::Prefix) return pn_depth(seq.tokens).depth;

  std::vector<int> stack;
  for (Token t : seq.tokens) {
    if (t.arity() == 0) {
      stack.push_back(0);
    } else if (t.arity() == 1) {
      if (stack.empty()) throw ExpressionError("unary operator with an empty stack");
      ++stack.back();
    } else {
      if (stack.size() < 2) throw ExpressionError("binary operator with fewer than two operands");
      const int right = stack.back();
      stack.pop_back();
      stack.back() = std::max(stack.back(), right) + 1;
    }
  }
  int folded = stack.back();
  for (auto it = stack.rbegin() + 1; it != stack.rend(); ++it) folded = std::max(*it, folded) + 1;
  return folded;
}

SubExprSpan grasp_span(const ExpressionSeq& seq, std::size_t idx) {
  require_complete(seq);
  if (idx >= seq.size()) throw std::out_of_range("grasp index out of range");
  const auto& tk = seq.tokens;
  int pending = tk[idx].arity();
  std::size_t bound = idx;
  if (seq.notation == Notation::Prefix) {
    while (pending > 0) {
      ++bound;
      pending += tk[bound].arity() - 1;
    }
    return {idx, bound, pn_depth(std::span(tk).subspan(idx, bound - idx + 1)).depth};
  }
  while (pending > 0) {
    --bound;
    pending += tk[bound].arity() - 1;
  }
  return {bound, idx, rpn_depth(std::span(tk).subspan(bound, idx - bound + 1)).depth};
}

std::vector<SubExprSpan> subexpression_table(const ExpressionSeq& seq) {
  require_complete(seq);
  const auto& tk = seq.tokens;
  const std::size_t n = tk.size();
  std::vector<SubExprSpan> table(n);
  // Each stack entry is a finished sub-expression (its span already written).
  std::vector<std::size_t> stack;
  stack.reserve(n);
  if (seq.notation == Notation::Postfix) {
    for (std::size_t i = 0; i < n; ++i) {
      switch (tk[i].arity()) {
        case 0: table[i] = {i, i, 0}; break;
        case 1: {
          const auto child = table[stack.back()];
          stack.pop_back();
          table[i] = {child.start, i, child.depth + 1};
          break;
        }
        default: {
          const auto right = table[stack.back()];
          stack.pop_back();
          const auto left = table[stack.back()];
          stack.pop_back();
          table[i] = {left.start, i, std::max(left.depth, right.depth) + 1};
        }
      }
      stack.push_back(i);
    }
  } else {
    for (std::size_t i = n; i-- > 0;) {
      switch (tk[i].arity()) {
        case 0: table[i] = {i, i, 0}; break;
        case 1: {
          const auto child = table[stack.back()];
          stack.pop_back();
          table[i] = {i, child.stop, child.depth + 1};
          break;
        }
        default: {
          const auto first = table[stack.back()];
          stack.pop_back();
          const auto second = table[stack.back()];
          stack.pop_back();
          table[i] = {i, second.stop, std::max(first.depth, second.depth) + 1};
        }
      }
      stack.push_back(i);
    }
  }
  return table;
}

std::vector<SubExprSpan> find_subexpressions_of_depth(const ExpressionSeq& seq, int n) {
  std::vector<SubExprSpan> out;
  for (const auto& span : subexpression_table(seq))
    if (span.depth == n) out.push_back(span);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  return out;
}

TreeStats tree_stats(const ExpressionSeq& seq) {
  const int depth = depth_of(seq);
  return {seq.size(), depth, static_cast<double>(seq.size()) / static_cast<double>(depth + 1)};
}

namespace {

// Children of the node at `root` as spans, first operand first.
std::vector<SubExprSpan> children(const ExpressionSeq& seq, const std::vector<SubExprSpan>& table,
                                  std::size_t root) {
  const int arity = seq.tokens[root].arity();
  if (arity == 0) return {};
  if (seq.notation == Notation::Prefix) {
    const auto first = table[root + 1];
    if (arity == 1) return {first};
    return {first, table[first.stop + 1]};
  }
  const auto last = table[root - 1];
  if (arity == 1) return {last};
  return {table[last.start - 1], last};
}

std::size_t root_index(const ExpressionSeq& seq) {
  return seq.notation == Notation::Prefix ? 0 : seq.size() - 1;
}

void emit_converted(const ExpressionSeq& seq, const std::vector<SubExprSpan>& table, std::size_t root,
                    std::vector<Token>& out) {
  const bool to_postfix = seq.notation == Notation::Prefix;
  if (!to_postfix) out.push_back(seq.tokens[root]);
  for (const auto& child : children(seq, table, root))
    emit_converted(seq, table, to_postfix ? child.start : child.stop, out);
  if (to_postfix) out.push_back(seq.tokens[root]);
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void emit_infix(const ExpressionSeq& seq, const std::vector<SubExprSpan>& table, std::size_t root,
                const std::vector<std::size_t>& const_slot, std::span<const double> constants,
                std::string& out) {
  const Token t = seq.tokens[root];
  const auto kids = children(seq, table, root);
  auto anchor = [&](const SubExprSpan& s) { return seq.notation == Notation::Prefix ? s.start : s.stop; };
  switch (t.kind) {
    case TokenKind::Variable: out += token_text(t); break;
    case TokenKind::Constant:
      out += constants.empty() ? std::string("const") : format_number(constants[const_slot[root]]);
      break;
    case TokenKind::UnaryOp:
      out += symbol(t.unary_op());
      out += '(';
      emit_infix(seq, table, anchor(kids[0]), const_slot, constants, out);
      out += ')';
      break;
    case TokenKind::BinaryOp:
      out += '(';
      emit_infix(seq, table, anchor(kids[0]), const_slot, constants, out);
      out += ' ';
      out += symbol(t.binary_op());
      out += ' ';
      emit_infix(seq, table, anchor(kids[1]), const_slot, constants, out);
      out += ')';
      break;
  }
}

}  // namespace

ExpressionSeq convert_notation(const ExpressionSeq& seq) {
  const auto table = subexpression_table(seq);
  ExpressionSeq out;
  out.notation = seq.notation == Notation::Prefix ? Notation::Postfix : Notation::Prefix;
  out.tokens.reserve(seq.size());
  emit_converted(seq, table, root_index(seq), out.tokens);
  return out;
}

std::string to_infix(const ExpressionSeq& seq) { return to_infix(seq, {}); }

std::string to_infix(const ExpressionSeq& seq, std::span<const double> constants) {
  const auto table = subexpression_table(seq);
  std::vector<std::size_t> const_slot(seq.size(), 0);
  std::size_t next = 0;
  for (std::size_t i = 0; i < seq.size(); ++i)
    if (seq.tokens[i].kind == TokenKind::Constant) const_slot[i] = next++;
  if (!constants.empty() && constants.size() != next)
    throw std::invalid_argument("constant count does not match the expression");
  std::string out;
  emit_infix(seq, table, root_index(seq), const_slot, constants, out);
  return out;
}

std::size_t count_constants(std::span<const Token> tokens) {
  return static_cast<std::size_t>(
      std::count_if(tokens.begin(), tokens.end(), [](Token t) { return t.kind == TokenKind::Constant; }));
}

std::size_t count_leaves(std::span<const Token> tokens) {
  return static_cast<std::size_t>(std::count_if(tokens.begin(), tokens.end(), [](Token t) { return t.is_leaf(); }));
}

std::size_t count_binary(std::span<const Token> tokens) {
  return static_cast<std::size_t>(
      std::count_if(tokens.begin(), tokens.end(), [](Token t) { return t.kind == TokenKind::BinaryOp; }));
}

ExpressionSeq splice(const ExpressionSeq& seq, const SubExprSpan& span, std::span<const Token> replacement) {
  if (span.start > span.stop || span.stop >= seq.size()) throw std::out_of_range("splice span out of range");
  ExpressionSeq out;
  out.notation = seq.notation;
  out.tokens.reserve(seq.size() - span.length() + replacement.size());
  out.tokens.insert(out.tokens.end(), seq.tokens.begin(), seq.tokens.begin() + static_cast<std::ptrdiff_t>(span.start));
  out.tokens.insert(out.tokens.end(), replacement.begin(), replacement.end());
  out.tokens.insert(out.tokens.end(), seq.tokens.begin() + static_cast<std::ptrdiff_t>(span.stop) + 1,
                    seq.tokens.end());
  return out;
}

std::string format_tokens(std::span<const Token> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += token_text(tokens[i]);
  }
  return out;
}

ExpressionSeq parse_expression(std::string_view text, Notation notation) {
  ExpressionSeq seq;
  seq.notation = notation;
  std::size_t pos = 0;
  std::size_t index = 0;
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (pos < text.size()) {
    while (pos < text.size() && is_space(text[pos])) ++pos;
    if (pos >= text.size()) break;
    std::size_t end = pos;
    while (end < text.size() && !is_space(text[end])) ++end;
    const auto word = text.substr(pos, end - pos);
    auto token = parse_token(word);
    if (!token)
      throw ExpressionError("unknown token '" + std::string(word) + "' at position " + std::to_string(index), index);
    seq.tokens.push_back(*token);
    ++index;
    pos = end;
  }
  return seq;
}

ExpressionFile read_expressions(std::istream& in, Notation fallback) {
  ExpressionFile file;
  file.notation = fallback;
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    std::string_view view(line);
    const auto first = view.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) continue;
    view.remove_prefix(first);
    if (view.starts_with("#")) {
      constexpr std::string_view directive = "#notation:";
      if (view.starts_with(directive)) {
        auto value = view.substr(directive.size());
        const auto b = value.find_first_not_of(" \t");
        const auto e = value.find_last_not_of(" \t\r");
        file.notation = parse_notation(b == std::string_view::npos ? "" : value.substr(b, e - b + 1));
      }
      continue;
    }
    lines.emplace_back(view);
  }
  for (const auto& l : lines) file.expressions.push_back(parse_expression(l, file.notation));
  return file;
}

void write_expressions(std::ostream& out, Notation notation, std::span<const ExpressionSeq> expressions) {
  out << "#notation: " << to_string(notation) << '\n';
  for (const auto& e : expressions) out << format_tokens(e.tokens) << '\n';
}

}  // namespace fdsr
