#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fdsr/token.hpp"

namespace fdsr {

/// Depth (edges on the longest root-leaf path, a lone leaf is 0) and
/// whether the sequence forms exactly one tree.
struct DepthInfo {
  int depth = 0;
  bool complete = false;
  friend bool operator==(const DepthInfo&, const DepthInfo&) = default;
};

/// Single left-to-right pass over a prefix sequence. For a partial sequence
/// the depth includes the argument slots already opened by placed operators,
/// so it is the depth every completion must reach.
DepthInfo pn_depth(std::span<const Token> tokens);

/// Single left-to-right pass over a postfix sequence keeping a stack of
/// completed-subtree depths. For a partial sequence the depth is the deepest
/// completed subtree on the stack.
DepthInfo rpn_depth(std::span<const Token> tokens);

DepthInfo depth_info(const ExpressionSeq& seq);

/// Depth of a complete sequence; throws ExpressionError if incomplete.
int depth_of(const ExpressionSeq& seq);

/// Smallest depth over every complete extension of `seq` (the sequence's own
/// depth if it is already complete). An empty sequence needs one leaf: 0.
///
/// Prefix: fill each open argument slot with a leaf.
/// Postfix: binary operators can only merge the top two stack entries, so the
/// cheapest completion folds the stack from the top down,
/// r = d_k, r = max(d_i, r) + 1 for i = k-1 .. 1.
int min_completion_depth(const ExpressionSeq& seq);

/// Inclusive token range of one sub-expression and that sub-expression's depth.
struct SubExprSpan {
  std::size_t start = 0;
  std::size_t stop = 0;
  int depth = 0;

  std::size_t length() const { return stop - start + 1; }
  friend bool operator==(const SubExprSpan&, const SubExprSpan&) = default;
};

/// Sub-expression anchored at tokens[idx]: right grasp [idx, bound] for
/// prefix, left grasp [bound, idx] for postfix. Uses the pending-argument
/// counting walk, no tree is built.
SubExprSpan grasp_span(const ExpressionSeq& seq, std::size_t idx);

/// Span of the sub-expression anchored at every index, in one stack pass.
std::vector<SubExprSpan> subexpression_table(const ExpressionSeq& seq);

/// All sub-expressions of depth exactly `n`, in ascending start order.
std::vector<SubExprSpan> find_subexpressions_of_depth(const ExpressionSeq& seq, int n);

struct TreeStats {
  std::size_t num_nodes = 0;
  int depth = 0;
  /// num_nodes / (depth + 1)
  double avg_nodes_per_layer = 0.0;
};

TreeStats tree_stats(const ExpressionSeq& seq);

/// The same tree in the other notation.
ExpressionSeq convert_notation(const ExpressionSeq& seq);

/// Fully parenthesised infix: "(a + b)", "cos(a)".
std::string to_infix(const ExpressionSeq& seq);
/// As above with constant tokens replaced by `constants`, left to right.
std::string to_infix(const ExpressionSeq& seq, std::span<const double> constants);

std::size_t count_constants(std::span<const Token> tokens);
std::size_t count_leaves(std::span<const Token> tokens);
std::size_t count_binary(std::span<const Token> tokens);

/// Replaces tokens[span.start..=span.stop] with `replacement`.
ExpressionSeq splice(const ExpressionSeq& seq, const SubExprSpan& span, std::span<const Token> replacement);

/// Throws ExpressionError unless `seq` is a complete expression.
void require_complete(const ExpressionSeq& seq);

// Expression text format: whitespace separated tokens, one expression per
// line, preceded by a `#notation: prefix|postfix` directive.

std::string format_tokens(std::span<const Token> tokens);

/// Tokenises one line. Unknown symbols raise ExpressionError carrying the
/// token position. Structure is not checked.
ExpressionSeq parse_expression(std::string_view text, Notation notation);

struct ExpressionFile {
  Notation notation = Notation::Prefix;
  std::vector<ExpressionSeq> expressions;
};

/// Reads the directive (defaulting to `fallback` when absent), then one
/// expression per non-empty, non-comment line.
ExpressionFile read_expressions(std::istream& in, Notation fallback = Notation::Prefix);
void write_expressions(std::ostream& out, Notation notation, std::span<const ExpressionSeq> expressions);

}  // namespace fdsr
