#include <stdexcept>

#include "fdsr/expr.hpp"
#include "fdsr/search.hpp"

namespace fdsr {

namespace {

const SubExprSpan& pick_span(const std::vector<SubExprSpan>& spans, int n, Rng& rng) {
  if (spans.empty()) throw std::logic_error("expression has no sub-expression of depth " + std::to_string(n));
  return spans[uniform_index(rng, spans.size())];
}

int draw_depth(int upper_inclusive, Rng& rng) {
  return std::uniform_int_distribution<int>(0, upper_inclusive)(rng);
}

}  // namespace

ExpressionSeq replace_subexpression(const ExpressionSeq& individual, int n, const TokenTable& table, Rng& rng) {
  const auto fresh = random_rollout(individual.notation, n, table, rng);
  const auto spans = find_subexpressions_of_depth(individual, n);
  return splice(individual, pick_span(spans, n, rng), fresh.tokens);
}

ExpressionSeq mutate(const ExpressionSeq& individual, int depth, const TokenTable& table, Rng& rng) {
  if (depth == 0) return random_rollout(individual.notation, 0, table, rng);
  return replace_subexpression(individual, draw_depth(depth - 1, rng), table, rng);
}

ExpressionSeq perturb(const ExpressionSeq& individual, int depth, const TokenTable& table, Rng& rng) {
  return replace_subexpression(individual, draw_depth(depth, rng), table, rng);
}

std::pair<ExpressionSeq, ExpressionSeq> crossover_at(const ExpressionSeq& a, const ExpressionSeq& b, int n,
                                                     Rng& rng) {
  if (a.notation != b.notation) throw std::invalid_argument("crossover parents use different notations");
  const auto spans_a = find_subexpressions_of_depth(a, n);
  const auto spans_b = find_subexpressions_of_depth(b, n);
  const auto& sa = pick_span(spans_a, n, rng);
  const auto& sb = pick_span(spans_b, n, rng);
  const std::span<const Token> slice_a(a.tokens.data() + sa.start, sa.length());
  const std::span<const Token> slice_b(b.tokens.data() + sb.start, sb.length());
  return {splice(a, sa, slice_b), splice(b, sb, slice_a)};
}

std::pair<ExpressionSeq, ExpressionSeq> crossover(const ExpressionSeq& a, const ExpressionSeq& b, int depth,
                                                  Rng& rng) {
  if (depth == 0) return {b, a};
  return crossover_at(a, b, draw_depth(depth - 1, rng), rng);
}

}  // namespace fdsr
