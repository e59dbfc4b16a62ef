#pragma once

// Reference implementations used by the tests. They build explicit trees
// and enumerate by brute force, sharing no code with the library beyond the
// Token type.

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <vector>

#include "fdsr/token.hpp"

namespace oracle {

using fdsr::ExpressionSeq;
using fdsr::Notation;
using fdsr::Token;

struct Node {
  Token token;
  std::vector<std::unique_ptr<Node>> kids;
  std::size_t position = 0;  // index of the token in the sequence it came from
  std::size_t first = 0;     // leftmost token index covered by this subtree
  std::size_t last = 0;      // rightmost token index covered by this subtree
};

using Tree = std::unique_ptr<Node>;

inline Tree parse_prefix(const std::vector<Token>& t, std::size_t& pos) {
  if (pos >= t.size()) throw std::runtime_error("prefix sequence ends early");
  auto n = std::make_unique<Node>();
  n->token = t[pos];
  n->position = n->first = pos;
  ++pos;
  for (int i = 0; i < t[n->position].arity(); ++i) n->kids.push_back(parse_prefix(t, pos));
  n->last = pos - 1;
  return n;
}

/// Explicit tree for a complete sequence; throws when it is not complete.
inline Tree build(const ExpressionSeq& seq) {
  if (seq.notation == Notation::Prefix) {
    std::size_t pos = 0;
    auto root = parse_prefix(seq.tokens, pos);
    if (pos != seq.tokens.size()) throw std::runtime_error("tokens after the root is complete");
    return root;
  }
  std::vector<Tree> stack;
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    auto n = std::make_unique<Node>();
    n->token = seq.tokens[i];
    n->position = n->last = i;
    n->first = i;
    const int arity = n->token.arity();
    if (static_cast<int>(stack.size()) < arity) throw std::runtime_error("stack underflow");
    std::vector<Tree> kids;
    for (int k = 0; k < arity; ++k) {
      kids.insert(kids.begin(), std::move(stack.back()));
      stack.pop_back();
    }
    if (!kids.empty()) n->first = kids.front()->first;
    n->kids = std::move(kids);
    stack.push_back(std::move(n));
  }
  if (stack.size() != 1) throw std::runtime_error("postfix sequence is not a single tree");
  return std::move(stack.front());
}

inline int depth(const Node& n) {
  int d = 0;
  for (const auto& k : n.kids) d = std::max(d, depth(*k) + 1);
  return d;
}

inline void emit(const Node& n, Notation notation, std::vector<Token>& out) {
  if (notation == Notation::Prefix) out.push_back(n.token);
  for (const auto& k : n.kids) emit(*k, notation, out);
  if (notation == Notation::Postfix) out.push_back(n.token);
}

inline std::vector<Token> serialize(const Node& n, Notation notation) {
  std::vector<Token> out;
  emit(n, notation, out);
  return out;
}

inline void collect(const Node& n, std::vector<const Node*>& out) {
  out.push_back(&n);
  for (const auto& k : n.kids) collect(*k, out);
}

/// Node for every token index.
inline std::vector<const Node*> nodes_by_position(const Node& root, std::size_t size) {
  std::vector<const Node*> all;
  collect(root, all);
  std::vector<const Node*> out(size, nullptr);
  for (const auto* n : all) out[n->position] = n;
  return out;
}

/// Every tree of depth at most `d`, as prefix token lists.
inline std::vector<std::vector<Token>> trees_up_to(int d, const std::vector<Token>& unary,
                                                   const std::vector<Token>& binary,
                                                   const std::vector<Token>& leaves) {
  std::vector<std::vector<Token>> level;
  for (Token l : leaves) level.push_back({l});
  for (int k = 1; k <= d; ++k) {
    std::vector<std::vector<Token>> next;
    for (Token l : leaves) next.push_back({l});
    for (Token u : unary)
      for (const auto& t : level) {
        std::vector<Token> s{u};
        s.insert(s.end(), t.begin(), t.end());
        next.push_back(std::move(s));
      }
    for (Token b : binary)
      for (const auto& a : level)
        for (const auto& c : level) {
          std::vector<Token> s{b};
          s.insert(s.end(), a.begin(), a.end());
          s.insert(s.end(), c.begin(), c.end());
          next.push_back(std::move(s));
        }
    level = std::move(next);
  }
  return level;
}

/// Every tree of depth exactly `d`, as a set of prefix token lists.
inline std::set<std::vector<Token>> trees_of_depth(int d, const std::vector<Token>& unary,
                                                   const std::vector<Token>& binary,
                                                   const std::vector<Token>& leaves) {
  std::set<std::vector<Token>> out;
  for (auto& t : trees_up_to(d, unary, binary, leaves)) {
    const auto tree = build({Notation::Prefix, t});
    if (depth(*tree) == d) out.insert(std::move(t));
  }
  return out;
}

/// Shallowest complete tree reachable by appending tokens to a postfix
/// stack of subtree depths, searching every extension that pushes at most
/// `extra_leaves` further leaves. Branches are cut once any entry reaches
/// the best depth found, starting from the trivial bound max + size.
inline int postfix_completion_oracle(std::vector<int> stack, int extra_leaves = 3) {
  int best = *std::max_element(stack.begin(), stack.end()) + static_cast<int>(stack.size());
  std::function<void(std::vector<int>&, int)> go = [&](std::vector<int>& s, int budget) {
    for (int v : s)
      if (v > best || (v == best && s.size() > 1)) return;
    if (s.size() == 1) best = std::min(best, s[0]);
    if (s.size() >= 2) {
      const int a = s.back();
      s.pop_back();
      const int b = s.back();
      s.back() = std::max(a, b) + 1;
      go(s, budget);
      s.back() = b;
      s.push_back(a);
    }
    if (s.back() < best) {
      ++s.back();
      go(s, budget);
      --s.back();
    }
    if (budget > 0) {
      s.push_back(0);
      go(s, budget - 1);
      s.pop_back();
    }
  };
  go(stack, extra_leaves);
  return best;
}

/// Shallowest depth over every complete expression formed by appending at
/// most `max_extra` tokens from `alphabet` to `partial`; -1 when none exists.
inline int completion_brute_force(const ExpressionSeq& partial, const std::vector<Token>& alphabet,
                                  std::size_t max_extra) {
  int best = -1;
  std::vector<Token> seq = partial.tokens;
  // Prefix: open argument slots; postfix: stack height.
  auto balance = [&](const std::vector<Token>& t, bool& valid) {
    long b = partial.notation == Notation::Prefix ? 1 : 0;
    valid = true;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (partial.notation == Notation::Prefix) {
        if (b == 0) valid = false;
        b += t[i].arity() - 1;
      } else {
        if (b < t[i].arity()) valid = false;
        b += 1 - t[i].arity();
      }
    }
    return b;
  };
  std::function<void(std::size_t)> go = [&](std::size_t extra) {
    bool valid = true;
    const long b = balance(seq, valid);
    if (!valid) return;
    const bool complete = partial.notation == Notation::Prefix ? b == 0 : b == 1;
    if (complete && !seq.empty()) {
      const int d = depth(*build({partial.notation, seq}));
      if (best < 0 || d < best) best = d;
      if (partial.notation == Notation::Prefix) return;
    }
    if (extra == max_extra) return;
    for (Token t : alphabet) {
      seq.push_back(t);
      go(extra + 1);
      seq.pop_back();
    }
  };
  go(0);
  return best;
}

}  // namespace oracle
