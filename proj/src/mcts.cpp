#include <cmath>
#include <limits>

#include "fdsr/search.hpp"

namespace fdsr {

double uct_value(double q, std::uint64_t action_visits, std::uint64_t state_visits, double c) {
  return q + c * std::sqrt(std::log(static_cast<double>(state_visits)) / static_cast<double>(action_visits));
}

std::size_t select_action(std::span<const ActionStats> actions, std::uint64_t state_visits, double c) {
  for (std::size_t i = 0; i < actions.size(); ++i)
    if (actions[i].visits == 0) return i;
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const double v = uct_value(actions[i].q, actions[i].visits, state_visits, c);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

void ExplorationSchedule::on_epoch(double best_score) {
  if (best_score > checkpoint_) {
    c_ = c0_;
    checkpoint_ = best_score;
  } else {
    c_ += c0_;
  }
}

namespace {

// States are keyed by their exact token sequence, so the table is a tree:
// each node is one prefix of the expression under construction.
struct Node {
  std::uint64_t visits = 0;
  std::vector<ActionStats> actions;  // parallel to the state's legal tokens
  std::vector<std::uint32_t> children;
};

constexpr std::uint32_t kNoChild = std::numeric_limits<std::uint32_t>::max();

}  // namespace

RunTrace mcts_search(const SearchConfig& cfg, const TokenTable& table, const Dataset& data, EvaluationHook hook) {
  cfg.validate();
  table.require_supports_depth(cfg.depth);
  ConstCache cache;
  Evaluator evaluator;
  RunRecorder recorder(cfg, std::move(hook));
  ExplorationSchedule exploration(cfg.mcts_c);

  std::vector<Node> nodes(1);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> path;
  while (!recorder.exhausted()) {
    GrammarState state(cfg.notation, cfg.depth);
    path.clear();
    std::uint32_t node = 0;
    while (!state.finished()) {
      const auto legal = legal_tokens(state, table);
      if (nodes[node].actions.empty()) {
        nodes[node].actions.resize(legal.size());
        nodes[node].children.assign(legal.size(), kNoChild);
      }
      const auto a = static_cast<std::uint32_t>(
          select_action(nodes[node].actions, nodes[node].visits, exploration.value()));
      state.apply(legal[a]);
      path.emplace_back(node, a);
      if (nodes[node].children[a] == kNoChild) {
        nodes[node].children[a] = static_cast<std::uint32_t>(nodes.size());
        nodes.emplace_back();
      }
      node = nodes[node].children[a];
    }

    const auto seq = state.expression();
    const auto fit = fit_constants(seq, data, &cache, cfg.fit, evaluator);
    recorder.record(seq, fit);
    for (auto [n, a] : path) {
      auto& stats = nodes[n].actions[a];
      stats.q = updated_q(stats.q, fit.score);
      ++stats.visits;
      ++nodes[n].visits;
    }
    if (recorder.epoch_boundary()) exploration.on_epoch(recorder.best_score());
  }
  return recorder.finish();
}

}  // namespace fdsr
