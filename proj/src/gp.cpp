#include <algorithm>

#include "fdsr/search.hpp"

namespace fdsr {

std::vector<Individual> select_top(std::vector<Individual> pool, std::size_t capacity) {
  std::stable_sort(pool.begin(), pool.end(), [](const Individual& a, const Individual& b) { return a.score > b.score; });
  if (pool.size() > capacity) pool.resize(capacity);
  return pool;
}

GpEngine::GpEngine(const SearchConfig& cfg, const TokenTable& table, const Dataset& data, RunRecorder& recorder)
    : cfg_(cfg), table_(table), data_(data), recorder_(recorder), rng_(cfg.seed) {
  cfg.validate();
  table.require_supports_depth(cfg.depth);
}

Individual GpEngine::evaluate(ExpressionSeq seq) {
  auto fit = fit_constants(seq, data_, &cache_, cfg_.fit, evaluator_);
  recorder_.record(seq, fit);
  return {std::move(seq), std::move(fit.constants), fit.mse, fit.score};
}

void GpEngine::initialize() {
  population_.clear();
  population_.reserve(cfg_.gp_population);
  while (population_.size() < cfg_.gp_population && !recorder_.exhausted())
    population_.push_back(evaluate(random_rollout(cfg_.notation, cfg_.depth, table_, rng_)));
}

std::size_t GpEngine::step_generation() {
  const std::size_t parents = population_.size();
  if (parents == 0) return 0;
  std::vector<Individual> offspring;
  offspring.reserve(cfg_.gp_population + 1);
  while (offspring.size() < cfg_.gp_population && !recorder_.exhausted()) {
    const bool cross = parents >= 2 && uniform_real(rng_, 0.0, 1.0) < cfg_.gp_crossover_probability;
    if (cross) {
      const std::size_t i = uniform_index(rng_, parents);
      std::size_t j = uniform_index(rng_, parents - 1);
      if (j >= i) ++j;
      auto [a, b] = crossover(population_[i].seq, population_[j].seq, cfg_.depth, rng_);
      offspring.push_back(evaluate(std::move(a)));
      if (!recorder_.exhausted()) offspring.push_back(evaluate(std::move(b)));
    } else {
      const std::size_t i = uniform_index(rng_, parents);
      offspring.push_back(evaluate(mutate(population_[i].seq, cfg_.depth, table_, rng_)));
    }
  }
  const std::size_t produced = offspring.size();
  population_.insert(population_.end(), std::make_move_iterator(offspring.begin()),
                     std::make_move_iterator(offspring.end()));
  population_ = select_top(std::move(population_), cfg_.gp_population);
  return produced;
}

RunTrace gp_search(const SearchConfig& cfg, const TokenTable& table, const Dataset& data, EvaluationHook hook) {
  RunRecorder recorder(cfg, std::move(hook));
  GpEngine engine(cfg, table, data, recorder);
  engine.initialize();
  while (!recorder.exhausted()) engine.step_generation();
  return recorder.finish();
}

}  // namespace fdsr
