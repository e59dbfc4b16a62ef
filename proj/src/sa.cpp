#include <algorithm>
#include <cmath>

#include "fdsr/search.hpp"

namespace fdsr {

double sa_acceptance_probability(double delta, double temperature) {
  return std::min(1.0, std::exp(delta / temperature));
}

double sa_cool(double temperature, std::size_t iteration, double t_min, double t_max) {
  const double r = std::pow(t_min / t_max, 1.0 / static_cast<double>(iteration + 1));
  return std::clamp(r * temperature, t_min, t_max);
}

double sa_epoch_adjust(double temperature, bool improved, double t_min, double t_max) {
  return improved ? std::max(temperature / 10.0, t_min) : std::min(10.0 * temperature, t_max);
}

RunTrace sa_search(const SearchConfig& cfg, const TokenTable& table, const Dataset& data, EvaluationHook hook) {
  cfg.validate();
  table.require_supports_depth(cfg.depth);
  Rng rng(cfg.seed);
  ConstCache cache;
  Evaluator evaluator;
  RunRecorder recorder(cfg, std::move(hook));
  if (recorder.exhausted()) return recorder.finish();

  ExpressionSeq current = random_rollout(cfg.notation, cfg.depth, table, rng);
  recorder.record(current, fit_constants(current, data, &cache, cfg.fit, evaluator));
  double temperature = cfg.sa_t_max;
  double checkpoint = recorder.best_score();

  for (std::size_t i = 0; !recorder.exhausted(); ++i) {
    auto candidate = perturb(current, cfg.depth, table, rng);
    const auto fit = fit_constants(candidate, data, &cache, cfg.fit, evaluator);
    const double best_before = recorder.best_score();
    recorder.record(candidate, fit);
    if (fit.score > best_before ||
        uniform_real(rng, 0.0, 1.0) < sa_acceptance_probability(fit.score - best_before, temperature))
      current = std::move(candidate);
    temperature = sa_cool(temperature, i, cfg.sa_t_min, cfg.sa_t_max);
    if (recorder.epoch_boundary()) {
      temperature = sa_epoch_adjust(temperature, recorder.best_score() > checkpoint, cfg.sa_t_min, cfg.sa_t_max);
      checkpoint = recorder.best_score();
    }
  }
  return recorder.finish();
}

}  // namespace fdsr
