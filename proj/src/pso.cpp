#include <cmath>
#include <limits>
#include <map>

#include "fdsr/search.hpp"

namespace fdsr {

std::size_t pso_token_index(double position, std::size_t count) {
  if (count == 0) throw std::invalid_argument("no tokens to choose from");
  if (!std::isfinite(position)) return 0;
  double m = std::fmod(std::round(position), static_cast<double>(count));
  if (m < 0) m += static_cast<double>(count);
  const auto idx = static_cast<std::size_t>(m);
  return idx < count ? idx : 0;
}

double pso_velocity(double v, double pp, double bp, double p, double rg, double rp, double c,
                    const PsoCoefficients& k) {
  return k.inertia * v + k.phi1 * rg * (bp - pp) + k.phi2 * rp * (p - pp) + c;
}

void PerturbationSchedule::on_epoch(double best_score, Rng& rng) {
  if (best_score > checkpoint_) {
    c_ = 0.0;
    m_ = 0;
    checkpoint_ = best_score;
  } else {
    ++m_;
    c_ = uniform_real(rng, -m_, m_);
  }
}

namespace {

// One particle per token position in the expression.
struct Particle {
  double position = 0.0;
  double velocity = 0.0;
  double best_position = 0.0;  // position used in the best expression so far
  double avg_position = 0.0;   // position whose token index has the best mean score

  struct Mean {
    double sum = 0.0;
    std::uint64_t count = 0;
    double position = 0.0;
    double value() const { return sum / static_cast<double>(count); }
  };
  std::map<std::size_t, Mean> means;  // keyed by the token index the position selected

  void add_score(std::size_t index, double position_used, double score) {
    auto& m = means[index];
    m.sum += score;
    ++m.count;
    m.position = position_used;
    double best = -1.0;
    for (const auto& [idx, mean] : means) {
      if (mean.value() > best) {
        best = mean.value();
        avg_position = mean.position;
      }
    }
  }
};

}  // namespace

RunTrace pso_search(const SearchConfig& cfg, const TokenTable& table, const Dataset& data, EvaluationHook hook) {
  cfg.validate();
  table.require_supports_depth(cfg.depth);
  Rng rng(cfg.seed);
  ConstCache cache;
  Evaluator evaluator;
  RunRecorder recorder(cfg, std::move(hook));
  PerturbationSchedule perturbation;
  const PsoCoefficients coeff{cfg.pso_inertia, cfg.pso_phi1, cfg.pso_phi2};

  std::vector<Particle> particles;
  std::vector<double> used_position;
  std::vector<std::size_t> used_index;
  auto spawn = [&](Particle& p) {
    p.position = uniform_real(rng, 0.0, 1.0);
    p.velocity = uniform_real(rng, -1.0, 1.0);
  };

  while (!recorder.exhausted()) {
    GrammarState state(cfg.notation, cfg.depth);
    used_position.clear();
    used_index.clear();
    for (std::size_t i = 0; !state.finished(); ++i) {
      const auto legal = legal_tokens(state, table);
      if (i == particles.size()) {
        Particle p;
        spawn(p);
        p.best_position = p.position;
        p.avg_position = p.position;
        particles.push_back(std::move(p));
      }
      auto& p = particles[i];
      const std::size_t idx = pso_token_index(p.position, legal.size());
      state.apply(legal[idx]);
      used_position.push_back(p.position);
      used_index.push_back(idx);

      const double rg = uniform_real(rng, 0.0, 1.0);
      const double rp = uniform_real(rng, 0.0, 1.0);
      p.velocity = pso_velocity(p.velocity, p.position, p.best_position, p.avg_position, rg, rp,
                                perturbation.value(), coeff);
      p.position += p.velocity;
      if (!std::isfinite(p.position) || !std::isfinite(p.velocity)) spawn(p);
    }

    const auto seq = state.expression();
    const auto fit = fit_constants(seq, data, &cache, cfg.fit, evaluator);
    const bool improved = recorder.record(seq, fit);
    for (std::size_t i = 0; i < used_position.size(); ++i) {
      if (improved) particles[i].best_position = used_position[i];
      particles[i].add_score(used_index[i], used_position[i], fit.score);
    }
    if (recorder.epoch_boundary()) perturbation.on_epoch(recorder.best_score(), rng);
  }
  return recorder.finish();
}

}  // namespace fdsr
