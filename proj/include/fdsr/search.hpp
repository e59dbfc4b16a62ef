#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fdsr/eval.hpp"
#include "fdsr/grammar.hpp"
#include "fdsr/random.hpp"
#include "fdsr/token.hpp"

namespace fdsr {

enum class Algorithm : std::uint8_t { Random, Mcts, Pso, Gp, Sa };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view s);
/// 1-based id used in the decision-tree feature columns.
int algorithm_id(Algorithm a);

inline const double kSqrt2 = std::sqrt(2.0);

struct SearchConfig {
  Algorithm algorithm = Algorithm::Random;
  Notation notation = Notation::Prefix;
  int depth = 3;
  /// Epoch length for the exploration / perturbation / temperature rules,
  /// counted in completed expressions.
  std::size_t n_iter = 50'000;
  double time_budget_seconds = 120.0;
  double sample_interval_seconds = 6.0;
  /// When non-zero the run ignores the wall clock: it stops after this many
  /// completed expressions and samples every `sample_every_iterations`.
  std::size_t iteration_cap = 0;
  std::size_t sample_every_iterations = 100;
  std::uint64_t seed = 0;
  FitConfig fit;

  std::size_t gp_population = 2000;
  double gp_crossover_probability = 0.2;

  double pso_inertia = 0.721;
  double pso_phi1 = 2.8;
  double pso_phi2 = 1.3;

  double sa_t_min = 0.012;
  double sa_t_max = 0.1;

  double mcts_c = kSqrt2;

  bool time_free() const { return iteration_cap > 0; }
  void validate() const;
};

struct TraceSample {
  double elapsed_seconds = 0.0;  // nominal sample time; 0 in time-free mode
  std::size_t iterations = 0;
  double best_mse = std::numeric_limits<double>::infinity();
  friend bool operator==(const TraceSample&, const TraceSample&) = default;
};

struct RunTrace {
  std::vector<TraceSample> samples;
  ExpressionSeq best_expression;
  std::vector<double> best_constants;
  double best_mse = std::numeric_limits<double>::infinity();
  double best_score = 0.0;
  std::size_t iterations = 0;
};

/// Called for every fitted expression, in evaluation order.
using EvaluationHook = std::function<void(const ExpressionSeq&, const FitResult&)>;

/// Budget accounting, best-so-far tracking and periodic best-MSE sampling
/// shared by all algorithms. Wall-clock samples are taken at the nominal
/// times k * interval and report the best known before that instant.
class RunRecorder {
 public:
  explicit RunRecorder(const SearchConfig& cfg, EvaluationHook hook = {});

  bool exhausted() const;
  /// Accounts one completed expression; returns true on a new best score.
  bool record(const ExpressionSeq& seq, const FitResult& fit);

  std::size_t iterations() const { return trace_.iterations; }
  double best_score() const { return trace_.best_score; }
  double best_mse() const { return trace_.best_mse; }
  /// True at the end of every n_iter-th completed expression.
  bool epoch_boundary() const { return trace_.iterations > 0 && trace_.iterations % n_iter_ == 0; }

  RunTrace finish();

 private:
  using Clock = std::chrono::steady_clock;
  double elapsed() const;
  void emit_due_samples(double now);

  RunTrace trace_;
  EvaluationHook hook_;
  Clock::time_point start_;
  bool time_free_;
  double budget_;
  double interval_;
  std::size_t cap_;
  std::size_t every_;
  std::size_t n_iter_;
  std::size_t next_sample_ = 1;
};

RunTrace run_search(const SearchConfig& cfg, const TokenTable& table, const Dataset& data,
                    EvaluationHook hook = {});

RunTrace random_search(const SearchConfig& cfg, const TokenTable& table, const Dataset& data,
                       EvaluationHook hook = {});
RunTrace mcts_search(const SearchConfig& cfg, const TokenTable& table, const Dataset& data,
                     EvaluationHook hook = {});
RunTrace pso_search(const SearchConfig& cfg, const TokenTable& table, const Dataset& data,
                    EvaluationHook hook = {});
RunTrace gp_search(const SearchConfig& cfg, const TokenTable& table, const Dataset& data,
                   EvaluationHook hook = {});
RunTrace sa_search(const SearchConfig& cfg, const TokenTable& table, const Dataset& data,
                   EvaluationHook hook = {});

// ---------------------------------------------------------------------------
// Depth-preserving variation operators (no tree is ever built).

/// Replaces one uniformly chosen depth-`n` sub-expression of `individual` with
/// a fresh random depth-`n` expression.
ExpressionSeq replace_subexpression(const ExpressionSeq& individual, int n, const TokenTable& table, Rng& rng);

/// n ~ U{0..N-1}, then replace_subexpression. At N = 0 the whole expression
/// is replaced by a random leaf.
ExpressionSeq mutate(const ExpressionSeq& individual, int depth, const TokenTable& table, Rng& rng);

/// n ~ U{0..N}: the simulated-annealing neighbour, which may replace the
/// whole expression.
ExpressionSeq perturb(const ExpressionSeq& individual, int depth, const TokenTable& table, Rng& rng);

/// Swaps one uniformly chosen depth-`n` sub-expression between the parents.
std::pair<ExpressionSeq, ExpressionSeq> crossover_at(const ExpressionSeq& a, const ExpressionSeq& b, int n, Rng& rng);

/// n ~ U{0..N-1}, then crossover_at.
std::pair<ExpressionSeq, ExpressionSeq> crossover(const ExpressionSeq& a, const ExpressionSeq& b, int depth, Rng& rng);

// ---------------------------------------------------------------------------
// MCTS mechanics.

struct ActionStats {
  double q = 0.0;
  std::uint64_t visits = 0;
};

/// Q + c * sqrt(ln N(s) / N(s,a)); requires visits > 0.
double uct_value(double q, std::uint64_t action_visits, std::uint64_t state_visits, double c);

/// First action with zero visits, otherwise the UCT argmax (first on ties).
std::size_t select_action(std::span<const ActionStats> actions, std::uint64_t state_visits, double c);

/// Q <- max(Q, score).
inline double updated_q(double q, double score) { return std::max(q, score); }

/// Every epoch: c <- c0 if the best score improved since the previous epoch,
/// else c <- c + c0.
class ExplorationSchedule {
 public:
  explicit ExplorationSchedule(double c0 = kSqrt2) : c0_(c0), c_(c0) {}
  double value() const { return c_; }
  void on_epoch(double best_score);

 private:
  double c0_;
  double c_;
  double checkpoint_ = 0.0;
};

// ---------------------------------------------------------------------------
// PSO mechanics.

/// round(position) half away from zero, reduced modulo `count` into [0, count).
std::size_t pso_token_index(double position, std::size_t count);

struct PsoCoefficients {
  double inertia = 0.721;
  double phi1 = 2.8;
  double phi2 = 1.3;
};

/// inertia*v + phi1*rg*(bp - pp) + phi2*rp*(p - pp) + c
double pso_velocity(double v, double pp, double bp, double p, double rg, double rp, double c,
                    const PsoCoefficients& k = {});

/// c starts at 0. An epoch without improvement widens m by one and draws
/// c ~ U(-m, m); an improving epoch resets c = 0 and m = 0.
class PerturbationSchedule {
 public:
  double value() const { return c_; }
  int width() const { return m_; }
  void on_epoch(double best_score, Rng& rng);

 private:
  double c_ = 0.0;
  int m_ = 0;
  double checkpoint_ = 0.0;
};

// ---------------------------------------------------------------------------
// Simulated annealing mechanics.

/// min(1, exp(delta / T)).
double sa_acceptance_probability(double delta, double temperature);

/// T * (t_min / t_max)^(1/(i+1)) clamped to [t_min, t_max].
double sa_cool(double temperature, std::size_t iteration, double t_min, double t_max);

/// Epoch rule: no improvement -> min(10T, t_max), otherwise max(T/10, t_min).
double sa_epoch_adjust(double temperature, bool improved, double t_min, double t_max);

// ---------------------------------------------------------------------------
// GP engine, exposed so generations can be stepped and inspected.

struct Individual {
  ExpressionSeq seq;
  std::vector<double> constants;
  double mse = std::numeric_limits<double>::infinity();
  double score = 0.0;
};

/// Keeps the `capacity` highest scores; ties keep the earlier entry.
std::vector<Individual> select_top(std::vector<Individual> pool, std::size_t capacity);

class GpEngine {
 public:
  GpEngine(const SearchConfig& cfg, const TokenTable& table, const Dataset& data, RunRecorder& recorder);

  /// Fills the initial population; stops early if the budget runs out.
  void initialize();
  /// One generation. Returns the number of offspring produced (fewer than
  /// the population size only if the budget ran out).
  std::size_t step_generation();

  const std::vector<Individual>& population() const { return population_; }

 private:
  Individual evaluate(ExpressionSeq seq);

  const SearchConfig& cfg_;
  const TokenTable& table_;
  const Dataset& data_;
  RunRecorder& recorder_;
  Rng rng_;
  ConstCache cache_;
  Evaluator evaluator_;
  std::vector<Individual> population_;
};

// ---------------------------------------------------------------------------
// Trace serialisation.

struct TraceMeta {
  std::string run_id;
  Algorithm algorithm = Algorithm::Random;
  Notation notation = Notation::Prefix;
  int depth = 0;
};

/// Columns: kind,run_id,algorithm,notation,depth,elapsed_seconds,iterations,
/// best_mse,expression,constants. One `sample` row per trace sample, then a
/// `final` row carrying the best expression and its constants.
void write_trace_csv(std::ostream& out, const TraceMeta& meta, const RunTrace& trace);

struct TraceFile {
  TraceMeta meta;
  std::vector<TraceSample> samples;
  double final_mse = std::numeric_limits<double>::infinity();
  std::size_t final_iterations = 0;
  std::string expression;
  std::vector<double> constants;
};

TraceFile read_trace_csv(std::istream& in);

/// Shortest round-trip text for a double ("inf" / "nan" for non-finite).
std::string format_double(double v);
double parse_double_text(std::string_view s);

}  // namespace fdsr
