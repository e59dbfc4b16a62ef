#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "fdsr/expr.hpp"
#include "fdsr/search.hpp"

namespace fdsr {

namespace {
constexpr std::string_view kAlgorithmNames[] = {"random", "mcts", "pso", "gp", "sa"};
}

std::string_view to_string(Algorithm a) { return kAlgorithmNames[static_cast<int>(a)]; }

Algorithm parse_algorithm(std::string_view s) {
  for (std::size_t i = 0; i < std::size(kAlgorithmNames); ++i)
    if (kAlgorithmNames[i] == s) return static_cast<Algorithm>(i);
  throw std::invalid_argument("unknown algorithm '" + std::string(s) + "' (expected random, mcts, pso, gp or sa)");
}

int algorithm_id(Algorithm a) { return static_cast<int>(a) + 1; }

void SearchConfig::validate() const {
  if (depth < 0) throw std::invalid_argument("depth must be >= 0");
  if (n_iter < 1) throw std::invalid_argument("n_iter must be >= 1");
  if (!time_free()) {
    if (!(time_budget_seconds > 0)) throw std::invalid_argument("time budget must be > 0");
    if (!(sample_interval_seconds > 0)) throw std::invalid_argument("sample interval must be > 0");
  } else if (sample_every_iterations < 1) {
    throw std::invalid_argument("sample_every_iterations must be >= 1");
  }
  if (gp_population < 1) throw std::invalid_argument("GP population must be >= 1");
  if (gp_crossover_probability < 0 || gp_crossover_probability > 1)
    throw std::invalid_argument("crossover probability must be in [0, 1]");
  if (!(sa_t_min > 0) || !(sa_t_max >= sa_t_min)) throw std::invalid_argument("need 0 < t_min <= t_max");
  if (!(mcts_c > 0)) throw std::invalid_argument("MCTS exploration constant must be > 0");
  fit.validate();
}

RunRecorder::RunRecorder(const SearchConfig& cfg, EvaluationHook hook)
    : hook_(std::move(hook)),
      start_(Clock::now()),
      time_free_(cfg.time_free()),
      budget_(cfg.time_budget_seconds),
      interval_(cfg.sample_interval_seconds),
      cap_(cfg.iteration_cap),
      every_(cfg.sample_every_iterations),
      n_iter_(cfg.n_iter) {
  trace_.best_expression.notation = cfg.notation;
}

double RunRecorder::elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

bool RunRecorder::exhausted() const {
  if (time_free_) return trace_.iterations >= cap_;
  return elapsed() >= budget_;
}

void RunRecorder::emit_due_samples(double now) {
  for (;;) {
    const double t = static_cast<double>(next_sample_) * interval_;
    if (t > now || t > budget_ + 1e-9) break;
    trace_.samples.push_back({t, trace_.iterations, trace_.best_mse});
    ++next_sample_;
  }
}

bool RunRecorder::record(const ExpressionSeq& seq, const FitResult& fit) {
  if (!time_free_) emit_due_samples(elapsed());
  ++trace_.iterations;
  const bool improved = fit.score > trace_.best_score || trace_.best_expression.empty();
  if (improved) {
    trace_.best_score = fit.score;
    trace_.best_mse = fit.mse;
    trace_.best_expression = seq;
    trace_.best_constants = fit.constants;
  }
  if (hook_) hook_(seq, fit);
  if (time_free_ && trace_.iterations % every_ == 0)
    trace_.samples.push_back({0.0, trace_.iterations, trace_.best_mse});
  return improved && fit.score > 0.0;
}

RunTrace RunRecorder::finish() {
  if (time_free_) {
    if (trace_.samples.empty() || trace_.samples.back().iterations != trace_.iterations)
      trace_.samples.push_back({0.0, trace_.iterations, trace_.best_mse});
  } else {
    emit_due_samples(budget_);
  }
  return std::move(trace_);
}

RunTrace run_search(const SearchConfig& cfg, const TokenTable& table, const Dataset& data, EvaluationHook hook) {
  switch (cfg.algorithm) {
    case Algorithm::Random: return random_search(cfg, table, data, std::move(hook));
    case Algorithm::Mcts: return mcts_search(cfg, table, data, std::move(hook));
    case Algorithm::Pso: return pso_search(cfg, table, data, std::move(hook));
    case Algorithm::Gp: return gp_search(cfg, table, data, std::move(hook));
    case Algorithm::Sa: return sa_search(cfg, table, data, std::move(hook));
  }
  throw std::invalid_argument("unknown algorithm");
}

RunTrace random_search(const SearchConfig& cfg, const TokenTable& table, const Dataset& data, EvaluationHook hook) {
  cfg.validate();
  table.require_supports_depth(cfg.depth);
  Rng rng(cfg.seed);
  ConstCache cache;
  Evaluator evaluator;
  RunRecorder recorder(cfg, std::move(hook));
  while (!recorder.exhausted()) {
    auto seq = random_rollout(cfg.notation, cfg.depth, table, rng);
    recorder.record(seq, fit_constants(seq, data, &cache, cfg.fit, evaluator));
  }
  return recorder.finish();
}

// --------------------------------------------------------------------------

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_double_text(std::string_view s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw std::invalid_argument("bad number '" + std::string(s) + "'");
  return v;
}

void write_trace_csv(std::ostream& out, const TraceMeta& meta, const RunTrace& trace) {
  out << "kind,run_id,algorithm,notation,depth,elapsed_seconds,iterations,best_mse,expression,constants\n";
  const std::string prefix =
      meta.run_id + ',' + std::string(to_string(meta.algorithm)) + ',' + std::string(to_string(meta.notation)) + ',' +
      std::to_string(meta.depth) + ',';
  for (const auto& s : trace.samples)
    out << "sample," << prefix << format_double(s.elapsed_seconds) << ',' << s.iterations << ','
        << format_double(s.best_mse) << ",,\n";
  std::string constants;
  for (std::size_t i = 0; i < trace.best_constants.size(); ++i) {
    if (i) constants += ';';
    constants += format_double(trace.best_constants[i]);
  }
  const double last_time = trace.samples.empty() ? 0.0 : trace.samples.back().elapsed_seconds;
  out << "final," << prefix << format_double(last_time) << ',' << trace.iterations << ','
      << format_double(trace.best_mse) << ',' << format_tokens(trace.best_expression.tokens) << ',' << constants
      << '\n';
}

TraceFile read_trace_csv(std::istream& in) {
  TraceFile file;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty trace file");
  bool saw_final = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    while (cells.size() < 10) cells.emplace_back();
    file.meta.run_id = cells[1];
    file.meta.algorithm = parse_algorithm(cells[2]);
    file.meta.notation = parse_notation(cells[3]);
    file.meta.depth = std::stoi(cells[4]);
    if (cells[0] == "sample") {
      file.samples.push_back({parse_double_text(cells[5]), static_cast<std::size_t>(std::stoull(cells[6])),
                              parse_double_text(cells[7])});
    } else if (cells[0] == "final") {
      saw_final = true;
      file.final_iterations = static_cast<std::size_t>(std::stoull(cells[6]));
      file.final_mse = parse_double_text(cells[7]);
      file.expression = cells[8];
      std::istringstream cs(cells[9]);
      while (std::getline(cs, cell, ';'))
        if (!cell.empty()) file.constants.push_back(parse_double_text(cell));
    } else {
      throw std::invalid_argument("unknown trace row kind '" + cells[0] + "'");
    }
  }
  if (!saw_final) throw std::invalid_argument("trace file has no final row");
  return file;
}

}  // namespace fdsr
