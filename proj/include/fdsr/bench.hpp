#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fdsr/eval.hpp"
#include "fdsr/random.hpp"
#include "fdsr/search.hpp"
#include "fdsr/token.hpp"

namespace fdsr {

enum class OperatorSet { Hemberg, Feynman };

/// One ground-truth benchmark. `canonical` is the prefix encoding of the
/// formula's tree (constants spelled `const`, bound in order by
/// `canonical_constants`); its depth equals `depth`.
struct BenchmarkSpec {
  std::string id;
  std::string formula;
  int depth = 0;
  std::size_t inputs = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t default_samples = 0;
  OperatorSet operators = OperatorSet::Hemberg;
  std::function<double(std::span<const double>)> ground_truth;
  std::string canonical;
  std::vector<double> canonical_constants;

  TokenTable table() const;
  ExpressionSeq canonical_expression() const;
};

const std::vector<BenchmarkSpec>& catalog();
/// Throws std::invalid_argument for an unknown id.
const BenchmarkSpec& find_benchmark(const std::string& id);

/// Uniform independent inputs on [lo, hi]^D, labelled by the ground truth.
/// Points where the ground truth is not finite are redrawn (bounded).
Dataset sample_dataset(const BenchmarkSpec& spec, Rng& rng, std::optional<std::size_t> count = std::nullopt);

struct FeatureRow {
  int depth = 0;
  std::size_t input_count = 0;
  double avg_nodes_per_layer = 0.0;
};

FeatureRow feature_row(const BenchmarkSpec& spec);

struct SuiteConfig {
  std::string suite_id = "suite";
  std::vector<std::string> benchmarks;
  std::vector<Algorithm> algorithms;
  std::vector<Notation> notations;
  std::size_t runs = 1;
  double budget_seconds = 120.0;
  double sample_interval_seconds = 6.0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> samples;  // dataset size override
  std::size_t parallelism = 1;
  std::size_t n_iter = 50'000;
  std::size_t gp_population = 2000;
  std::size_t iteration_cap = 0;
  std::size_t sample_every_iterations = 100;

  void validate() const;
};

/// `key = value` lines; lists are comma separated; `#` starts a comment.
SuiteConfig parse_suite_config(std::istream& in);
SuiteConfig read_suite_config(const std::string& path);

struct RunRecord {
  std::string benchmark;
  Algorithm algorithm = Algorithm::Random;
  Notation notation = Notation::Prefix;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  std::optional<RunTrace> trace;  // empty when the run failed
  std::string error;
  std::string path;
};

struct CurvePoint {
  double elapsed_seconds = 0.0;
  std::size_t sample = 0;
  double mean_mse = 0.0;
  double std_mse = 0.0;
};

struct ConfigAggregate {
  std::string benchmark;
  Algorithm algorithm = Algorithm::Random;
  Notation notation = Notation::Prefix;
  FeatureRow features;
  double mean_final_mse = 0.0;
  double std_final_mse = 0.0;
  std::size_t runs = 0;
  std::vector<CurvePoint> curve;
};

struct SuiteResult {
  std::vector<RunRecord> runs;
  std::vector<ConfigAggregate> aggregates;
  std::size_t failures() const;
};

/// Mean and sample standard deviation (0 for a single value); any
/// non-finite value makes both +inf.
std::pair<double, double> mean_std(std::span<const double> values);

/// Groups successful runs by (benchmark, algorithm, notation), in first-seen order.
std::vector<ConfigAggregate> aggregate_runs(const std::vector<RunRecord>& runs);

/// Runs every benchmark x algorithm x notation x run combination. When
/// `out_dir` is non-empty, writes `<out_dir>/<suite_id>/<bench>_<algo>_<notation>_run<k>.csv`,
/// `summary.csv` and `curves.csv` there. Failed runs are reported on `log`.
SuiteResult run_suite(const SuiteConfig& config, const std::string& out_dir, std::ostream* log = nullptr);

void write_summary_csv(std::ostream& out, const std::vector<ConfigAggregate>& aggregates);
void write_curves_csv(std::ostream& out, const std::vector<ConfigAggregate>& aggregates);

}  // namespace fdsr
