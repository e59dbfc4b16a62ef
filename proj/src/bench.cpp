#include "fdsr/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fdsr/expr.hpp"

namespace fdsr {

namespace {

using In = std::span<const double>;

double hemberg_t1(double x, double y) { return 30.0 * x * x / ((10.0 - x) * y * y); }
double hemberg_t6(double x, double y) { return 8.0 / (2.0 + x * x + y * y); }

std::vector<BenchmarkSpec> build_catalog() {
  std::vector<BenchmarkSpec> c;
  auto hemberg = [&](std::string id, std::string formula, int depth, auto fn, std::string canonical,
                     std::vector<double> consts) {
    BenchmarkSpec s;
    s.id = std::move(id);
    s.formula = std::move(formula);
    s.depth = depth;
    s.inputs = 2;
    s.lo = -3.0;
    s.hi = 3.0;
    s.default_samples = 20;
    s.operators = OperatorSet::Hemberg;
    s.ground_truth = fn;
    s.canonical = std::move(canonical);
    s.canonical_constants = std::move(consts);
    c.push_back(std::move(s));
  };
  auto feynman = [&](std::string id, std::string formula, int depth, std::size_t inputs, auto fn,
                     std::string canonical, std::vector<double> consts) {
    BenchmarkSpec s;
    s.id = std::move(id);
    s.formula = std::move(formula);
    s.depth = depth;
    s.inputs = inputs;
    s.lo = 1.0;
    s.hi = 5.0;
    s.default_samples = 100'000;
    s.operators = OperatorSet::Feynman;
    s.ground_truth = fn;
    s.canonical = std::move(canonical);
    s.canonical_constants = std::move(consts);
    c.push_back(std::move(s));
  };

  hemberg("hemberg-1", "8/(2 + x^2 + y^2)", 4, [](In v) { return hemberg_t6(v[0], v[1]); },
          "/ const + + const ^ x1 const ^ x2 const", {8, 2, 2, 2});
  hemberg(
      "hemberg-2", "x^3 (x - 1) + y (y/2 - 1)", 4,
      [](In v) {
        const double x = v[0], y = v[1];
        return x * x * x * (x - 1.0) + y * (y / 2.0 - 1.0);
      },
      "+ * ^ x1 const - x1 const * x2 - / x2 const const", {3, 1, 2, 1});
  hemberg(
      "hemberg-3", "x^3/5 + y^3/2 - y - x", 5,
      [](In v) {
        const double x = v[0], y = v[1];
        return x * x * x / 5.0 + y * y * y / 2.0 - y - x;
      },
      "- - + / ^ x1 const const / ^ x2 const const x2 x1", {3, 5, 3, 2});
  // Sums are chained left-associatively: ((((t1 + t2) - t3) + ...) ...).
  hemberg(
      "hemberg-4", "30x^2/((10 - x) y^2) + x^4 - x^3 + y^2/2 - y + 8/(2 + x^2 + y^2) + x", 9,
      [](In v) {
        const double x = v[0], y = v[1];
        return hemberg_t1(x, y) + std::pow(x, 4) - x * x * x + y * y / 2.0 - y + hemberg_t6(x, y) + x;
      },
      "+ + - + - + / * const ^ x1 const * - const x1 ^ x2 const ^ x1 const ^ x1 const "
      "/ ^ x2 const const x2 / const + + const ^ x1 const ^ x2 const x1",
      {30, 2, 10, 2, 4, 3, 2, 2, 8, 2, 2, 2});
  hemberg(
      "hemberg-5", "30x^2/((10 - x) y^2) + x^4 - 4x^3/5 + y^2/2 - 2y + 8/(2 + x^2 + y^2) + y^3/2 - x", 10,
      [](In v) {
        const double x = v[0], y = v[1];
        return hemberg_t1(x, y) + std::pow(x, 4) - 0.8 * x * x * x + y * y / 2.0 - 2.0 * y + hemberg_t6(x, y) +
               y * y * y / 2.0 - x;
      },
      "- + + - + - + / * const ^ x1 const * - const x1 ^ x2 const ^ x1 const * const ^ x1 const "
      "/ ^ x2 const const * const x2 / const + + const ^ x1 const ^ x2 const / ^ x2 const const x1",
      {30, 2, 10, 2, 4, 0.8, 3, 2, 2, 2, 8, 2, 2, 2, 3, 2});

  feynman(
      "feynman-1", "q E / (m (w0^2 - w^2))", 4, 5,
      [](In v) { return v[0] * v[1] / (v[2] * (v[3] * v[3] - v[4] * v[4])); },
      "/ * x1 x2 * x3 - ^ x4 const ^ x5 const", {2, 2});
  feynman(
      "feynman-2", "G m1 m2 / ((x2 - x1)^2 + (y2 - y1)^2 + (z2 - z1)^2)", 5, 9,
      [](In v) {
        const double dx = v[4] - v[3], dy = v[6] - v[5], dz = v[8] - v[7];
        return v[0] * v[1] * v[2] / (dx * dx + dy * dy + dz * dz);
      },
      "/ * * x1 x2 x3 + + ^ - x5 x4 const ^ - x7 x6 const ^ - x9 x8 const", {2, 2, 2});
  feynman(
      "feynman-3", "(Z1 Z2 alpha hbar c / (4 E sin^2(theta/2)))^2", 6, 7,
      [](In v) {
        const double s = std::sin(v[6] / 2.0);
        const double a = v[0] * v[1] * v[2] * v[3] * v[4] / (4.0 * v[5] * s * s);
        return a * a;
      },
      "^ / * * * * x1 x2 x3 x4 x5 * * const x6 ^ sin / x7 const const const", {4, 2, 2, 2});
  feynman(
      "feynman-4", "mu H / (kb T) + mu alpha / (eps c^2 kb T) M", 7, 8,
      [](In v) {
        const double mu = v[0], h = v[1], kb = v[2], t = v[3], alpha = v[4], eps = v[5], c = v[6], m = v[7];
        return mu * h / (kb * t) + mu * alpha / (eps * c * c * kb * t) * m;
      },
      "+ / * x1 x2 * x3 x4 * / * x1 x5 * * * x6 ^ x7 const x3 x4 x8", {2});
  feynman(
      "feynman-5", "m kG / L^2 (1 + sqrt(1 + 2 E L^2 / (m kG^2)) cos(theta1 - theta2))", 8, 6,
      [](In v) {
        const double m = v[0], kg = v[1], l = v[2], e = v[3], t1 = v[4], t2 = v[5];
        return m * kg / (l * l) * (1.0 + std::sqrt(1.0 + 2.0 * e * l * l / (m * kg * kg)) * std::cos(t1 - t2));
      },
      "* / * x1 x2 ^ x3 const + const * sqrt + const / * * const x4 ^ x3 const * x1 ^ x2 const cos - x5 x6",
      {2, 1, 1, 2, 2, 2});
  return c;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  try {
    if constexpr (std::is_same_v<T, double>) {
      const double v = std::stod(value, &used);
      if (used == value.size()) return v;
    } else {
      if (!value.empty() && value[0] != '-') {
        const auto v = std::stoull(value, &used);
        if (used == value.size()) return static_cast<T>(v);
      }
    }
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("bad value for " + key + ": '" + value + "'");
}

}  // namespace

TokenTable BenchmarkSpec::table() const {
  const std::vector<BinaryOp> binary{BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div, BinaryOp::Pow};
  if (operators == OperatorSet::Hemberg) return TokenTable({}, binary, inputs, true);
  return TokenTable({UnaryOp::Sin, UnaryOp::Sqrt, UnaryOp::Cos}, binary, inputs, true);
}

ExpressionSeq BenchmarkSpec::canonical_expression() const { return parse_expression(canonical, Notation::Prefix); }

const std::vector<BenchmarkSpec>& catalog() {
  static const std::vector<BenchmarkSpec> c = build_catalog();
  return c;
}

const BenchmarkSpec& find_benchmark(const std::string& id) {
  for (const auto& s : catalog())
    if (s.id == id) return s;
  throw std::invalid_argument("unknown benchmark: " + id);
}

Dataset sample_dataset(const BenchmarkSpec& spec, Rng& rng, std::optional<std::size_t> count) {
  const std::size_t n = count.value_or(spec.default_samples);
  if (n == 0) throw std::invalid_argument("sample count must be at least 1");
  constexpr int kMaxRetries = 1000;
  Dataset d;
  d.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.inputs));
  d.y.resize(static_cast<Eigen::Index>(n));
  std::vector<double> row(spec.inputs);
  for (std::size_t i = 0; i < n; ++i) {
    double y = 0.0;
    int tries = 0;
    do {
      if (tries++ == kMaxRetries)
        throw std::runtime_error(spec.id + ": ground truth not finite after repeated resampling");
      for (auto& v : row) v = uniform_real(rng, spec.lo, spec.hi);
      y = spec.ground_truth(row);
    } while (!std::isfinite(y));
    for (std::size_t j = 0; j < spec.inputs; ++j) d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    d.y(static_cast<Eigen::Index>(i)) = y;
  }
  for (std::size_t j = 0; j < spec.inputs; ++j) d.feature_names.push_back("x" + std::to_string(j + 1));
  return d;
}

FeatureRow feature_row(const BenchmarkSpec& spec) {
  const auto stats = tree_stats(spec.canonical_expression());
  return {stats.depth, spec.inputs, stats.avg_nodes_per_layer};
}

void SuiteConfig::validate() const {
  if (suite_id.empty() || suite_id.find_first_of("/\\") != std::string::npos)
    throw std::invalid_argument("suite_id must be a plain, non-empty name");
  if (benchmarks.empty()) throw std::invalid_argument("no benchmarks configured");
  if (algorithms.empty()) throw std::invalid_argument("no algorithms configured");
  if (notations.empty()) throw std::invalid_argument("no notations configured");
  for (const auto& b : benchmarks) find_benchmark(b);
  if (runs == 0) throw std::invalid_argument("runs must be at least 1");
  if (!(budget_seconds > 0.0)) throw std::invalid_argument("budget_seconds must be positive");
  if (!(sample_interval_seconds > 0.0)) throw std::invalid_argument("sample_interval_seconds must be positive");
  if (samples && *samples == 0) throw std::invalid_argument("samples must be at least 1");
  if (parallelism == 0) throw std::invalid_argument("parallelism must be at least 1");
  if (n_iter == 0) throw std::invalid_argument("n_iter must be at least 1");
  if (gp_population == 0) throw std::invalid_argument("population must be at least 1");
  if (sample_every_iterations == 0) throw std::invalid_argument("sample_every_iterations must be at least 1");
}

SuiteConfig parse_suite_config(std::istream& in) {
  SuiteConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    std::replace(key.begin(), key.end(), '-', '_');

    if (key == "suite_id") {
      cfg.suite_id = value;
    } else if (key == "benchmarks") {
      cfg.benchmarks = split_list(value);
    } else if (key == "algorithms") {
      cfg.algorithms.clear();
      for (const auto& a : split_list(value)) cfg.algorithms.push_back(parse_algorithm(a));
    } else if (key == "notations") {
      cfg.notations.clear();
      for (const auto& n : split_list(value)) cfg.notations.push_back(parse_notation(n));
    } else if (key == "runs") {
      cfg.runs = parse_number<std::size_t>(key, value);
    } else if (key == "budget_seconds") {
      cfg.budget_seconds = parse_number<double>(key, value);
    } else if (key == "sample_interval_seconds") {
      cfg.sample_interval_seconds = parse_number<double>(key, value);
    } else if (key == "seed") {
      cfg.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "samples") {
      cfg.samples = parse_number<std::size_t>(key, value);
    } else if (key == "parallelism") {
      cfg.parallelism = parse_number<std::size_t>(key, value);
    } else if (key == "n_iter") {
      cfg.n_iter = parse_number<std::size_t>(key, value);
    } else if (key == "population") {
      cfg.gp_population = parse_number<std::size_t>(key, value);
    } else if (key == "iteration_cap") {
      cfg.iteration_cap = parse_number<std::size_t>(key, value);
    } else if (key == "sample_every_iterations") {
      cfg.sample_every_iterations = parse_number<std::size_t>(key, value);
    } else {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

SuiteConfig read_suite_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  return parse_suite_config(in);
}

std::size_t SuiteResult::failures() const {
  return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const RunRecord& r) { return !r.trace; }));
}

std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) return {std::nan(""), std::nan("")};
  const double inf = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) return {inf, inf};
    sum += v;
  }
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

std::vector<ConfigAggregate> aggregate_runs(const std::vector<RunRecord>& runs) {
  std::vector<ConfigAggregate> out;
  std::vector<std::vector<const RunTrace*>> members;
  for (const auto& r : runs) {
    if (!r.trace) continue;
    auto it = std::find_if(out.begin(), out.end(), [&](const ConfigAggregate& a) {
      return a.benchmark == r.benchmark && a.algorithm == r.algorithm && a.notation == r.notation;
    });
    if (it == out.end()) {
      ConfigAggregate a;
      a.benchmark = r.benchmark;
      a.algorithm = r.algorithm;
      a.notation = r.notation;
      a.features = feature_row(find_benchmark(r.benchmark));
      out.push_back(std::move(a));
      members.emplace_back();
      it = out.end() - 1;
    }
    members[static_cast<std::size_t>(it - out.begin())].push_back(&*r.trace);
  }

  for (std::size_t k = 0; k < out.size(); ++k) {
    auto& agg = out[k];
    const auto& traces = members[k];
    agg.runs = traces.size();
    std::vector<double> values;
    for (const auto* t : traces) values.push_back(t->best_mse);
    std::tie(agg.mean_final_mse, agg.std_final_mse) = mean_std(values);

    std::size_t len = traces.front()->samples.size();
    for (const auto* t : traces) len = std::min(len, t->samples.size());
    for (std::size_t i = 0; i < len; ++i) {
      values.clear();
      for (const auto* t : traces) values.push_back(t->samples[i].best_mse);
      CurvePoint p;
      p.sample = i;
      p.elapsed_seconds = traces.front()->samples[i].elapsed_seconds;
      std::tie(p.mean_mse, p.std_mse) = mean_std(values);
      agg.curve.push_back(p);
    }
  }
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<ConfigAggregate>& aggregates) {
  out << "benchmark,algorithm,notation,depth,input_count,avg_nodes_per_layer,mean_final_mse,std_final_mse,runs\n";
  for (const auto& a : aggregates) {
    out << a.benchmark << ',' << to_string(a.algorithm) << ',' << to_string(a.notation) << ',' << a.features.depth
        << ',' << a.features.input_count << ',' << format_double(a.features.avg_nodes_per_layer) << ','
        << format_double(a.mean_final_mse) << ',' << format_double(a.std_final_mse) << ',' << a.runs << '\n';
  }
}

void write_curves_csv(std::ostream& out, const std::vector<ConfigAggregate>& aggregates) {
  out << "benchmark,algorithm,notation,sample,elapsed_seconds,mean_best_mse,std_best_mse\n";
  for (const auto& a : aggregates) {
    for (const auto& p : a.curve) {
      out << a.benchmark << ',' << to_string(a.algorithm) << ',' << to_string(a.notation) << ',' << p.sample << ','
          << format_double(p.elapsed_seconds) << ',' << format_double(p.mean_mse) << ','
          << format_double(p.std_mse) << '\n';
    }
  }
}

SuiteResult run_suite(const SuiteConfig& config, const std::string& out_dir, std::ostream* log) {
  config.validate();
  namespace fs = std::filesystem;
  fs::path dir;
  if (!out_dir.empty()) {
    dir = fs::path(out_dir) / config.suite_id;
    fs::create_directories(dir);
  }

  std::map<std::string, Dataset> datasets;
  for (const auto& id : config.benchmarks) {
    if (datasets.count(id)) continue;
    const auto& spec = find_benchmark(id);
    const auto index = static_cast<std::uint64_t>(&spec - catalog().data());
    Rng rng(derive_seed(derive_seed(config.seed, 0), index));
    datasets.emplace(id, sample_dataset(spec, rng, config.samples));
  }

  SuiteResult result;
  for (const auto& b : config.benchmarks)
    for (auto a : config.algorithms)
      for (auto n : config.notations)
        for (std::size_t k = 0; k < config.runs; ++k) {
          RunRecord r;
          r.benchmark = b;
          r.algorithm = a;
          r.notation = n;
          r.run = k;
          r.seed = derive_seed(derive_seed(config.seed, 1), result.runs.size());
          if (!dir.empty())
            r.path = (dir / (b + "_" + std::string(to_string(a)) + "_" + std::string(to_string(n)) + "_run" +
                             std::to_string(k) + ".csv"))
                         .string();
          result.runs.push_back(std::move(r));
        }

  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < result.runs.size(); i = next++) {
      auto& r = result.runs[i];
      try {
        const auto& spec = find_benchmark(r.benchmark);
        SearchConfig cfg;
        cfg.algorithm = r.algorithm;
        cfg.notation = r.notation;
        cfg.depth = spec.depth;
        cfg.n_iter = config.n_iter;
        cfg.time_budget_seconds = config.budget_seconds;
        cfg.sample_interval_seconds = config.sample_interval_seconds;
        cfg.iteration_cap = config.iteration_cap;
        cfg.sample_every_iterations = config.sample_every_iterations;
        cfg.gp_population = config.gp_population;
        cfg.seed = r.seed;
        auto trace = run_search(cfg, spec.table(), datasets.at(r.benchmark));
        if (!r.path.empty()) {
          std::ofstream f(r.path);
          const TraceMeta meta{r.benchmark + "/" + std::string(to_string(r.algorithm)) + "/" +
                                   std::string(to_string(r.notation)) + "/" + std::to_string(r.run),
                               r.algorithm, r.notation, spec.depth};
          write_trace_csv(f, meta, trace);
          if (!f) throw std::runtime_error("failed to write " + r.path);
        }
        r.trace = std::move(trace);
      } catch (const std::exception& e) {
        r.error = e.what();
        if (log) {
          std::lock_guard lock(log_mutex);
          *log << "warning: run " << r.benchmark << ' ' << to_string(r.algorithm) << ' ' << to_string(r.notation)
               << " #" << r.run << " failed: " << e.what() << '\n';
        }
      }
    }
  };
  const std::size_t workers = std::min(config.parallelism, result.runs.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  result.aggregates = aggregate_runs(result.runs);
  if (!dir.empty()) {
    std::ofstream summary(dir / "summary.csv");
    write_summary_csv(summary, result.aggregates);
    std::ofstream curves(dir / "curves.csv");
    write_curves_csv(curves, result.aggregates);
    if (!summary || !curves) throw std::runtime_error("failed to write suite outputs in " + dir.string());
  }
  return result;
}

}  // namespace fdsr
