#include "fdsr/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fdsr/bench.hpp"
#include "fdsr/eval.hpp"
#include "fdsr/expr.hpp"
#include "fdsr/grammar.hpp"
#include "fdsr/search.hpp"

namespace fdsr {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs `f`, turning any failure into a usage error.
template <class F>
auto as_usage(F&& f) {
  try {
    return f();
  } catch (const UsageError&) {
    throw;
  } catch (const ExpressionError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

std::string results_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kResultsDirEnv); env && *env) return env;
  return "results";
}

std::string join(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) {
    if (!s.empty()) s += ' ';
    s += w;
  }
  return s;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, item.find_last_not_of(' ') - b + 1));
  }
  return out;
}

struct TableFlags {
  std::string unary = "none";
  std::string binary = "+,-,*,/,^";
  std::size_t variables = 1;
  bool no_const = false;

  void add_to(CLI::App* app) {
    app->add_option("--unary", unary, "Unary operators, comma separated, or 'none'")->capture_default_str();
    app->add_option("--binary", binary, "Binary operators, comma separated, or 'none'")->capture_default_str();
    app->add_option("--variables", variables, "Number of input variables")->capture_default_str();
    app->add_flag("--no-const", no_const, "Leave out the constant token");
  }

  TokenTable build(std::size_t num_variables) const {
    std::vector<UnaryOp> u;
    std::vector<BinaryOp> b;
    if (unary != "none")
      for (const auto& s : split_commas(unary)) {
        auto op = parse_unary(s);
        if (!op) throw UsageError("unknown unary operator '" + s + "'");
        u.push_back(*op);
      }
    if (binary != "none")
      for (const auto& s : split_commas(binary)) {
        auto op = parse_binary(s);
        if (!op) throw UsageError("unknown binary operator '" + s + "'");
        b.push_back(*op);
      }
    return as_usage([&] { return TokenTable(u, b, num_variables, !no_const); });
  }
};

Notation notation_flag(const std::string& s) {
  return as_usage([&] { return parse_notation(s); });
}

ExpressionSeq expression_flag(const std::vector<std::string>& words, Notation notation) {
  return parse_expression(join(words), notation);
}

std::string format_constants(std::span<const double> c) {
  std::string s;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) s += ", ";
    s += format_double(c[i]);
  }
  return s;
}

// ---------------------------------------------------------------------------

struct SearchFlags {
  std::string algorithm;
  std::string notation = "prefix";
  int depth = -1;
  std::string data;
  std::string benchmark;
  double budget = 120.0;
  double interval = 6.0;
  std::size_t n_iter = 50'000;
  std::size_t iterations = 0;
  std::size_t sample_every = 100;
  std::size_t population = 2000;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string unary;
  std::string binary;
  bool no_const = false;
};

int cmd_search(const SearchFlags& f, std::ostream& out) {
  SearchConfig cfg;
  std::optional<Dataset> data;
  const BenchmarkSpec* spec = nullptr;
  TokenTable table;
  as_usage([&] {
    cfg.algorithm = parse_algorithm(f.algorithm);
    cfg.notation = parse_notation(f.notation);
    cfg.depth = f.depth;
    cfg.n_iter = f.n_iter;
    cfg.time_budget_seconds = f.budget;
    cfg.sample_interval_seconds = f.interval;
    cfg.iteration_cap = f.iterations;
    cfg.sample_every_iterations = f.sample_every;
    cfg.gp_population = f.population;
    cfg.seed = f.seed;
    cfg.validate();
    if (!f.benchmark.empty()) spec = &find_benchmark(f.benchmark);
    return 0;
  });

  if (spec) {
    Rng rng(derive_seed(f.seed, 0));
    data = sample_dataset(*spec, rng, f.samples ? std::optional(f.samples) : std::nullopt);
  } else {
    data = read_dataset_csv(f.data);
  }

  TableFlags tf;
  tf.no_const = f.no_const;
  if (spec && f.unary.empty() && f.binary.empty() && !f.no_const) {
    table = spec->table();
  } else {
    if (spec && spec->operators == OperatorSet::Feynman) tf.unary = "sin,sqrt,cos";
    if (!f.unary.empty()) tf.unary = f.unary;
    if (!f.binary.empty()) tf.binary = f.binary;
    table = tf.build(data->dims());
  }
  as_usage([&] {
    table.require_supports_depth(cfg.depth);
    return 0;
  });

  auto trace = run_search(cfg, table, *data);

  std::string path = f.out;
  if (path.empty()) {
    const std::string source = spec ? spec->id : fs::path(f.data).stem().string();
    path = (fs::path(results_dir("")) / ("search_" + source + "_" + std::string(to_string(cfg.algorithm)) + "_" +
                                          std::string(to_string(cfg.notation)) + "_d" + std::to_string(cfg.depth) +
                                          "_s" + std::to_string(cfg.seed) + ".csv"))
               .string();
  }
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  {
    std::ofstream file(path);
    const TraceMeta meta{spec ? spec->id : fs::path(f.data).stem().string(), cfg.algorithm, cfg.notation, cfg.depth};
    write_trace_csv(file, meta, trace);
    if (!file) throw std::runtime_error("cannot write trace to " + path);
  }

  out << "algorithm:   " << to_string(cfg.algorithm) << '\n';
  out << "notation:    " << to_string(cfg.notation) << '\n';
  out << "depth:       " << cfg.depth << '\n';
  out << "evaluated:   " << trace.iterations << '\n';
  if (trace.best_expression.empty()) {
    out << "best:        none\n";
  } else {
    out << "best:        " << to_infix(trace.best_expression, trace.best_constants) << '\n';
    out << "tokens:      " << format_tokens(trace.best_expression.tokens) << '\n';
    out << "constants:   " << format_constants(trace.best_constants) << '\n';
  }
  out << "mse:         " << format_double(trace.best_mse) << '\n';
  out << "trace:       " << path << '\n';
  return 0;
}

struct BenchFlags {
  std::string config;
  std::string out_dir;
  std::size_t parallelism = 0;
};

int cmd_bench(const BenchFlags& f, std::ostream& out, std::ostream& err) {
  auto cfg = as_usage([&] {
    auto c = read_suite_config(f.config);
    if (f.parallelism) c.parallelism = f.parallelism;
    c.validate();
    return c;
  });
  const std::string dir = results_dir(f.out_dir);
  const auto result = run_suite(cfg, dir, &err);
  for (const auto& a : result.aggregates) {
    out << a.benchmark << ' ' << to_string(a.algorithm) << ' ' << to_string(a.notation) << ": mse "
        << format_double(a.mean_final_mse) << " +/- " << format_double(a.std_final_mse) << " over " << a.runs
        << " runs\n";
  }
  out << "results: " << (fs::path(dir) / cfg.suite_id).string() << '\n';
  if (const auto failed = result.failures()) {
    err << "error: " << failed << " of " << result.runs.size() << " runs failed\n";
    return 1;
  }
  return 0;
}

struct GenFlags {
  int depth = -1;
  std::string notation = "prefix";
  std::size_t count = 10;
  std::uint64_t seed = 0;
  std::string out;
  TableFlags table;
};

int cmd_gen(const GenFlags& f, std::ostream& out) {
  const auto notation = notation_flag(f.notation);
  const auto table = f.table.build(f.table.variables);
  as_usage([&] {
    if (f.depth < 0) throw UsageError("--depth must be >= 0");
    table.require_supports_depth(f.depth);
    return 0;
  });
  Rng rng(f.seed);
  std::vector<ExpressionSeq> exprs;
  for (std::size_t i = 0; i < f.count; ++i) exprs.push_back(random_rollout(notation, f.depth, table, rng));
  if (!f.out.empty()) {
    std::ofstream file(f.out);
    write_expressions(file, notation, exprs);
    if (!file) throw std::runtime_error("cannot write " + f.out);
    out << "wrote " << exprs.size() << " expressions to " << f.out << '\n';
  } else {
    for (const auto& e : exprs) out << format_tokens(e.tokens) << '\n';
  }
  return 0;
}

struct EnumerateFlags {
  int depth = -1;
  std::string notation = "prefix";
  std::size_t limit = 1'000'000;
  bool count_only = false;
  std::string out;
  TableFlags table;
};

int cmd_enumerate(const EnumerateFlags& f, std::ostream& out) {
  const auto notation = notation_flag(f.notation);
  const auto table = f.table.build(f.table.variables);
  as_usage([&] {
    if (f.depth < 0) throw UsageError("--depth must be >= 0");
    table.require_supports_depth(f.depth);
    return 0;
  });
  std::ofstream file;
  if (!f.out.empty()) {
    file.open(f.out);
    file << "#notation: " << to_string(notation) << '\n';
  }
  const auto n = enumerate_all(
      notation, f.depth, table,
      [&](const ExpressionSeq& e) {
        if (file.is_open())
          file << format_tokens(e.tokens) << '\n';
        else if (!f.count_only)
          out << format_tokens(e.tokens) << '\n';
      },
      f.limit);
  if (file.is_open() && !file) throw std::runtime_error("cannot write " + f.out);
  if (f.count_only || file.is_open()) out << n << '\n';
  return 0;
}

struct ExprFlags {
  std::vector<std::string> words;
  std::string notation = "prefix";
};

int cmd_depth(const ExprFlags& f, std::ostream& out) {
  const auto info = depth_info(expression_flag(f.words, notation_flag(f.notation)));
  out << info.depth << (info.complete ? " complete" : " incomplete") << '\n';
  return 0;
}

int cmd_convert(const ExprFlags& f, std::ostream& out) {
  const auto seq = expression_flag(f.words, notation_flag(f.notation));
  out << format_tokens(convert_notation(seq).tokens) << '\n';
  return 0;
}

struct EvalFlags {
  ExprFlags expr;
  std::string data;
  std::string constants;
  bool fit = false;
};

int cmd_eval(const EvalFlags& f, std::ostream& out) {
  const auto seq = expression_flag(f.expr.words, notation_flag(f.expr.notation));
  require_complete(seq);
  std::vector<double> consts;
  for (const auto& s : split_commas(f.constants))
    consts.push_back(as_usage([&] { return parse_double_text(s); }));
  const auto data = read_dataset_csv(f.data);
  const std::size_t needed = count_constants(seq.tokens);
  if (f.fit) {
    if (!consts.empty() && consts.size() != needed)
      throw UsageError("expression has " + std::to_string(needed) + " constants but " +
                       std::to_string(consts.size()) + " were given");
    ConstCache cache;
    if (!consts.empty()) {
      const auto pred = evaluate(seq, data.x, consts);
      cache.update(seq, consts, score(mse(pred, data.y.array())));
    }
    const auto r = fit_constants(seq, data, &cache);
    consts = r.constants;
  } else if (consts.size() != needed) {
    throw UsageError("expression has " + std::to_string(needed) + " constants but " + std::to_string(consts.size()) +
                     " were given");
  }
  for (const auto& t : seq.tokens)
    if (t.kind == TokenKind::Variable && t.code >= data.dims())
      throw UsageError("expression uses " + token_text(t) + " but the data has " + std::to_string(data.dims()) +
                       " features");
  const double m = mse(evaluate(seq, data.x, consts), data.y.array());
  out << "expression: " << to_infix(seq, consts) << '\n';
  if (!consts.empty()) out << "constants:  " << format_constants(consts) << '\n';
  out << "mse:        " << format_double(m) << '\n';
  out << "score:      " << format_double(score(m)) << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fixed-depth symbolic regression with prefix and postfix grammars", "fdsr"};
  app.require_subcommand(1);

  SearchFlags sf;
  auto* search = app.add_subcommand("search", "Run one search and write its trace CSV");
  search->add_option("--algo", sf.algorithm, "random, mcts, pso, gp or sa")->required();
  search->add_option("--notation", sf.notation, "prefix or postfix")->capture_default_str();
  search->add_option("--depth", sf.depth, "Exact expression depth")->required()->check(CLI::NonNegativeNumber);
  auto* data_opt = search->add_option("--data", sf.data, "Dataset CSV (x1,...,xD,y)")->check(CLI::ExistingFile);
  auto* bench_opt = search->add_option("--benchmark", sf.benchmark, "Benchmark id, e.g. hemberg-1");
  data_opt->excludes(bench_opt);
  search->add_option("--budget", sf.budget, "Time budget in seconds")->capture_default_str();
  search->add_option("--interval", sf.interval, "Best-MSE sample interval in seconds")->capture_default_str();
  search->add_option("--n-iter", sf.n_iter, "Epoch length in evaluated expressions")->capture_default_str();
  search->add_option("--iterations", sf.iterations, "Stop after this many expressions and ignore the clock");
  search->add_option("--sample-every", sf.sample_every, "Sample spacing in expressions with --iterations")
      ->capture_default_str();
  search->add_option("--population", sf.population, "GP population size")->capture_default_str();
  search->add_option("--samples", sf.samples, "Dataset size for --benchmark (default: the benchmark's)");
  search->add_option("--seed", sf.seed, "Random seed")->capture_default_str();
  search->add_option("--out", sf.out, "Trace CSV path");
  search->add_option("--unary", sf.unary, "Unary operators, comma separated, or 'none'");
  search->add_option("--binary", sf.binary, "Binary operators, comma separated, or 'none'");
  search->add_flag("--no-const", sf.no_const, "Leave out the constant token");

  BenchFlags bf;
  auto* bench = app.add_subcommand("bench", "Run a benchmark suite from a config file");
  bench->add_option("--config", bf.config, "Suite config (key = value lines)")->required()->check(CLI::ExistingFile);
  bench->add_option("--out-dir", bf.out_dir, std::string("Results directory (default $") + kResultsDirEnv +
                                                  " or ./results)");
  bench->add_option("--parallelism", bf.parallelism, "Concurrent runs (overrides the config)");

  GenFlags gf;
  auto* gen = app.add_subcommand("gen", "Emit random expressions of an exact depth");
  gen->add_option("--depth", gf.depth, "Exact expression depth")->required();
  gen->add_option("--notation", gf.notation, "prefix or postfix")->capture_default_str();
  gen->add_option("--count", gf.count, "Number of expressions")->capture_default_str();
  gen->add_option("--seed", gf.seed, "Random seed")->capture_default_str();
  gen->add_option("--out", gf.out, "Write an expression file instead of printing");
  gf.table.add_to(gen);

  EnumerateFlags ef;
  auto* enumerate = app.add_subcommand("enumerate", "List every expression of an exact depth");
  enumerate->add_option("--depth", ef.depth, "Exact expression depth")->required();
  enumerate->add_option("--notation", ef.notation, "prefix or postfix")->capture_default_str();
  enumerate->add_option("--limit", ef.limit, "Give up past this many expressions")->capture_default_str();
  enumerate->add_flag("--count-only", ef.count_only, "Print only the number of expressions");
  enumerate->add_option("--out", ef.out, "Write an expression file instead of printing");
  ef.table.add_to(enumerate);

  ExprFlags df;
  auto* depth = app.add_subcommand("depth", "Print the depth of an expression and whether it is complete");
  depth->add_option("expression", df.words, "Space separated tokens")->required();
  depth->add_option("--notation", df.notation, "prefix or postfix")->capture_default_str();

  ExprFlags cf;
  auto* convert = app.add_subcommand("convert", "Rewrite a complete expression in the other notation");
  convert->add_option("expression", cf.words, "Space separated tokens")->required();
  convert->add_option("--notation", cf.notation, "Notation of the input")->capture_default_str();

  EvalFlags vf;
  auto* eval = app.add_subcommand("eval", "Evaluate an expression on a dataset");
  eval->add_option("expression", vf.expr.words, "Space separated tokens")->required();
  eval->add_option("--notation", vf.expr.notation, "prefix or postfix")->capture_default_str();
  eval->add_option("--data", vf.data, "Dataset CSV (x1,...,xD,y)")->required()->check(CLI::ExistingFile);
  eval->add_option("--constants", vf.constants, "Comma separated constant values, left to right");
  eval->add_flag("--fit", vf.fit, "Fit the constants first (given values seed the fit)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (search->parsed() && sf.data.empty() == sf.benchmark.empty())
      throw CLI::ValidationError("search", "exactly one of --data or --benchmark is required");
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    err << "run with --help for usage\n";
    return 2;
  }

  try {
    if (search->parsed()) return cmd_search(sf, out);
    if (bench->parsed()) return cmd_bench(bf, out, err);
    if (gen->parsed()) return cmd_gen(gf, out);
    if (enumerate->parsed()) return cmd_enumerate(ef, out);
    if (depth->parsed()) return cmd_depth(df, out);
    if (convert->parsed()) return cmd_convert(cf, out);
    if (eval->parsed()) return cmd_eval(vf, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ExpressionError& e) {
    err << "error: " << e.what();
    if (e.position() && std::string_view(e.what()).find("position") == std::string_view::npos)
      err << " at position " << *e.position();
    err << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace fdsr
