#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

#include "fdsr/bench.hpp"
#include "fdsr/expr.hpp"
#include "oracle.hpp"

using namespace fdsr;
namespace fs = std::filesystem;

namespace {

// Closed forms written out again, independently of the catalog.
double reference(const std::string& id, const std::vector<double>& v) {
  using std::pow;
  if (id == "hemberg-1") return 8.0 / (2.0 + pow(v[0], 2) + pow(v[1], 2));
  if (id == "hemberg-2") return pow(v[0], 3) * (v[0] - 1.0) + v[1] * (v[1] / 2.0 - 1.0);
  if (id == "hemberg-3") return pow(v[0], 3) / 5.0 + pow(v[1], 3) / 2.0 - v[1] - v[0];
  const double x = v[0], y = v[1];
  if (id == "hemberg-4")
    return 30.0 * pow(x, 2) / ((10.0 - x) * pow(y, 2)) + pow(x, 4) - pow(x, 3) + pow(y, 2) / 2.0 - y +
           8.0 / (2.0 + pow(x, 2) + pow(y, 2)) + x;
  if (id == "hemberg-5")
    return 30.0 * pow(x, 2) / ((10.0 - x) * pow(y, 2)) + pow(x, 4) - 4.0 / 5.0 * pow(x, 3) + pow(y, 2) / 2.0 -
           2.0 * y + 8.0 / (2.0 + pow(x, 2) + pow(y, 2)) + pow(y, 3) / 2.0 - x;
  if (id == "feynman-1") return v[0] * v[1] / (v[2] * (pow(v[3], 2) - pow(v[4], 2)));
  if (id == "feynman-2")
    return v[0] * v[1] * v[2] / (pow(v[4] - v[3], 2) + pow(v[6] - v[5], 2) + pow(v[8] - v[7], 2));
  if (id == "feynman-3")
    return pow(v[0] * v[1] * v[2] * v[3] * v[4] / (4.0 * v[5] * pow(std::sin(v[6] / 2.0), 2)), 2);
  if (id == "feynman-4")
    return v[0] * v[1] / (v[2] * v[3]) + v[0] * v[4] / (v[5] * pow(v[6], 2) * v[2] * v[3]) * v[7];
  if (id == "feynman-5")
    return v[0] * v[1] / pow(v[2], 2) *
           (1.0 + std::sqrt(1.0 + 2.0 * v[3] * pow(v[2], 2) / (v[0] * pow(v[1], 2))) * std::cos(v[4] - v[5]));
  throw std::logic_error("no reference for " + id);
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("fdsr_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("catalog contents") {
  const auto& c = catalog();
  REQUIRE(c.size() == 10);
  const std::map<std::string, std::pair<int, std::size_t>> table{
      {"hemberg-1", {4, 2}}, {"hemberg-2", {4, 2}}, {"hemberg-3", {5, 2}}, {"hemberg-4", {9, 2}},
      {"hemberg-5", {10, 2}}, {"feynman-1", {4, 5}}, {"feynman-2", {5, 9}}, {"feynman-3", {6, 7}},
      {"feynman-4", {7, 8}},  {"feynman-5", {8, 6}}};
  for (const auto& s : c) {
    CAPTURE(s.id);
    REQUIRE(table.count(s.id) == 1);
    CHECK(s.depth == table.at(s.id).first);
    CHECK(s.inputs == table.at(s.id).second);
  }
  const std::vector<double> ones{1.0, 1.0};
  CHECK(find_benchmark("hemberg-1").ground_truth(ones) == 2.0);
  CHECK(find_benchmark("feynman-2").inputs == 9);
  CHECK_THROWS_AS(find_benchmark("hemberg-6"), std::invalid_argument);

  const auto h = find_benchmark("hemberg-3").table();
  CHECK(h.num_unary() == 0);
  CHECK(h.num_binary() == 5);
  CHECK(h.num_leaves() == 3);
  const auto f = find_benchmark("feynman-3").table();
  CHECK(f.num_unary() == 3);
  CHECK(f.num_binary() == 5);
  CHECK(f.num_leaves() == 8);
}

TEST_CASE("canonical encodings have the tabulated depth and reproduce the formulas") {
  Rng rng(12);
  for (const auto& s : catalog()) {
    CAPTURE(s.id);
    const auto seq = s.canonical_expression();
    const auto tree = oracle::build(seq);
    CHECK(oracle::depth(*tree) == s.depth);
    CHECK(depth_info(seq) == DepthInfo{s.depth, true});
    CHECK(count_constants(seq.tokens) == s.canonical_constants.size());
    const auto table = s.table();
    for (Token t : seq.tokens) CHECK(table.contains(t));

    const auto data = sample_dataset(s, rng, 200);
    const auto pred = evaluate(seq, data.x, s.canonical_constants);
    const auto pred_post = evaluate(convert_notation(seq), data.x, s.canonical_constants);
    for (Eigen::Index r = 0; r < data.x.rows(); ++r) {
      std::vector<double> row(s.inputs);
      for (std::size_t j = 0; j < s.inputs; ++j) row[j] = data.x(r, static_cast<Eigen::Index>(j));
      const double ref = reference(s.id, row);
      CHECK(rel_err(data.y(r), ref) < 1e-12);
      CHECK(rel_err(pred(r), ref) < 1e-12);
      CHECK(rel_err(pred_post(r), ref) < 1e-12);
    }
  }
}

TEST_CASE("sampling") {
  Rng rng(3);
  const auto h = sample_dataset(find_benchmark("hemberg-1"), rng);
  CHECK(h.rows() == 20);
  CHECK(h.dims() == 2);
  CHECK(h.x.minCoeff() >= -3.0);
  CHECK(h.x.maxCoeff() <= 3.0);
  CHECK_NOTHROW(h.validate());
  const auto f = sample_dataset(find_benchmark("feynman-1"), rng);
  CHECK(f.rows() == 100000);
  CHECK(f.dims() == 5);
  CHECK(f.x.minCoeff() >= 1.0);
  CHECK(f.x.maxCoeff() <= 5.0);
  CHECK(f.y.allFinite());

  Rng a(44), b(44);
  const auto d1 = sample_dataset(find_benchmark("hemberg-4"), a, 50);
  const auto d2 = sample_dataset(find_benchmark("hemberg-4"), b, 50);
  CHECK(d1.x == d2.x);
  CHECK(d1.y == d2.y);
  CHECK_THROWS_AS(sample_dataset(find_benchmark("hemberg-1"), a, 0), std::invalid_argument);

  BenchmarkSpec broken = find_benchmark("hemberg-1");
  broken.ground_truth = [](std::span<const double>) { return std::nan(""); };
  CHECK_THROWS_AS(sample_dataset(broken, a, 3), std::runtime_error);
}

TEST_CASE("feature rows") {
  // Oracle: count nodes of the explicit tree for 8/(2 + x^2 + y^2).
  const auto& h1 = find_benchmark("hemberg-1");
  std::vector<const oracle::Node*> nodes;
  const auto tree = oracle::build(h1.canonical_expression());
  oracle::collect(*tree, nodes);
  REQUIRE(nodes.size() == 11);
  const auto f = feature_row(h1);
  CHECK(f.depth == 4);
  CHECK(f.input_count == 2);
  CHECK(f.avg_nodes_per_layer == 11.0 / 5.0);

  const auto f5 = feature_row(find_benchmark("feynman-5"));
  CHECK(f5.depth == 8);
  CHECK(f5.input_count == 6);
  for (const auto& s : catalog()) {
    const auto row = feature_row(s);
    CHECK(row.avg_nodes_per_layer ==
          static_cast<double>(s.canonical_expression().size()) / static_cast<double>(s.depth + 1));
  }
}

TEST_CASE("suite config parsing") {
  std::istringstream in(
      "# desk suite\n"
      "suite_id = desk\n"
      "benchmarks = hemberg-1, feynman-1\n"
      "algorithms = gp,random\n"
      "notations = postfix\n"
      "runs = 3\n"
      "budget-seconds = 20\n"
      "sample_interval_seconds = 2.5  # trailing comment\n"
      "seed = 99\n"
      "samples = 500\n"
      "parallelism = 2\n"
      "population = 200\n");
  const auto c = parse_suite_config(in);
  CHECK(c.suite_id == "desk");
  CHECK(c.benchmarks == std::vector<std::string>{"hemberg-1", "feynman-1"});
  CHECK(c.algorithms == std::vector<Algorithm>{Algorithm::Gp, Algorithm::Random});
  CHECK(c.notations == std::vector<Notation>{Notation::Postfix});
  CHECK(c.runs == 3);
  CHECK(c.budget_seconds == 20.0);
  CHECK(c.sample_interval_seconds == 2.5);
  CHECK(c.seed == 99);
  CHECK(c.samples == std::optional<std::size_t>(500));
  CHECK(c.parallelism == 2);
  CHECK(c.gp_population == 200);
  CHECK_NOTHROW(c.validate());

  std::istringstream unknown("colour = blue\n");
  CHECK_THROWS_AS(parse_suite_config(unknown), std::invalid_argument);
  std::istringstream bad("runs = three\n");
  CHECK_THROWS_AS(parse_suite_config(bad), std::invalid_argument);
  std::istringstream negative("runs = -1\n");
  CHECK_THROWS_AS(parse_suite_config(negative), std::invalid_argument);
  std::istringstream no_eq("runs 3\n");
  CHECK_THROWS_AS(parse_suite_config(no_eq), std::invalid_argument);

  SuiteConfig empty;
  empty.algorithms = {Algorithm::Gp};
  empty.notations = {Notation::Prefix};
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
  empty.benchmarks = {"nope"};
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
}

TEST_CASE("mean and standard deviation") {
  const std::vector<double> one{4.0};
  CHECK(mean_std(one) == std::pair<double, double>{4.0, 0.0});
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto [m, s] = mean_std(v);
  CHECK(m == 2.5);
  CHECK(s == doctest::Approx(std::sqrt(5.0 / 3.0)));
  const std::vector<double> inf{1.0, std::numeric_limits<double>::infinity()};
  CHECK(std::isinf(mean_std(inf).first));
}

TEST_CASE("aggregation of identical traces equals the trace and skips failures") {
  RunTrace t;
  t.samples = {{1, 10, 0.5}, {2, 20, 0.25}, {3, 30, 0.125}};
  t.best_mse = 0.125;
  RunRecord ok;
  ok.benchmark = "hemberg-2";
  ok.algorithm = Algorithm::Sa;
  ok.trace = t;
  RunRecord failed = ok;
  failed.trace.reset();
  failed.error = "boom";
  const auto agg = aggregate_runs({ok, ok, failed, ok});
  REQUIRE(agg.size() == 1);
  CHECK(agg[0].runs == 3);
  CHECK(agg[0].mean_final_mse == 0.125);
  CHECK(agg[0].std_final_mse == 0.0);
  REQUIRE(agg[0].curve.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(agg[0].curve[i].mean_mse == t.samples[i].best_mse);
    CHECK(agg[0].curve[i].elapsed_seconds == t.samples[i].elapsed_seconds);
  }
  CHECK(agg[0].features.depth == 4);
}

TEST_CASE("time-free suite: files, recomputation and parallelism invariance") {
  SuiteConfig cfg;
  cfg.suite_id = "unit";
  cfg.benchmarks = {"hemberg-1", "feynman-1"};
  cfg.algorithms = {Algorithm::Random, Algorithm::Gp};
  cfg.notations = {Notation::Prefix, Notation::Postfix};
  cfg.runs = 2;
  cfg.iteration_cap = 300;
  cfg.sample_every_iterations = 100;
  cfg.samples = 50;
  cfg.gp_population = 30;
  cfg.seed = 5;

  const auto dir1 = temp_dir("serial");
  const auto r1 = run_suite(cfg, dir1.string());
  CHECK(r1.failures() == 0);
  REQUIRE(r1.runs.size() == 16);
  REQUIRE(r1.aggregates.size() == 8);

  // Recompute every aggregate from the per-run files.
  std::map<std::string, std::vector<TraceFile>> groups;
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir1 / "unit")) {
    const auto name = entry.path().filename().string();
    if (name == "summary.csv" || name == "curves.csv") continue;
    std::ifstream in(entry.path());
    auto f = read_trace_csv(in);
    ++files;
    for (std::size_t i = 1; i < f.samples.size(); ++i) CHECK(f.samples[i].best_mse <= f.samples[i - 1].best_mse);
    const auto bench = f.meta.run_id.substr(0, f.meta.run_id.find('/'));
    groups[bench + "," + std::string(to_string(f.meta.algorithm)) + "," + std::string(to_string(f.meta.notation))]
        .push_back(std::move(f));
  }
  CHECK(files == 16);
  std::ifstream summary(dir1 / "unit" / "summary.csv");
  std::string line;
  std::getline(summary, line);
  CHECK(line == "benchmark,algorithm,notation,depth,input_count,avg_nodes_per_layer,mean_final_mse,std_final_mse,runs");
  std::size_t rows = 0;
  while (std::getline(summary, line)) {
    ++rows;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 9);
    const auto& g = groups.at(cells[0] + "," + cells[1] + "," + cells[2]);
    double sum = 0.0;
    for (const auto& f : g) sum += f.final_mse;
    const double mean = sum / static_cast<double>(g.size());
    double ss2 = 0.0;
    for (const auto& f : g) ss2 += (f.final_mse - mean) * (f.final_mse - mean);
    const double sd = std::sqrt(ss2 / static_cast<double>(g.size() - 1));
    CHECK(parse_double_text(cells[6]) == doctest::Approx(mean).epsilon(1e-12));
    CHECK(parse_double_text(cells[7]) == doctest::Approx(sd).epsilon(1e-9));
    CHECK(std::stoul(cells[8]) == g.size());
    CHECK(std::stoi(cells[3]) == find_benchmark(cells[0]).depth);
  }
  CHECK(rows == 8);

  cfg.parallelism = 3;
  const auto dir2 = temp_dir("parallel");
  const auto r2 = run_suite(cfg, dir2.string());
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  CHECK(slurp(dir1 / "unit" / "summary.csv") == slurp(dir2 / "unit" / "summary.csv"));
  CHECK(slurp(dir1 / "unit" / "curves.csv") == slurp(dir2 / "unit" / "curves.csv"));
  for (const auto& r : r1.runs) {
    const auto name = fs::path(r.path).filename();
    CHECK(slurp(dir1 / "unit" / name) == slurp(dir2 / "unit" / name));
  }
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}
