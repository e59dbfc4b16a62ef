#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fdsr/token.hpp"

namespace fdsr {

/// Feature matrix (rows are samples) and labels.
struct Dataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> feature_names;

  std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t dims() const { return static_cast<std::size_t>(x.cols()); }

  /// Throws std::invalid_argument on empty, mis-shaped or non-finite data.
  void validate() const;
};

/// CSV with header `x1,...,xD,y`.
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(std::ostream& out, const Dataset& data);

/// Stack machine evaluating a complete expression over every row at once.
/// Holds its column buffers so repeated evaluations do not allocate.
class Evaluator {
 public:
  /// Postfix runs left to right, prefix right to left. `constants` binds the
  /// constant tokens in left-to-right sequence order.
  const Eigen::ArrayXd& operator()(const ExpressionSeq& seq, const Eigen::MatrixXd& x,
                                   std::span<const double> constants);

 private:
  std::vector<Eigen::ArrayXd> stack_;
};

Eigen::ArrayXd evaluate(const ExpressionSeq& seq, const Eigen::MatrixXd& x, std::span<const double> constants = {});

/// Mean squared error; +inf when any prediction is not finite.
double mse(const Eigen::Ref<const Eigen::ArrayXd>& pred, const Eigen::Ref<const Eigen::ArrayXd>& y);

/// 1 / (1 + mse), with +inf mapped to 0.
double score(double mse_value);

struct FitConfig {
  int lm_iterations = 5;  // attempted damped steps
  double init_constant = 1.0;
  double damping_init = 1e-3;
  double damping_factor = 10.0;
  /// Central-difference step is jacobian_step * max(1, |c|).
  double jacobian_step = 1e-4;

  void validate() const;
};

/// Best known constants per expression, used as the starting point the next
/// time the same expression is fitted. Entries only ever improve.
class ConstCache {
 public:
  struct Entry {
    std::vector<double> constants;
    double score = 0.0;
  };

  const Entry* find(const ExpressionSeq& seq) const;
  /// Stores the assignment if it beats the cached score (or nothing is cached).
  void update(const ExpressionSeq& seq, std::span<const double> constants, double score);
  std::size_t size() const { return map_.size(); }

  static std::string key(const ExpressionSeq& seq);

 private:
  std::unordered_map<std::string, Entry> map_;
};

struct FitResult {
  std::vector<double> constants;
  double mse = 0.0;
  double score = 0.0;
};

/// Levenberg-Marquardt on the expression's constants, seeded from the cache
/// when possible and from `init_constant` otherwise. The returned mse is never
/// worse than the seed's. `cache` may be null.
FitResult fit_constants(const ExpressionSeq& seq, const Dataset& data, ConstCache* cache,
                        const FitConfig& config = {});

/// Same, reusing `evaluator` buffers.
FitResult fit_constants(const ExpressionSeq& seq, const Dataset& data, ConstCache* cache, const FitConfig& config,
                        Evaluator& evaluator);

/// d prediction / d constant by central differences with step h*max(1,|c|).
Eigen::MatrixXd numerical_jacobian(const ExpressionSeq& seq, const Eigen::MatrixXd& x,
                                   std::span<const double> constants, double h);

}  // namespace fdsr
