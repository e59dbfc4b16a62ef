#include "fdsr/eval.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "fdsr/expr.hpp"

namespace fdsr {

void Dataset::validate() const {
  if (x.rows() < 1) throw std::invalid_argument("dataset has no rows");
  if (x.cols() < 1) throw std::invalid_argument("dataset has no features");
  if (y.size() != x.rows()) throw std::invalid_argument("label count does not match row count");
  if (!x.allFinite() || !y.allFinite()) throw std::invalid_argument("dataset contains non-finite values");
  if (!feature_names.empty() && feature_names.size() != dims())
    throw std::invalid_argument("feature name count does not match column count");
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t row) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::invalid_argument("bad number '" + s + "' on data row " + std::to_string(row + 1));
  return v;
}

}  // namespace

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("dataset file is empty");
  const auto header = split_csv(line);
  if (header.size() < 2 || header.back() != "y")
    throw std::invalid_argument("dataset header must be x1,...,xD,y");
  const std::size_t d = header.size() - 1;
  for (std::size_t j = 0; j < d; ++j)
    if (header[j] != "x" + std::to_string(j + 1))
      throw std::invalid_argument("dataset header column " + std::to_string(j + 1) + " must be x" +
                                  std::to_string(j + 1));

  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    if (cells.size() != d + 1)
      throw std::invalid_argument("data row " + std::to_string(rows + 1) + " has " + std::to_string(cells.size()) +
                                  " columns, expected " + std::to_string(d + 1));
    for (const auto& c : cells) values.push_back(parse_double(c, rows));
    ++rows;
  }
  Dataset data;
  data.x.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
  data.y.resize(static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < d; ++j)
      data.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = values[r * (d + 1) + j];
    data.y(static_cast<Eigen::Index>(r)) = values[r * (d + 1) + d];
  }
  data.feature_names.assign(header.begin(), header.end() - 1);
  data.validate();
  return data;
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file " + path);
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (std::size_t j = 0; j < data.dims(); ++j) out << 'x' << (j + 1) << ',';
  out << "y\n";
  char buf[64];
  auto put = [&](double v) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, ptr - buf);
  };
  for (Eigen::Index r = 0; r < data.x.rows(); ++r) {
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
      put(data.x(r, j));
      out << ',';
    }
    put(data.y(r));
    out << '\n';
  }
}

namespace {

void apply_unary(UnaryOp op, Eigen::ArrayXd& a) {
  switch (op) {
    case UnaryOp::Sin: a = a.sin(); break;
    case UnaryOp::Cos: a = a.cos(); break;
    case UnaryOp::Sqrt: a = a.sqrt(); break;
    case UnaryOp::Exp: a = a.exp(); break;
    case UnaryOp::Log: a = a.log(); break;
    case UnaryOp::Tan: a = a.tan(); break;
  }
}

// lhs <- lhs op rhs
void apply_binary(BinaryOp op, Eigen::ArrayXd& lhs, const Eigen::ArrayXd& rhs) {
  switch (op) {
    case BinaryOp::Add: lhs += rhs; break;
    case BinaryOp::Sub: lhs -= rhs; break;
    case BinaryOp::Mul: lhs *= rhs; break;
    case BinaryOp::Div: lhs /= rhs; break;
    case BinaryOp::Pow: lhs = lhs.binaryExpr(rhs, [](double a, double b) { return std::pow(a, b); }); break;
  }
}

}  // namespace

const Eigen::ArrayXd& Evaluator::operator()(const ExpressionSeq& seq, const Eigen::MatrixXd& x,
                                            std::span<const double> constants) {
  if (seq.empty()) throw ExpressionError("empty expression");
  const std::size_t n = seq.size();
  const bool prefix = seq.notation == Notation::Prefix;
  const std::size_t num_consts = count_constants(seq.tokens);
  if (constants.size() != num_consts)
    throw std::invalid_argument("expression has " + std::to_string(num_consts) + " constants but " +
                                std::to_string(constants.size()) + " values were given");
  if (stack_.size() < n) stack_.resize(n);

  std::size_t sp = 0;
  std::size_t next_const = prefix ? num_consts : 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = prefix ? n - 1 - k : k;
    const Token t = seq.tokens[i];
    switch (t.kind) {
      case TokenKind::Variable:
        if (t.code >= x.cols()) throw std::invalid_argument("expression uses " + token_text(t) + " but data has " +
                                                            std::to_string(x.cols()) + " features");
        stack_[sp++] = x.col(t.code).array();
        break;
      case TokenKind::Constant:
        stack_[sp++].setConstant(x.rows(), constants[prefix ? --next_const : next_const++]);
        break;
      case TokenKind::UnaryOp:
        if (sp < 1) throw ExpressionError("unary operator with an empty stack", i);
        apply_unary(t.unary_op(), stack_[sp - 1]);
        break;
      case TokenKind::BinaryOp:
        if (sp < 2) throw ExpressionError("binary operator with fewer than two operands", i);
        if (prefix) {
          // Reversed prefix: the top of the stack is the first operand.
          apply_binary(t.binary_op(), stack_[sp - 1], stack_[sp - 2]);
          std::swap(stack_[sp - 2], stack_[sp - 1]);
        } else {
          apply_binary(t.binary_op(), stack_[sp - 2], stack_[sp - 1]);
        }
        --sp;
        break;
    }
  }
  if (sp != 1) throw ExpressionError("expression is incomplete");
  return stack_[0];
}

Eigen::ArrayXd evaluate(const ExpressionSeq& seq, const Eigen::MatrixXd& x, std::span<const double> constants) {
  Evaluator ev;
  return ev(seq, x, constants);
}

double mse(const Eigen::Ref<const Eigen::ArrayXd>& pred, const Eigen::Ref<const Eigen::ArrayXd>& y) {
  if (pred.size() != y.size()) throw std::invalid_argument("prediction and label lengths differ");
  if (pred.size() == 0) throw std::invalid_argument("mse of empty vectors");
  if (!pred.allFinite()) return std::numeric_limits<double>::infinity();
  const double value = (pred - y).square().mean();
  return std::isfinite(value) ? value : std::numeric_limits<double>::infinity();
}

double score(double mse_value) {
  if (!(mse_value < std::numeric_limits<double>::infinity())) return 0.0;
  return 1.0 / (1.0 + mse_value);
}

void FitConfig::validate() const {
  if (lm_iterations < 0) throw std::invalid_argument("lm_iterations must be >= 0");
  if (!(jacobian_step > 0)) throw std::invalid_argument("jacobian_step must be > 0");
  if (!(damping_init > 0)) throw std::invalid_argument("damping_init must be > 0");
  if (!(damping_factor > 1)) throw std::invalid_argument("damping_factor must be > 1");
}

std::string ConstCache::key(const ExpressionSeq& seq) {
  std::string k;
  k.reserve(1 + 3 * seq.size());
  k.push_back(seq.notation == Notation::Prefix ? 'p' : 'q');
  for (Token t : seq.tokens) {
    k.push_back(static_cast<char>(t.kind));
    k.push_back(static_cast<char>(t.code & 0xff));
    k.push_back(static_cast<char>(t.code >> 8));
  }
  return k;
}

const ConstCache::Entry* ConstCache::find(const ExpressionSeq& seq) const {
  auto it = map_.find(key(seq));
  return it == map_.end() ? nullptr : &it->second;
}

void ConstCache::update(const ExpressionSeq& seq, std::span<const double> constants, double score_value) {
  auto [it, inserted] = map_.try_emplace(key(seq));
  if (inserted || score_value > it->second.score) {
    it->second.constants.assign(constants.begin(), constants.end());
    it->second.score = score_value;
  }
}

namespace {

void jacobian_into(Evaluator& ev, const ExpressionSeq& seq, const Eigen::MatrixXd& x, std::vector<double>& c,
                   double h, Eigen::MatrixXd& jac) {
  jac.resize(x.rows(), static_cast<Eigen::Index>(c.size()));
  for (std::size_t j = 0; j < c.size(); ++j) {
    const double orig = c[j];
    const double step = h * std::max(1.0, std::abs(orig));
    c[j] = orig + step;
    jac.col(static_cast<Eigen::Index>(j)) = ev(seq, x, c).matrix();
    c[j] = orig - step;
    jac.col(static_cast<Eigen::Index>(j)) -= ev(seq, x, c).matrix();
    jac.col(static_cast<Eigen::Index>(j)) /= 2.0 * step;
    c[j] = orig;
  }
}

}  // namespace

Eigen::MatrixXd numerical_jacobian(const ExpressionSeq& seq, const Eigen::MatrixXd& x,
                                   std::span<const double> constants, double h) {
  Evaluator ev;
  std::vector<double> c(constants.begin(), constants.end());
  Eigen::MatrixXd jac;
  jacobian_into(ev, seq, x, c, h, jac);
  return jac;
}

FitResult fit_constants(const ExpressionSeq& seq, const Dataset& data, ConstCache* cache, const FitConfig& config) {
  Evaluator ev;
  return fit_constants(seq, data, cache, config, ev);
}

FitResult fit_constants(const ExpressionSeq& seq, const Dataset& data, ConstCache* cache, const FitConfig& config,
                        Evaluator& ev) {
  const std::size_t k = count_constants(seq.tokens);
  const Eigen::ArrayXd y = data.y.array();
  const double rows = static_cast<double>(data.x.rows());
  FitResult result;
  if (k == 0) {
    result.mse = mse(ev(seq, data.x, {}), y);
    result.score = score(result.mse);
    return result;
  }

  std::vector<double> c;
  if (const auto* hit = cache ? cache->find(seq) : nullptr; hit && hit->constants.size() == k)
    c = hit->constants;
  else
    c.assign(k, config.init_constant);

  Eigen::VectorXd residual = (ev(seq, data.x, c) - y).matrix();
  double cost = residual.squaredNorm();
  if (!residual.allFinite() || !std::isfinite(cost)) {
    result.constants = std::move(c);
    result.mse = std::numeric_limits<double>::infinity();
    result.score = 0.0;
    return result;
  }

  double lambda = config.damping_init;
  Eigen::MatrixXd jac;
  Eigen::MatrixXd normal;
  Eigen::VectorXd gradient;
  bool stale = true;
  std::vector<double> trial(k);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (int it = 0; it < config.lm_iterations; ++it) {
    if (stale) {
      jacobian_into(ev, seq, data.x, c, config.jacobian_step, jac);
      if (!jac.allFinite()) break;
      normal.noalias() = jac.transpose() * jac;
      gradient.noalias() = jac.transpose() * residual;
      stale = false;
    }
    Eigen::LDLT<Eigen::MatrixXd> solver(normal + lambda * eye);
    Eigen::VectorXd delta;
    bool ok = solver.info() == Eigen::Success;
    if (ok) {
      delta = solver.solve(-gradient);
      ok = delta.allFinite();
    }
    if (ok) {
      for (std::size_t j = 0; j < k; ++j) trial[j] = c[j] + delta(static_cast<Eigen::Index>(j));
      Eigen::VectorXd trial_residual = (ev(seq, data.x, trial) - y).matrix();
      const double trial_cost = trial_residual.squaredNorm();
      if (trial_residual.allFinite() && trial_cost < cost) {
        c.swap(trial);
        residual.swap(trial_residual);
        cost = trial_cost;
        lambda /= config.damping_factor;
        stale = true;
        continue;
      }
    }
    lambda *= config.damping_factor;
  }

  result.mse = cost / rows;
  if (!std::isfinite(result.mse)) result.mse = std::numeric_limits<double>::infinity();
  result.score = score(result.mse);
  if (cache) cache->update(seq, c, result.score);
  result.constants = std::move(c);
  return result;
}

}  // namespace fdsr
