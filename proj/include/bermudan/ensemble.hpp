#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bermudan/samples.hpp"
#include "bermudan/tree_regression.hpp"

namespace bermudan {

struct ForestFitConfig {
  std::size_t num_trees = 10;
  TreeFitConfig tree;  // tree.seed is ignored; member seeds come from `seed`
  bool bootstrap = true;
  /// Fraction of the training rows handed to each member.
  double max_samples = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  std::string describe() const;
};

/// Seed of member k's tree; fit_forest uses exactly this for tree k.
std::uint64_t forest_member_seed(std::uint64_t forest_seed, std::size_t k);

class RandomForest {
 public:
  RandomForest(std::vector<RegressionTree> trees, ForestFitConfig config)
      : trees_(std::move(trees)), config_(std::move(config)) {}

  /// Unweighted mean of the member predictions.
  double predict(std::span<const double> x) const;

  const std::vector<RegressionTree>& trees() const { return trees_; }
  const ForestFitConfig& config() const { return config_; }

 private:
  std::vector<RegressionTree> trees_;
  ForestFitConfig config_;
};

/// Member k is fitted on ceil(max_samples * M) rows drawn with (bootstrap)
/// or without replacement. Members are fitted on up to `workers` threads;
/// the result does not depend on `workers`.
RandomForest fit_forest(const SampleView& x, std::span<const double> y, const ForestFitConfig& config,
                        unsigned workers = 1);

/// Monomials of total degree <= degree in graded lexicographic order:
/// by degree, then lexicographically descending in the exponent vector,
/// e.g. for d = 2: 1, x1, x2, x1^2, x1 x2, x2^2, ...
std::vector<std::vector<unsigned>> monomial_exponents(std::size_t dim, unsigned degree);

/// Values of every monomial at x, in monomial_exponents order.
std::vector<double> monomial_features(std::span<const double> x, unsigned degree);

/// Least-squares fit on the total-degree monomial basis. Inputs are
/// standardized per column before solving; predict() evaluates in the
/// standardized basis and raw_coefficients() maps back to raw monomials.
class PolynomialModel {
 public:
  PolynomialModel(unsigned degree, std::vector<double> shift, std::vector<double> scale,
                  std::vector<double> std_coefficients);

  double predict(std::span<const double> x) const;

  unsigned degree() const { return degree_; }
  std::size_t dim() const { return shift_.size(); }
  /// Coefficients of the raw monomials (monomial_exponents order).
  std::vector<double> raw_coefficients() const;
  std::size_t num_coefficients() const { return coefficients_.size(); }

 private:
  unsigned degree_;
  std::vector<double> shift_;
  std::vector<double> scale_;
  std::vector<double> coefficients_;  // on standardized monomials
  std::vector<std::vector<unsigned>> exponents_;
};

std::size_t num_monomials(std::size_t dim, unsigned degree);

/// Throws InsufficientSamples when M < number of monomials. Rank-deficient
/// designs get the minimum-norm solution.
PolynomialModel fit_polynomial(const SampleView& x, std::span<const double> y, unsigned degree);

struct PolynomialSpec {
  unsigned degree = 3;
};

using RegressorSpec = std::variant<TreeFitConfig, ForestFitConfig, PolynomialSpec>;

std::string describe(const RegressorSpec& spec);
/// Smallest training set the regressor can be fitted on.
std::size_t minimum_samples(const RegressorSpec& spec, std::size_t dim);

/// A fitted continuation-value model of any kind.
class Regressor {
 public:
  using Model = std::variant<RegressionTree, RandomForest, PolynomialModel>;

  explicit Regressor(Model model) : model_(std::move(model)) {}

  double predict(std::span<const double> x) const {
    return std::visit([&](const auto& m) { return m.predict(x); }, model_);
  }
  const Model& model() const { return model_; }

 private:
  Model model_;
};

/// Fits `spec` with the given seed (overriding any seed inside the spec).
Regressor fit_regressor(const RegressorSpec& spec, const SampleView& x, std::span<const double> y,
                        std::uint64_t seed, unsigned workers = 1);

}  // namespace bermudan
