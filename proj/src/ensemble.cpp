#include "bermudan/ensemble.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#include "bermudan/parallel.hpp"
#include "bermudan/random.hpp"

namespace bermudan {

void ForestFitConfig::validate() const {
  if (num_trees < 1) throw std::invalid_argument("ForestFitConfig: num_trees must be >= 1");
  if (!(max_samples > 0.0 && max_samples <= 1.0)) {
    throw std::invalid_argument("ForestFitConfig: max_samples must lie in (0, 1]");
  }
  tree.validate();
}

std::string ForestFitConfig::describe() const {
  std::ostringstream out;
  out << "forest(trees=" << num_trees << ",max_samples=" << max_samples << ",depth=" << tree.max_depth
      << ",leaf=" << tree.min_samples_leaf;
  if (!bootstrap) out << ",bootstrap=false";
  if (tree.split_strategy == SplitStrategy::BestDirectionBestThreshold) out << ",split=best";
  if (tree.midpoint_prob > 0.0) out << ",q=" << tree.midpoint_prob;
  out << ")";
  return out.str();
}

std::uint64_t forest_member_seed(std::uint64_t forest_seed, std::size_t k) { return derive_seed(forest_seed, k); }

double RandomForest::predict(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& tree : trees_) sum += tree.predict(x);
  return sum / static_cast<double>(trees_.size());
}

RandomForest fit_forest(const SampleView& x, std::span<const double> y, const ForestFitConfig& config,
                        unsigned workers) {
  config.validate();
  const std::size_t m = x.rows();
  if (m == 0) throw InsufficientSamples("fit_forest: no training rows");
  if (y.size() != m) throw DimensionMismatch("fit_forest: x rows and y length differ");
  const auto draw = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(config.max_samples * static_cast<double>(m) - 1e-9)), 1, m);

  std::vector<std::optional<RegressionTree>> trees(config.num_trees);
  parallel_for(config.num_trees, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      TreeFitConfig tree_config = config.tree;
      tree_config.seed = forest_member_seed(config.seed, k);
      Stream rng(derive_seed(tree_config.seed, 0xb007));
      std::vector<std::size_t> rows;
      rows.reserve(draw);
      if (config.bootstrap) {
        std::uniform_int_distribution<std::size_t> pick(0, m - 1);
        for (std::size_t i = 0; i < draw; ++i) rows.push_back(pick(rng));
        std::sort(rows.begin(), rows.end());
      } else {
        // Selection sampling keeps the rows in ascending order.
        std::size_t needed = draw;
        for (std::size_t i = 0; i < m && needed > 0; ++i) {
          if (rng.uniform() * static_cast<double>(m - i) < static_cast<double>(needed)) {
            rows.push_back(i);
            --needed;
          }
        }
      }
      trees[k].emplace(fit_tree(x, y, std::move(rows), tree_config));
    }
  });

  std::vector<RegressionTree> members;
  members.reserve(trees.size());
  for (auto& t : trees) members.push_back(std::move(*t));
  return RandomForest(std::move(members), config);
}

std::vector<std::vector<unsigned>> monomial_exponents(std::size_t dim, unsigned degree) {
  std::vector<std::vector<unsigned>> out;
  std::vector<unsigned> current(dim, 0);
  auto fill = [&](auto&& self, std::size_t var, unsigned remaining) -> void {
    if (var + 1 == dim) {
      current[var] = remaining;
      out.push_back(current);
      return;
    }
    for (unsigned e = remaining + 1; e-- > 0;) {
      current[var] = e;
      self(self, var + 1, remaining - e);
    }
  };
  for (unsigned k = 0; k <= degree; ++k) fill(fill, 0, k);
  return out;
}

std::size_t num_monomials(std::size_t dim, unsigned degree) {
  // C(dim + degree, degree)
  double c = 1.0;
  for (unsigned k = 1; k <= degree; ++k) c = c * static_cast<double>(dim + k) / static_cast<double>(k);
  return static_cast<std::size_t>(std::llround(c));
}

namespace {

struct SparseMonomial {
  std::vector<std::pair<std::size_t, unsigned>> factors;  // (variable, power), power > 0
};

std::vector<SparseMonomial> sparse_basis(const std::vector<std::vector<unsigned>>& exponents) {
  std::vector<SparseMonomial> basis(exponents.size());
  for (std::size_t j = 0; j < exponents.size(); ++j) {
    for (std::size_t i = 0; i < exponents[j].size(); ++i) {
      if (exponents[j][i] > 0) basis[j].factors.emplace_back(i, exponents[j][i]);
    }
  }
  return basis;
}

// powers[i * (degree + 1) + e] = x_i^e
void fill_powers(std::span<const double> x, unsigned degree, std::vector<double>& powers) {
  powers.resize(x.size() * (degree + 1));
  for (std::size_t i = 0; i < x.size(); ++i) {
    double p = 1.0;
    for (unsigned e = 0; e <= degree; ++e) {
      powers[i * (degree + 1) + e] = p;
      p *= x[i];
    }
  }
}

double eval_monomial(const SparseMonomial& mono, const std::vector<double>& powers, unsigned degree) {
  double v = 1.0;
  for (const auto& [var, power] : mono.factors) v *= powers[var * (degree + 1) + power];
  return v;
}

}  // namespace

std::vector<double> monomial_features(std::span<const double> x, unsigned degree) {
  const auto basis = sparse_basis(monomial_exponents(x.size(), degree));
  std::vector<double> powers;
  fill_powers(x, degree, powers);
  std::vector<double> out(basis.size());
  for (std::size_t j = 0; j < basis.size(); ++j) out[j] = eval_monomial(basis[j], powers, degree);
  return out;
}

PolynomialModel::PolynomialModel(unsigned degree, std::vector<double> shift, std::vector<double> scale,
                                 std::vector<double> std_coefficients)
    : degree_(degree),
      shift_(std::move(shift)),
      scale_(std::move(scale)),
      coefficients_(std::move(std_coefficients)),
      exponents_(monomial_exponents(shift_.size(), degree)) {
  if (scale_.size() != shift_.size() || coefficients_.size() != exponents_.size()) {
    throw DimensionMismatch("PolynomialModel: inconsistent sizes");
  }
}

double PolynomialModel::predict(std::span<const double> x) const {
  if (x.size() != dim()) throw DimensionMismatch("PolynomialModel: query dimension differs from training");
  thread_local std::vector<double> powers;
  powers.resize(dim() * (degree_ + 1));
  for (std::size_t i = 0; i < dim(); ++i) {
    const double z = (x[i] - shift_[i]) / scale_[i];
    double p = 1.0;
    for (unsigned e = 0; e <= degree_; ++e) {
      powers[i * (degree_ + 1) + e] = p;
      p *= z;
    }
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < exponents_.size(); ++j) {
    double v = coefficients_[j];
    const auto& a = exponents_[j];
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] > 0) v *= powers[i * (degree_ + 1) + a[i]];
    }
    sum += v;
  }
  return sum;
}

std::vector<double> PolynomialModel::raw_coefficients() const {
  std::map<std::vector<unsigned>, std::size_t> index;
  for (std::size_t j = 0; j < exponents_.size(); ++j) index.emplace(exponents_[j], j);

  std::vector<double> raw(exponents_.size(), 0.0);
  for (std::size_t j = 0; j < exponents_.size(); ++j) {
    const auto& a = exponents_[j];
    // prod_i ((x_i - mu_i) / s_i)^a_i expanded binomially in each variable.
    std::vector<unsigned> b(a.size(), 0);
    auto expand = [&](auto&& self, std::size_t var, double weight) -> void {
      if (var == a.size()) {
        raw[index.at(b)] += coefficients_[j] * weight;
        return;
      }
      const unsigned n = a[var];
      const double inv_scale = std::pow(scale_[var], -static_cast<double>(n));
      double binom = 1.0;
      for (unsigned k = 0; k <= n; ++k) {
        b[var] = k;
        self(self, var + 1, weight * inv_scale * binom * std::pow(-shift_[var], static_cast<double>(n - k)));
        binom = binom * static_cast<double>(n - k) / static_cast<double>(k + 1);
      }
      b[var] = 0;
    };
    expand(expand, 0, 1.0);
  }
  return raw;
}

PolynomialModel fit_polynomial(const SampleView& x, std::span<const double> y, unsigned degree) {
  const std::size_t m = x.rows();
  const std::size_t d = x.dim();
  if (y.size() != m) throw DimensionMismatch("fit_polynomial: x rows and y length differ");
  const std::size_t p = num_monomials(d, degree);
  if (m < p) {
    throw InsufficientSamples("fit_polynomial: " + std::to_string(m) + " samples for " + std::to_string(p) +
                              " monomials");
  }

  std::vector<double> shift(d, 0.0), scale(d, 1.0);
  for (std::size_t i = 0; i < d; ++i) {
    double mean = 0.0;
    for (std::size_t r = 0; r < m; ++r) mean += x(r, i);
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t r = 0; r < m; ++r) var += (x(r, i) - mean) * (x(r, i) - mean);
    var /= static_cast<double>(m);
    shift[i] = mean;
    scale[i] = var > 0.0 ? std::sqrt(var) : 1.0;
  }

  const auto basis = sparse_basis(monomial_exponents(d, degree));
  Eigen::MatrixXd design(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p));
  std::vector<double> z(d), powers;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t i = 0; i < d; ++i) z[i] = (x(r, i) - shift[i]) / scale[i];
    fill_powers(z, degree, powers);
    for (std::size_t j = 0; j < p; ++j) {
      design(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = eval_monomial(basis[j], powers, degree);
    }
  }
  const Eigen::Map<const Eigen::VectorXd> rhs(y.data(), static_cast<Eigen::Index>(m));
  const Eigen::VectorXd coef = design.completeOrthogonalDecomposition().solve(rhs);
  return PolynomialModel(degree, std::move(shift), std::move(scale), std::vector<double>(coef.begin(), coef.end()));
}

std::string describe(const RegressorSpec& spec) {
  if (const auto* t = std::get_if<TreeFitConfig>(&spec)) return t->describe();
  if (const auto* f = std::get_if<ForestFitConfig>(&spec)) return f->describe();
  return "poly(degree=" + std::to_string(std::get<PolynomialSpec>(spec).degree) + ")";
}

std::size_t minimum_samples(const RegressorSpec& spec, std::size_t dim) {
  if (const auto* poly = std::get_if<PolynomialSpec>(&spec)) return num_monomials(dim, poly->degree);
  return 1;
}

Regressor fit_regressor(const RegressorSpec& spec, const SampleView& x, std::span<const double> y,
                        std::uint64_t seed, unsigned workers) {
  if (const auto* t = std::get_if<TreeFitConfig>(&spec)) {
    TreeFitConfig config = *t;
    config.seed = seed;
    return Regressor(fit_tree(x, y, config));
  }
  if (const auto* f = std::get_if<ForestFitConfig>(&spec)) {
    ForestFitConfig config = *f;
    config.seed = seed;
    return Regressor(fit_forest(x, y, config, workers));
  }
  return Regressor(fit_polynomial(x, y, std::get<PolynomialSpec>(spec).degree));
}

}  // namespace bermudan
