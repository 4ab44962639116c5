#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "bermudan/errors.hpp"
#include "bermudan/tree_regression.hpp"
#include "doctest.h"

using namespace bermudan;

namespace {

struct Data {
  std::vector<double> x;
  std::vector<double> y;
  std::size_t dim;
  SampleView view() const { return SampleView(x, dim); }
};

Data sample_data(std::size_t n, std::size_t dim, std::uint64_t seed, double noise = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> e(0.0, noise);
  Data d{std::vector<double>(n * dim), std::vector<double>(n), dim};
  for (std::size_t i = 0; i < n; ++i) {
    double target = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      d.x[i * dim + k] = u(rng);
      target += std::sin(3.0 * (k + 1) * d.x[i * dim + k]);
    }
    d.y[i] = target + e(rng);
  }
  return d;
}

// Exhaustive scan over every admissible threshold, written without prefix
// sums: recompute both side means and residuals from scratch.
std::optional<std::pair<double, double>> brute_force_split(const std::vector<double>& xs, const std::vector<double>& ys,
                                                           std::size_t min_leaf) {
  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::optional<std::pair<double, double>> best;  // (threshold, mse)
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    const double t = 0.5 * (sorted[i] + sorted[i + 1]);
    double sl = 0, sr = 0;
    std::size_t nl = 0, nr = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) (xs[k] <= t ? (sl += ys[k], ++nl) : (sr += ys[k], ++nr));
    if (nl < min_leaf || nr < min_leaf) continue;
    const double ml = sl / nl, mr = sr / nr;
    double sse = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) sse += std::pow(ys[k] - (xs[k] <= t ? ml : mr), 2);
    const double mse = sse / xs.size();
    if (!best || mse < best->second - 1e-15) best = {{t, mse}};
  }
  return best;
}

// Leaf boxes derived from the root by interval intersection.
struct Box {
  std::vector<double> lo, hi;  // lo < x <= hi
  std::size_t node;
};

std::vector<Box> leaf_boxes(const RegressionTree& tree) {
  std::vector<Box> out;
  const double inf = std::numeric_limits<double>::infinity();
  auto walk = [&](auto&& self, std::size_t id, Box box) -> void {
    const auto& node = tree.nodes()[id];
    if (node.is_leaf()) {
      box.node = id;
      out.push_back(box);
      return;
    }
    Box left = box, right = box;
    const auto a = static_cast<std::size_t>(node.axis);
    left.hi[a] = std::min(left.hi[a], node.threshold);
    right.lo[a] = std::max(right.lo[a], node.threshold);
    self(self, static_cast<std::size_t>(node.left), left);
    self(self, static_cast<std::size_t>(node.right), right);
  };
  walk(walk, 0, Box{std::vector<double>(tree.dim(), -inf), std::vector<double>(tree.dim(), inf), 0});
  return out;
}

double population_variance(const std::vector<double>& y) {
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  double s = 0.0;
  for (double v : y) s += (v - mean) * (v - mean);
  return s / y.size();
}

TreeFitConfig config(std::size_t depth, std::size_t leaf, std::uint64_t seed, double q = 0.0,
                     SplitStrategy strategy = SplitStrategy::RandomDirectionBestThreshold) {
  return TreeFitConfig{depth, leaf, strategy, q, seed};
}

}  // namespace

TEST_CASE("best_split_1d examples") {
  SUBCASE("separable step") {
    const std::vector<double> xs{1, 2, 3, 4}, ys{0, 0, 10, 10};
    const auto s = best_split_1d(xs, ys, 1);
    REQUIRE(s);
    CHECK(s->threshold == 2.5);
    CHECK(s->left_mean == doctest::Approx(0.0));
    CHECK(s->right_mean == doctest::Approx(10.0));
    CHECK(s->split_mse == doctest::Approx(0.0));
  }
  SUBCASE("all xs equal") {
    const std::vector<double> xs{2, 2, 2}, ys{1, 5, 9};
    CHECK_FALSE(best_split_1d(xs, ys, 1));
  }
  SUBCASE("three points against enumeration") {
    const std::vector<double> xs{1, 2, 3}, ys{1, 2, 4};
    const auto oracle = brute_force_split(xs, ys, 1);
    REQUIRE(oracle);
    // Frozen from the enumeration: threshold 2.5 leaves residuals (-0.5, 0.5, 0).
    CHECK(oracle->first == 2.5);
    CHECK(oracle->second == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    const auto s = best_split_1d(xs, ys, 1);
    REQUIRE(s);
    CHECK(s->threshold == 2.5);
    CHECK(s->split_mse == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(s->left_mean == doctest::Approx(1.5));
    CHECK(s->right_mean == doctest::Approx(4.0));
  }
  SUBCASE("min_samples_leaf restricts the candidates") {
    const std::vector<double> xs{1, 2, 3, 4, 5, 6}, ys{100, 0, 0, 0, 0, 0};
    CHECK(best_split_1d(xs, ys, 1)->threshold == 1.5);
    CHECK(best_split_1d(xs, ys, 2)->threshold == 2.5);
    CHECK_FALSE(best_split_1d(xs, ys, 4));
  }
  SUBCASE("ties go to the smallest threshold") {
    const std::vector<double> xs{1, 2, 3, 4}, ys{0, 1, 1, 0};
    // Cuts at 1.5 and 3.5 are equally good.
    CHECK(best_split_1d(xs, ys, 1)->threshold == 1.5);
  }
}

TEST_CASE("depth-1 fit equals the exhaustive scan") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 199;
    const std::size_t min_leaf = 1 + rng() % 5;
    Data d = sample_data(n, 1, rng(), 0.5);
    // Duplicate x values exercise the distinct-value rule.
    for (std::size_t i = 0; i + 1 < n; i += 7) d.x[i + 1] = d.x[i];
    const auto oracle = brute_force_split(d.x, d.y, min_leaf);
    const auto split = best_split_1d(d.x, d.y, min_leaf);
    REQUIRE(oracle.has_value() == split.has_value());
    if (!oracle) continue;
    CHECK(std::abs(split->split_mse - oracle->second) <= 1e-12);

    const auto tree = fit_tree(d.view(), d.y, config(1, min_leaf, rng()));
    if (tree.num_leaves() == 2) CHECK(std::abs(training_mse(tree, d.view(), d.y) - oracle->second) <= 1e-12);
  }
}

TEST_CASE("fit_tree examples") {
  SUBCASE("constant response gives one leaf") {
    Data d = sample_data(500, 3, 1);
    std::fill(d.y.begin(), d.y.end(), 4.25);
    const auto tree = fit_tree(d.view(), d.y, config(10, 1, 2));
    CHECK(tree.num_leaves() == 1);
    CHECK(tree.predict(std::vector<double>{0.1, 0.2, 0.3}) == 4.25);
  }
  SUBCASE("step function in 1-D") {
    Data d = sample_data(1000, 1, 9);
    for (std::size_t i = 0; i < d.y.size(); ++i) d.y[i] = d.x[i] > 0.5 ? 1.0 : 0.0;
    const auto tree = fit_tree(d.view(), d.y, config(1, 1, 3));
    double below = 0.0, above = 1.0;
    for (double x : d.x) (x <= 0.5 ? below = std::max(below, x) : above = std::min(above, x));
    const auto& root = tree.nodes()[0];
    REQUIRE_FALSE(root.is_leaf());
    CHECK(root.threshold > below);
    CHECK(root.threshold < above);
    CHECK(tree.nodes()[root.left].value == 0.0);
    CHECK(tree.nodes()[root.right].value == 1.0);
    CHECK(tree.predict(std::vector<double>{0.9}) == 1.0);
    CHECK(tree.predict(std::vector<double>{0.1}) == 0.0);
  }
  SUBCASE("forced midpoint rule") {
    Data d = sample_data(300, 1, 21);
    const double lo = *std::min_element(d.x.begin(), d.x.end());
    const double hi = *std::max_element(d.x.begin(), d.x.end());
    const double q = std::nextafter(1.0, 0.0);
    const auto tree = fit_tree(d.view(), d.y, config(1, 1, 5, q));
    const auto& root = tree.nodes()[0];
    REQUIRE_FALSE(root.is_leaf());
    CHECK(root.threshold == 0.5 * (lo + hi));
    double sl = 0, sr = 0;
    std::size_t nl = 0, nr = 0;
    for (std::size_t i = 0; i < d.x.size(); ++i) (d.x[i] <= root.threshold ? (sl += d.y[i], ++nl) : (sr += d.y[i], ++nr));
    CHECK(tree.nodes()[root.left].value == doctest::Approx(sl / nl).epsilon(1e-12));
    CHECK(tree.nodes()[root.right].value == doctest::Approx(sr / nr).epsilon(1e-12));
  }
  SUBCASE("best-direction strategy finds the informative axis") {
    Data d = sample_data(800, 3, 4);
    for (std::size_t i = 0; i < d.y.size(); ++i) d.y[i] = d.x[i * 3 + 1] > 0.3 ? 2.0 : -1.0;
    const auto tree = fit_tree(d.view(), d.y, config(1, 1, 8, 0.0, SplitStrategy::BestDirectionBestThreshold));
    CHECK(tree.nodes()[0].axis == 1);
    CHECK(training_mse(tree, d.view(), d.y) == 0.0);
  }
}

TEST_CASE("leaf values are the means of the samples inside each leaf box") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t dim = 1 + seed % 4;
    Data d = sample_data(400 + 37 * seed, dim, 1000 + seed);
    const double q = seed % 2 ? 0.3 : 0.0;
    const auto tree = fit_tree(d.view(), d.y, config(2 + seed % 7, 1 + seed % 9, seed, q));
    const auto boxes = leaf_boxes(tree);
    std::map<std::size_t, std::pair<double, std::size_t>> acc;
    for (std::size_t i = 0; i < d.y.size(); ++i) {
      std::size_t hits = 0;
      for (const auto& box : boxes) {
        bool inside = true;
        for (std::size_t k = 0; k < dim; ++k) inside = inside && d.x[i * dim + k] > box.lo[k] && d.x[i * dim + k] <= box.hi[k];
        if (inside) {
          ++hits;
          acc[box.node].first += d.y[i];
          acc[box.node].second += 1;
          CHECK(tree.predict(d.view().row(i)) == tree.nodes()[box.node].value);
        }
      }
      CHECK(hits == 1);  // boxes tile the space
    }
    for (const auto& [node, sum_count] : acc) {
      const double mean = sum_count.first / sum_count.second;
      CHECK(std::abs(tree.nodes()[node].value - mean) <= 1e-10 * std::max(1.0, std::abs(mean)));
      CHECK(tree.nodes()[node].count == sum_count.second);
    }
  }
}

TEST_CASE("min_samples_leaf is enforced") {
  for (std::size_t leaf : {1, 5, 50, 100}) {
    Data d = sample_data(3000, 2, leaf);
    const auto tree = fit_tree(d.view(), d.y, config(30, leaf, 77));
    for (const auto& node : tree.nodes()) {
      if (node.is_leaf()) CHECK(node.count >= leaf);
    }
  }
}

TEST_CASE("training_mse") {
  Data d = sample_data(600, 2, 55);
  SUBCASE("single leaf is the population variance") {
    const auto stump = fit_tree(d.view(), d.y, config(1, 400, 1));
    CHECK(stump.num_leaves() == 1);
    CHECK(training_mse(stump, d.view(), d.y) == doctest::Approx(population_variance(d.y)).epsilon(1e-12));
  }
  SUBCASE("perfect fit") {
    Data step = sample_data(200, 1, 56);
    for (std::size_t i = 0; i < step.y.size(); ++i) step.y[i] = step.x[i] > 0.7 ? 3.0 : 1.0;
    CHECK(training_mse(fit_tree(step.view(), step.y, config(4, 1, 1)), step.view(), step.y) == 0.0);
  }
  SUBCASE("equals the leaf-wise variance decomposition") {
    const auto tree = fit_tree(d.view(), d.y, config(6, 10, 3));
    std::map<std::size_t, std::vector<double>> members;
    for (std::size_t i = 0; i < d.y.size(); ++i) members[tree.leaf_of(d.view().row(i))].push_back(d.y[i]);
    double decomposed = 0.0;
    for (const auto& [leaf, ys] : members) decomposed += population_variance(ys) * ys.size() / d.y.size();
    CHECK(std::abs(training_mse(tree, d.view(), d.y) - decomposed) <= 1e-12);
  }
}

TEST_CASE("training MSE never increases with the depth budget") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Data d = sample_data(2000, 3, 300 + seed);
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t depth = 1; depth <= 12; ++depth) {
      const double mse = training_mse(fit_tree(d.view(), d.y, config(depth, 5, seed, 0.2)), d.view(), d.y);
      CHECK(mse <= previous);
      previous = mse;
    }
  }
}

TEST_CASE("determinism") {
  Data d = sample_data(1000, 4, 8);
  const auto a = fit_tree(d.view(), d.y, config(8, 3, 99, 0.25));
  CHECK(a == fit_tree(d.view(), d.y, config(8, 3, 99, 0.25)));
  CHECK_FALSE(a == fit_tree(d.view(), d.y, config(8, 3, 100, 0.25)));
  CHECK(a.to_text() == fit_tree(d.view(), d.y, config(8, 3, 99, 0.25)).to_text());
}

TEST_CASE("maximum leaf width shrinks with depth when midpoint cuts are allowed") {
  // Average, over seeds, of the widest leaf interval inside [0, 1].
  const std::size_t seeds = 60;
  std::vector<double> mean_width;
  for (std::size_t depth = 1; depth <= 6; ++depth) {
    double total = 0.0;
    for (std::size_t s = 0; s < seeds; ++s) {
      Data d = sample_data(2000, 1, 5000 + s, 1.0);
      const auto tree = fit_tree(d.view(), d.y, config(depth, 1, s, 0.5));
      double widest = 0.0;
      for (const auto& box : leaf_boxes(tree)) widest = std::max(widest, std::min(box.hi[0], 1.0) - std::max(box.lo[0], 0.0));
      total += widest;
    }
    mean_width.push_back(total / seeds);
  }
  for (std::size_t i = 1; i < mean_width.size(); ++i) CHECK(mean_width[i] < mean_width[i - 1]);
}

TEST_CASE("errors and text dump") {
  Data d = sample_data(100, 2, 1);
  CHECK_THROWS(fit_tree(d.view(), d.y, config(0, 1, 1)));
  CHECK_THROWS(fit_tree(d.view(), d.y, config(3, 0, 1)));
  CHECK_THROWS(fit_tree(d.view(), d.y, config(3, 1, 1, 1.0)));
  std::vector<double> short_y(d.y.begin(), d.y.end() - 1);
  CHECK_THROWS_AS(fit_tree(d.view(), short_y, config(3, 1, 1)), DimensionMismatch);
  const auto tree = fit_tree(d.view(), d.y, config(2, 1, 1));
  CHECK_THROWS_AS(tree.predict(std::vector<double>{0.5}), DimensionMismatch);
  const auto text = tree.to_text();
  CHECK(text.rfind("split axis=", 0) == 0);
  CHECK(text.find("\n  ") != std::string::npos);
  CHECK(text.find("leaf value=") != std::string::npos);
}
