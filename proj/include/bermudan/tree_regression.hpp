#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bermudan/samples.hpp"

namespace bermudan {

enum class SplitStrategy {
  /// Axis drawn uniformly at each node, MSE-optimal threshold on that axis.
  RandomDirectionBestThreshold,
  /// Every axis scanned; the lowest split MSE wins.
  BestDirectionBestThreshold,
};

struct TreeFitConfig {
  std::size_t max_depth = 5;
  std::size_t min_samples_leaf = 1;
  SplitStrategy split_strategy = SplitStrategy::RandomDirectionBestThreshold;
  /// Probability of cutting at the midpoint of the node's sample range.
  double midpoint_prob = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  std::string describe() const;
};

struct Split1D {
  double threshold;
  double left_mean;
  double right_mean;
  double split_mse;  // (1/n) * sum of squared residuals after the split
};

/// Least-squares optimal single cut of (xs, ys). Thresholds are midpoints
/// between consecutive distinct sorted xs; equal-MSE ties go to the smaller
/// threshold. Empty when no cut leaves min_samples_leaf on both sides.
std::optional<Split1D> best_split_1d(std::span<const double> xs, std::span<const double> ys,
                                     std::size_t min_samples_leaf);

/// Binary tree of axis-aligned cuts with constant leaves. A sample goes left
/// iff x[axis] <= threshold. Immutable once fitted.
class RegressionTree {
 public:
  struct Node {
    int axis = -1;  // -1 for leaves
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;  // mean response of training samples reaching the node
    std::size_t count = 0;

    bool is_leaf() const { return axis < 0; }
    bool operator==(const Node&) const = default;
  };

  RegressionTree(std::vector<Node> nodes, std::size_t dim, std::size_t depth)
      : nodes_(std::move(nodes)), dim_(dim), depth_(depth) {}

  double predict(std::span<const double> x) const;
  /// Index into nodes() of the leaf containing x.
  std::size_t leaf_of(std::span<const double> x) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t dim() const { return dim_; }
  std::size_t depth() const { return depth_; }
  std::size_t num_leaves() const;

  /// Indented text dump, one node per line:
  ///   split axis=<k> threshold=<x*> count=<n> value=<mean>
  ///   leaf value=<alpha> count=<n>
  /// Children follow their parent indented by two spaces, left first.
  std::string to_text() const;

  bool operator==(const RegressionTree&) const = default;

 private:
  std::vector<Node> nodes_;
  std::size_t dim_;
  std::size_t depth_;
};

/// Grows a tree top-down. Every node draws its randomness from a stream
/// derived from its position in the tree, so raising max_depth only extends
/// leaves of the shallower tree.
RegressionTree fit_tree(const SampleView& x, std::span<const double> y, const TreeFitConfig& config);

/// Same, restricted to the given rows of x (duplicates allowed, as in a
/// bootstrap draw).
RegressionTree fit_tree(const SampleView& x, std::span<const double> y, std::vector<std::size_t> rows,
                        const TreeFitConfig& config);

double training_mse(const RegressionTree& tree, const SampleView& x, std::span<const double> y);

}  // namespace bermudan
