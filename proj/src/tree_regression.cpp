#include "bermudan/tree_regression.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "bermudan/random.hpp"

namespace bermudan {
namespace {

using Pair = std::pair<double, double>;  // (x along the axis, centred y)

struct Cut {
  double threshold = 0.0;
  double gain = 0.0;  // reduction of the node's sum of squared residuals
  std::size_t left_count = 0;
  double left_sum = 0.0;  // sum of centred responses on the left
};

// Scans sorted (x, centred y) pairs. With centred responses the sum of
// squared residuals after a cut is node_sse - S_L^2 * n / (n_L * n_R).
std::optional<Cut> scan_sorted(std::span<const Pair> sorted, std::size_t min_leaf) {
  const std::size_t n = sorted.size();
  const std::size_t lo = std::max<std::size_t>(min_leaf, 1);
  if (n < 2 * lo) return std::nullopt;
  std::optional<Cut> best;
  double s_left = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    s_left += sorted[i].second;
    const std::size_t n_left = i + 1;
    const std::size_t n_right = n - n_left;
    if (n_left < lo) continue;
    if (n_right < lo) break;
    if (!(sorted[i].first < sorted[i + 1].first)) continue;
    const double gain = s_left * s_left * static_cast<double>(n) /
                        (static_cast<double>(n_left) * static_cast<double>(n_right));
    if (!best || gain > best->gain) {
      best = Cut{0.5 * (sorted[i].first + sorted[i + 1].first), gain, n_left, s_left};
    }
  }
  return best;
}

std::optional<Cut> midpoint_cut(std::span<const Pair> sorted, std::size_t min_leaf) {
  const std::size_t n = sorted.size();
  const double lo = sorted.front().first;
  const double hi = sorted.back().first;
  if (!(lo < hi)) return std::nullopt;
  const double threshold = 0.5 * (lo + hi);
  Cut cut{threshold, 0.0, 0, 0.0};
  for (const auto& [x, c] : sorted) {
    if (x > threshold) break;
    ++cut.left_count;
    cut.left_sum += c;
  }
  const std::size_t n_right = n - cut.left_count;
  if (cut.left_count < std::max<std::size_t>(min_leaf, 1) || n_right < std::max<std::size_t>(min_leaf, 1)) {
    return std::nullopt;
  }
  cut.gain = cut.left_sum * cut.left_sum * static_cast<double>(n) /
             (static_cast<double>(cut.left_count) * static_cast<double>(n_right));
  return cut;
}

class Builder {
 public:
  Builder(const SampleView& x, std::span<const double> y, const TreeFitConfig& config)
      : x_(x), y_(y), config_(config) {}

  RegressionTree build(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    scratch_.resize(rows_.size());
    if (!rows_.empty()) grow(0, rows_.size(), 0, config_.seed);
    if (nodes_.empty()) nodes_.push_back({});
    return RegressionTree(std::move(nodes_), x_.dim(), depth_);
  }

 private:
  std::int32_t grow(std::size_t begin, std::size_t end, std::size_t depth, std::uint64_t node_seed) {
    const std::size_t n = end - begin;
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({});

    double sum = 0.0;
    double y_min = y_[rows_[begin]];
    double y_max = y_min;
    for (std::size_t k = begin; k < end; ++k) {
      const double v = y_[rows_[k]];
      sum += v;
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
    const double mean = sum / static_cast<double>(n);
    nodes_[id].value = mean;
    nodes_[id].count = n;
    depth_ = std::max(depth_, depth);

    if (depth >= config_.max_depth || n < 2 * config_.min_samples_leaf || y_min == y_max) return id;

    double node_sse = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      const double c = y_[rows_[k]] - mean;
      node_sse += c * c;
    }

    Stream rng(node_seed);
    std::size_t axis = 0;
    std::optional<Cut> cut;
    const std::span<Pair> pairs(scratch_.data(), n);
    if (config_.split_strategy == SplitStrategy::RandomDirectionBestThreshold) {
      axis = std::uniform_int_distribution<std::size_t>(0, x_.dim() - 1)(rng);
      sort_axis(begin, end, axis, mean, pairs);
      cut = scan_sorted(pairs, config_.min_samples_leaf);
    } else {
      for (std::size_t k = 0; k < x_.dim(); ++k) {
        sort_axis(begin, end, k, mean, pairs);
        auto candidate = scan_sorted(pairs, config_.min_samples_leaf);
        if (candidate && (!cut || candidate->gain > cut->gain)) {
          cut = candidate;
          axis = k;
        }
      }
      if (cut) sort_axis(begin, end, axis, mean, pairs);
    }
    if (config_.midpoint_prob > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < config_.midpoint_prob) {
      // Falls back to the optimal cut when the midpoint is inadmissible.
      if (auto mid = midpoint_cut(pairs, config_.min_samples_leaf)) cut = mid;
    }
    if (!cut) return id;
    const double split_sse = node_sse - cut->gain;
    if (!(cut->gain > 0.0) || !(split_sse < node_sse * (1.0 - 1e-12))) return id;

    const double threshold = cut->threshold;
    const auto middle = std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                       rows_.begin() + static_cast<std::ptrdiff_t>(end),
                                       [&](std::size_t r) { return x_(r, axis) <= threshold; });
    const auto mid = static_cast<std::size_t>(middle - rows_.begin());

    nodes_[id].axis = static_cast<int>(axis);
    nodes_[id].threshold = threshold;
    const auto left = grow(begin, mid, depth + 1, derive_seed(node_seed, 0));
    const auto right = grow(mid, end, depth + 1, derive_seed(node_seed, 1));
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void sort_axis(std::size_t begin, std::size_t end, std::size_t axis, double mean, std::span<Pair> out) const {
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t r = rows_[k];
      out[k - begin] = {x_(r, axis), y_[r] - mean};
    }
    std::sort(out.begin(), out.end(), [](const Pair& a, const Pair& b) { return a.first < b.first; });
  }

  const SampleView& x_;
  std::span<const double> y_;
  const TreeFitConfig& config_;
  std::vector<std::size_t> rows_;
  std::vector<Pair> scratch_;
  std::vector<RegressionTree::Node> nodes_;
  std::size_t depth_ = 0;
};

}  // namespace

void TreeFitConfig::validate() const {
  if (max_depth < 1) throw std::invalid_argument("TreeFitConfig: max_depth must be >= 1");
  if (min_samples_leaf < 1) throw std::invalid_argument("TreeFitConfig: min_samples_leaf must be >= 1");
  if (!(midpoint_prob >= 0.0 && midpoint_prob < 1.0)) {
    throw std::invalid_argument("TreeFitConfig: midpoint_prob must lie in [0, 1)");
  }
}

std::string TreeFitConfig::describe() const {
  std::ostringstream out;
  out << "tree(depth=" << max_depth << ",leaf=" << min_samples_leaf;
  if (split_strategy == SplitStrategy::BestDirectionBestThreshold) out << ",split=best";
  if (midpoint_prob > 0.0) out << ",q=" << midpoint_prob;
  out << ")";
  return out.str();
}

std::optional<Split1D> best_split_1d(std::span<const double> xs, std::span<const double> ys,
                                     std::size_t min_samples_leaf) {
  if (xs.size() != ys.size()) throw DimensionMismatch("best_split_1d: xs and ys lengths differ");
  const std::size_t n = xs.size();
  if (n == 0) return std::nullopt;
  const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(n);
  std::vector<Pair> pairs(n);
  double node_sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pairs[i] = {xs[i], ys[i] - mean};
    node_sse += pairs[i].second * pairs[i].second;
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.first < b.first; });
  const auto cut = scan_sorted(pairs, min_samples_leaf);
  if (!cut) return std::nullopt;
  const double n_left = static_cast<double>(cut->left_count);
  const double n_right = static_cast<double>(n - cut->left_count);
  return Split1D{cut->threshold, mean + cut->left_sum / n_left, mean - cut->left_sum / n_right,
                 std::max(node_sse - cut->gain, 0.0) / static_cast<double>(n)};
}

double RegressionTree::predict(std::span<const double> x) const { return nodes_[leaf_of(x)].value; }

std::size_t RegressionTree::leaf_of(std::span<const double> x) const {
  if (x.size() != dim_) throw DimensionMismatch("RegressionTree: query dimension differs from training");
  std::size_t id = 0;
  while (!nodes_[id].is_leaf()) {
    const Node& node = nodes_[id];
    id = static_cast<std::size_t>(x[static_cast<std::size_t>(node.axis)] <= node.threshold ? node.left : node.right);
  }
  return id;
}

std::size_t RegressionTree::num_leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

std::string RegressionTree::to_text() const {
  std::ostringstream out;
  out.precision(17);
  auto emit = [&](auto&& self, std::size_t id, std::size_t indent) -> void {
    const Node& node = nodes_[id];
    out << std::string(indent, ' ');
    if (node.is_leaf()) {
      out << "leaf value=" << node.value << " count=" << node.count << '\n';
      return;
    }
    out << "split axis=" << node.axis << " threshold=" << node.threshold << " count=" << node.count
        << " value=" << node.value << '\n';
    self(self, static_cast<std::size_t>(node.left), indent + 2);
    self(self, static_cast<std::size_t>(node.right), indent + 2);
  };
  emit(emit, 0, 0);
  return out.str();
}

RegressionTree fit_tree(const SampleView& x, std::span<const double> y, const TreeFitConfig& config) {
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit_tree(x, y, std::move(rows), config);
}

RegressionTree fit_tree(const SampleView& x, std::span<const double> y, std::vector<std::size_t> rows,
                        const TreeFitConfig& config) {
  config.validate();
  if (x.rows() != y.size()) throw DimensionMismatch("fit_tree: x rows and y length differ");
  if (rows.empty()) throw InsufficientSamples("fit_tree: no training rows");
  for (std::size_t r : rows) {
    if (r >= x.rows()) throw std::out_of_range("fit_tree: row index out of range");
  }
  return Builder(x, y, config).build(std::move(rows));
}

double training_mse(const RegressionTree& tree, const SampleView& x, std::span<const double> y) {
  if (x.rows() != y.size()) throw DimensionMismatch("training_mse: x rows and y length differ");
  if (y.empty()) return 0.0;
  double sse = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y[i] - tree.predict(x.row(i));
    sse += e * e;
  }
  return sse / static_cast<double>(y.size());
}

}  // namespace bermudan
