#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace bermudan {

/// Exercise dates t_0 = 0 < t_1 < ... < t_N = T.
class TimeGrid {
 public:
  /// N equally spaced dates on (0, T].
  static TimeGrid uniform(double maturity, std::size_t num_dates, std::size_t substeps_per_interval = 10);

  /// Arbitrary dates; must start at 0 and be strictly increasing.
  explicit TimeGrid(std::vector<double> dates, std::size_t substeps_per_interval = 10);

  std::size_t num_dates() const { return dates_.size() - 1; }  // N
  double maturity() const { return dates_.back(); }
  double date(std::size_t j) const { return dates_[j]; }
  const std::vector<double>& dates() const { return dates_; }
  std::size_t substeps() const { return substeps_; }

  bool operator==(const TimeGrid&) const = default;

 private:
  std::vector<double> dates_;
  std::size_t substeps_;
};

/// Dense row-major d x d matrix.
struct SquareMatrix {
  std::size_t dim = 0;
  std::vector<double> values;

  static SquareMatrix identity(std::size_t d);
  /// Unit diagonal, constant off-diagonal correlation.
  static SquareMatrix constant_correlation(std::size_t d, double rho);

  double operator()(std::size_t i, std::size_t j) const { return values[i * dim + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * dim + j]; }
};

struct BlackScholesParams {
  std::vector<double> s0;
  double r = 0.0;
  std::vector<double> sigma;
  std::vector<double> dividend;
  SquareMatrix corr;

  std::size_t dim() const { return s0.size(); }

  /// d identical assets with constant pairwise correlation.
  static BlackScholesParams symmetric(std::size_t d, double s0, double r, double sigma, double dividend,
                                      double rho);
  /// Throws DimensionMismatch or std::invalid_argument.
  void validate() const;
};

/// One-asset Heston model; `v0` and `theta` are variances.
struct HestonParams {
  double s0 = 100.0;
  double v0 = 0.04;
  double kappa = 0.0;
  double theta = 0.04;
  double xi = 0.0;
  double rho = 0.0;
  double r = 0.0;

  void validate() const;
};

using MarketModel = std::variant<BlackScholesParams, HestonParams>;

double short_rate(const MarketModel& model);
std::size_t dimension(const MarketModel& model);

/// Simulated spot states, M paths x (N+1) dates x d assets, contiguous.
class PathSet {
 public:
  PathSet(TimeGrid grid, std::size_t num_paths, std::size_t dim, std::uint64_t seed, std::size_t first_path = 0);

  const TimeGrid& grid() const { return grid_; }
  std::size_t num_paths() const { return num_paths_; }
  std::size_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }
  /// Global index of path 0 within the stream of paths generated by `seed`.
  std::size_t first_path() const { return first_path_; }

  std::span<const double> state(std::size_t path, std::size_t date) const {
    return {values_.data() + offset(path, date), dim_};
  }
  std::span<double> state(std::size_t path, std::size_t date) {
    return {values_.data() + offset(path, date), dim_};
  }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const PathSet&) const = default;

 private:
  std::size_t offset(std::size_t path, std::size_t date) const {
    return (path * (grid_.num_dates() + 1) + date) * dim_;
  }

  TimeGrid grid_;
  std::size_t num_paths_;
  std::size_t dim_;
  std::uint64_t seed_;
  std::size_t first_path_;
  std::vector<double> values_;
};

/// Lower-triangular L with L L^T = corr. Pivots in [-1e-12, 0] are clamped
/// to zero; anything more negative throws NotPositiveSemiDefinite.
SquareMatrix correlation_factor(const SquareMatrix& corr);

/// Exact log-normal transition between exercise dates. Global path m uses
/// the stream derive_seed(seed, m), so output does not depend on `workers`,
/// and a block starting at `first_path` equals the same rows of a full run.
PathSet simulate_black_scholes(const BlackScholesParams& params, const TimeGrid& grid, std::size_t num_paths,
                               std::uint64_t seed, unsigned workers = 1, std::size_t first_path = 0);

/// Full-truncation Euler on (log S, v) with grid.substeps() steps per
/// exercise interval.
PathSet simulate_heston(const HestonParams& params, const TimeGrid& grid, std::size_t num_paths,
                        std::uint64_t seed, unsigned workers = 1, std::size_t first_path = 0);

PathSet simulate(const MarketModel& model, const TimeGrid& grid, std::size_t num_paths, std::uint64_t seed,
                 unsigned workers = 1, std::size_t first_path = 0);

}  // namespace bermudan
