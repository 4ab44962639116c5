#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bermudan/ensemble.hpp"
#include "bermudan/market_models.hpp"
#include "bermudan/payoffs.hpp"

namespace bermudan {

/// Continuation model for one exercise date t_j, 1 <= j <= N-1.
struct DatePolicy {
  /// Empty when no path was in the money at fit time; such a date never
  /// triggers exercise.
  std::optional<Regressor> continuation;
  std::size_t training_samples = 0;
  double training_mse = 0.0;
  /// True when the in-the-money set was too small for the regressor and all
  /// paths were used instead.
  bool used_all_paths = false;
};

/// Stopping rule: exercise at the first date j in 1..N-1 where the option is
/// in the money and z_j >= continuation_j(state), else at t_N.
class PolicyModel {
 public:
  PolicyModel(TimeGrid grid, std::size_t dim, RegressorSpec spec, bool itm_filter, std::vector<DatePolicy> dates)
      : grid_(std::move(grid)), dim_(dim), spec_(std::move(spec)), itm_filter_(itm_filter), dates_(std::move(dates)) {}

  /// Policy that never exercises before maturity.
  static PolicyModel hold_to_maturity(TimeGrid grid, std::size_t dim);

  const TimeGrid& grid() const { return grid_; }
  std::size_t dim() const { return dim_; }
  const RegressorSpec& spec() const { return spec_; }
  bool itm_filter() const { return itm_filter_; }
  /// Entry j-1 belongs to date t_j.
  const std::vector<DatePolicy>& dates() const { return dates_; }

  /// Exercise decision at date 1 <= j <= N-1 given the discounted exercise
  /// value and the state at t_j.
  bool exercise(std::size_t date, double z, bool itm, std::span<const double> state) const;

 private:
  TimeGrid grid_;
  std::size_t dim_;
  RegressorSpec spec_;
  bool itm_filter_;
  std::vector<DatePolicy> dates_;
};

/// Backward pass j = N-1 .. 1 regressing realized discounted payoffs on the
/// state at t_j. The regressor at date j uses the seed derive_seed(seed, j).
PolicyModel fit_policy(const PathSet& paths, const CashflowMatrix& cashflows, const RegressorSpec& spec,
                       bool itm_filter, std::uint64_t seed, unsigned workers = 1);

struct PricingResult {
  double price = 0.0;  // max(immediate_z0, mean_stopped_payoff)
  double std_error = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double immediate_z0 = 0.0;
  double mean_stopped_payoff = 0.0;
  /// Immediate exercise beats the continuation estimate; std_error is 0.
  bool z0_dominates = false;
  std::size_t resim_paths = 0;
  std::size_t fit_paths = 0;
  std::uint64_t fit_seed = 0;
  std::uint64_t resim_seed = 0;
  double fit_seconds = 0.0;
  double price_seconds = 0.0;
};

/// Forward pass on paths independent of the fitting paths.
PricingResult price(const PolicyModel& policy, const PathSet& fresh_paths, const CashflowMatrix& fresh_cashflows,
                    unsigned workers = 1);

/// Per-path stopped discounted payoffs Z_{tau_1} of the forward pass.
std::vector<double> stopped_payoffs(const PolicyModel& policy, const PathSet& paths, const CashflowMatrix& cashflows,
                                    unsigned workers = 1);

/// Resimulates `num_paths` fresh paths in blocks (never holding them all)
/// and prices every policy on the same paths. Equal, path for path, to
/// price() on simulate(model, grid, num_paths, seed).
std::vector<PricingResult> price_resimulated(std::span<const PolicyModel* const> policies, const MarketModel& model,
                                             const Payoff& payoff, std::size_t num_paths, std::uint64_t seed,
                                             unsigned workers = 1);

/// Sample statistics of stopped payoffs combined with max(Z_0, .).
PricingResult summarize(std::span<const double> stopped, double immediate_z0);

struct EngineOptions {
  std::size_t fit_paths = 100'000;
  std::size_t resim_paths = 100'000;
  bool itm_filter = true;
  std::uint64_t seed = 0;
  unsigned workers = 1;

  std::uint64_t fit_seed() const;
  std::uint64_t resim_seed() const;
  std::uint64_t policy_seed() const;
};

/// simulate -> cashflows -> fit_policy -> fresh simulate -> price.
PricingResult fit_and_price(const MarketModel& model, const Payoff& payoff, const TimeGrid& grid,
                            const RegressorSpec& spec, const EngineOptions& options);

}  // namespace bermudan
