#include "bermudan/lsm_engine.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "bermudan/errors.hpp"
#include "bermudan/parallel.hpp"
#include "bermudan/random.hpp"

namespace bermudan {

PolicyModel PolicyModel::hold_to_maturity(TimeGrid grid, std::size_t dim) {
  std::vector<DatePolicy> dates(grid.num_dates() - 1);
  return PolicyModel(std::move(grid), dim, PolynomialSpec{0}, true, std::move(dates));
}

bool PolicyModel::exercise(std::size_t date, double z, bool itm, std::span<const double> state) const {
  if (!itm) return false;
  const auto& entry = dates_.at(date - 1);
  if (!entry.continuation) return false;
  return z >= entry.continuation->predict(state);
}

PolicyModel fit_policy(const PathSet& paths, const CashflowMatrix& cashflows, const RegressorSpec& spec,
                       bool itm_filter, std::uint64_t seed, unsigned workers) {
  const std::size_t m = paths.num_paths();
  const std::size_t n = paths.grid().num_dates();
  const std::size_t d = paths.dim();
  if (m < 1) throw InsufficientSamples("fit_policy: no paths");
  if (cashflows.num_paths() != m || cashflows.num_dates() != n) {
    throw DimensionMismatch("fit_policy: cashflows do not match the path set");
  }

  std::vector<double> realized(m);
  for (std::size_t p = 0; p < m; ++p) realized[p] = cashflows.z(p, n);

  std::vector<DatePolicy> dates(n > 0 ? n - 1 : 0);
  std::vector<std::size_t> rows;
  std::vector<double> x, y;
  const std::size_t need = minimum_samples(spec, d);
  for (std::size_t j = n; j-- > 1;) {
    rows.clear();
    for (std::size_t p = 0; p < m; ++p) {
      if (!itm_filter || cashflows.itm(p, j)) rows.push_back(p);
    }
    DatePolicy& entry = dates[j - 1];
    if (rows.empty()) continue;  // nothing in the money: never exercise at t_j
    if (rows.size() < need) {
      rows.resize(m);
      for (std::size_t p = 0; p < m; ++p) rows[p] = p;
      entry.used_all_paths = true;
    }

    x.resize(rows.size() * d);
    y.resize(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto s = paths.state(rows[k], j);
      std::copy(s.begin(), s.end(), x.begin() + static_cast<std::ptrdiff_t>(k * d));
      y[k] = realized[rows[k]];
    }
    const SampleView view(x, d);
    Regressor regressor = fit_regressor(spec, view, y, derive_seed(seed, j), workers);

    std::vector<double> fitted(rows.size());
    parallel_for(rows.size(), workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t k = begin; k < end; ++k) fitted[k] = regressor.predict(view.row(k));
    });
    double sse = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      sse += (y[k] - fitted[k]) * (y[k] - fitted[k]);
      const std::size_t p = rows[k];
      if (cashflows.itm(p, j) && cashflows.z(p, j) >= fitted[k]) realized[p] = cashflows.z(p, j);
    }
    entry.training_samples = rows.size();
    entry.training_mse = sse / static_cast<double>(rows.size());
    entry.continuation.emplace(std::move(regressor));
  }
  return PolicyModel(paths.grid(), d, spec, itm_filter, std::move(dates));
}

std::vector<double> stopped_payoffs(const PolicyModel& policy, const PathSet& paths, const CashflowMatrix& cashflows,
                                    unsigned workers) {
  const std::size_t n = policy.grid().num_dates();
  if (!(paths.grid() == policy.grid())) throw DimensionMismatch("price: path grid differs from the policy grid");
  if (paths.dim() != policy.dim()) throw DimensionMismatch("price: path dimension differs from the policy");
  if (cashflows.num_paths() != paths.num_paths() || cashflows.num_dates() != n) {
    throw DimensionMismatch("price: cashflows do not match the path set");
  }
  std::vector<double> out(paths.num_paths());
  parallel_for(paths.num_paths(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      double value = cashflows.z(p, n);
      for (std::size_t j = 1; j < n; ++j) {
        if (policy.exercise(j, cashflows.z(p, j), cashflows.itm(p, j), paths.state(p, j))) {
          value = cashflows.z(p, j);
          break;
        }
      }
      out[p] = value;
    }
  });
  return out;
}

PricingResult summarize(std::span<const double> stopped, double immediate_z0) {
  const std::size_t m = stopped.size();
  if (m == 0) throw InsufficientSamples("summarize: no resimulated paths");
  PricingResult result;
  result.resim_paths = m;
  result.mean_stopped_payoff = pairwise_sum(stopped.data(), m) / static_cast<double>(m);
  std::vector<double> sq(m);
  for (std::size_t p = 0; p < m; ++p) {
    const double e = stopped[p] - result.mean_stopped_payoff;
    sq[p] = e * e;
  }
  const double variance = m > 1 ? pairwise_sum(sq.data(), m) / static_cast<double>(m - 1) : 0.0;
  result.std_error = std::sqrt(variance / static_cast<double>(m));
  result.immediate_z0 = immediate_z0;
  result.z0_dominates = immediate_z0 > result.mean_stopped_payoff;
  if (result.z0_dominates) {
    result.price = immediate_z0;
    result.std_error = 0.0;
  } else {
    result.price = result.mean_stopped_payoff;
  }
  result.ci_lo = result.mean_stopped_payoff - 1.96 * result.std_error;
  result.ci_hi = result.mean_stopped_payoff + 1.96 * result.std_error;
  return result;
}

PricingResult price(const PolicyModel& policy, const PathSet& fresh_paths, const CashflowMatrix& fresh_cashflows,
                    unsigned workers) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> stopped = stopped_payoffs(policy, fresh_paths, fresh_cashflows, workers);
  PricingResult result = summarize(stopped, fresh_cashflows.z(0, 0));
  result.resim_seed = fresh_paths.seed();
  result.price_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<PricingResult> price_resimulated(std::span<const PolicyModel* const> policies, const MarketModel& model,
                                             const Payoff& payoff, std::size_t num_paths, std::uint64_t seed,
                                             unsigned workers) {
  constexpr std::size_t kBlock = 8192;
  const auto start = std::chrono::steady_clock::now();
  if (policies.empty()) return {};
  const TimeGrid& grid = policies.front()->grid();
  const double r = short_rate(model);
  std::vector<std::vector<double>> stopped(policies.size(), std::vector<double>(num_paths));
  double z0 = 0.0;
  for (std::size_t first = 0; first < num_paths; first += kBlock) {
    const std::size_t count = std::min(kBlock, num_paths - first);
    const PathSet block = simulate(model, grid, count, seed, workers, first);
    const CashflowMatrix cash = cashflows(payoff, block, r, workers);
    if (first == 0) z0 = cash.z(0, 0);
    for (std::size_t k = 0; k < policies.size(); ++k) {
      const auto values = stopped_payoffs(*policies[k], block, cash, workers);
      std::copy(values.begin(), values.end(), stopped[k].begin() + static_cast<std::ptrdiff_t>(first));
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::vector<PricingResult> results;
  results.reserve(policies.size());
  for (const auto& values : stopped) {
    PricingResult result = summarize(values, z0);
    result.resim_seed = seed;
    result.price_seconds = seconds / static_cast<double>(policies.size());
    results.push_back(result);
  }
  return results;
}

std::uint64_t EngineOptions::fit_seed() const { return derive_seed(seed, 0); }
std::uint64_t EngineOptions::resim_seed() const { return derive_seed(seed, 1); }
std::uint64_t EngineOptions::policy_seed() const { return derive_seed(seed, 2); }

PricingResult fit_and_price(const MarketModel& model, const Payoff& payoff, const TimeGrid& grid,
                            const RegressorSpec& spec, const EngineOptions& options) {
  payoff.validate();
  const auto start = std::chrono::steady_clock::now();
  const PathSet fit_paths = simulate(model, grid, options.fit_paths, options.fit_seed(), options.workers);
  const CashflowMatrix fit_cash = cashflows(payoff, fit_paths, short_rate(model), options.workers);
  const PolicyModel policy =
      fit_policy(fit_paths, fit_cash, spec, options.itm_filter, options.policy_seed(), options.workers);
  const double fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const PolicyModel* policies[] = {&policy};
  PricingResult result =
      price_resimulated(policies, model, payoff, options.resim_paths, options.resim_seed(), options.workers).front();
  result.fit_paths = options.fit_paths;
  result.fit_seed = options.fit_seed();
  result.fit_seconds = fit_seconds;
  return result;
}

}  // namespace bermudan
