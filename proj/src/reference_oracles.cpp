#include "bermudan/reference_oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "bermudan/errors.hpp"

namespace bermudan {
namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double intrinsic(OptionType type, double s, double k) { return type == OptionType::Put ? std::max(k - s, 0.0) : std::max(s - k, 0.0); }

double bs_european(OptionType type, double s0, double k, double r, double sigma, double q, double t) {
  if (t <= 0.0) return intrinsic(type, s0, k);
  if (sigma <= 0.0) return std::exp(-r * t) * intrinsic(type, s0 * std::exp((r - q) * t), k);
  const double vol = sigma * std::sqrt(t);
  const double d1 = (std::log(s0 / k) + (r - q + 0.5 * sigma * sigma) * t) / vol;
  const double d2 = d1 - vol;
  if (type == OptionType::Put) return k * std::exp(-r * t) * norm_cdf(-d2) - s0 * std::exp(-q * t) * norm_cdf(-d1);
  return s0 * std::exp(-q * t) * norm_cdf(d1) - k * std::exp(-r * t) * norm_cdf(d2);
}

}  // namespace

double bs_european_put(double s0, double strike, double r, double sigma, double dividend, double maturity) {
  return bs_european(OptionType::Put, s0, strike, r, sigma, dividend, maturity);
}

double bs_european_call(double s0, double strike, double r, double sigma, double dividend, double maturity) {
  return bs_european(OptionType::Call, s0, strike, r, sigma, dividend, maturity);
}

double crr_bermudan_1d(double s0, double strike, double r, double sigma, double dividend, const TimeGrid& grid,
                       OptionType type, const LatticeConfig& config) {
  const std::size_t steps = config.steps;
  const std::size_t n = grid.num_dates();
  if (steps < n) throw InvalidLatticeMapping("crr_bermudan_1d: fewer lattice steps than exercise dates");
  const double maturity = grid.maturity();
  const double dt = maturity / static_cast<double>(steps);

  std::vector<char> exercisable(steps + 1, 0);
  std::size_t previous = 0;
  for (std::size_t j = 0; j <= n; ++j) {
    const auto level = static_cast<std::size_t>(std::llround(grid.date(j) / dt));
    if (j > 0 && level <= previous) {
      throw InvalidLatticeMapping("crr_bermudan_1d: exercise dates " + std::to_string(j - 1) + " and " +
                                  std::to_string(j) + " map to the same lattice level");
    }
    exercisable[std::min(level, steps)] = 1;
    previous = level;
  }

  const double disc = std::exp(-r * dt);
  if (sigma <= 0.0) {
    // Degenerate lattice: a single deterministic path.
    const double growth = std::exp((r - dividend) * dt);
    double best = 0.0;
    double s = s0;
    for (std::size_t level = 0; level <= steps; ++level) {
      if (exercisable[level]) best = std::max(best, std::pow(disc, static_cast<double>(level)) * intrinsic(type, s, strike));
      s *= growth;
    }
    return best;
  }

  const double up = std::exp(sigma * std::sqrt(dt));
  const double down = 1.0 / up;
  const double p = (std::exp((r - dividend) * dt) - down) / (up - down);
  if (!(p > 0.0 && p < 1.0)) throw InvalidLatticeMapping("crr_bermudan_1d: risk-neutral probability outside (0, 1)");

  std::vector<double> values(steps + 1);
  auto apply_exercise = [&](std::size_t level) {
    double s = s0 * std::pow(up, static_cast<double>(level));
    for (std::size_t k = 0; k <= level; ++k) {
      values[k] = std::max(values[k], intrinsic(type, s, strike));
      s *= down * down;
    }
  };
  std::fill(values.begin(), values.end(), 0.0);
  apply_exercise(steps);
  for (std::size_t level = steps; level-- > 0;) {
    for (std::size_t k = 0; k <= level; ++k) values[k] = disc * (p * values[k] + (1.0 - p) * values[k + 1]);
    if (exercisable[level]) apply_exercise(level);
  }
  return values[0];
}

}  // namespace bermudan
