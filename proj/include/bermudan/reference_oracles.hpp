#pragma once

#include <cstddef>

#include "bermudan/market_models.hpp"

namespace bermudan {

double bs_european_put(double s0, double strike, double r, double sigma, double dividend, double maturity);
double bs_european_call(double s0, double strike, double r, double sigma, double dividend, double maturity);

enum class OptionType { Put, Call };

struct LatticeConfig {
  /// Total binomial steps; a multiple of N maps uniform exercise dates
  /// exactly onto lattice levels.
  std::size_t steps = 20'000;
};

/// Cox-Ross-Rubinstein lattice for a one-asset Bermudan option exercisable
/// at every grid date including t_0. Each date is snapped to the nearest
/// lattice level; throws InvalidLatticeMapping if two dates share a level.
double crr_bermudan_1d(double s0, double strike, double r, double sigma, double dividend, const TimeGrid& grid,
                       OptionType type, const LatticeConfig& config = {});

}  // namespace bermudan
