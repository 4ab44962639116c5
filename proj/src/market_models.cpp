#include "bermudan/market_models.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "bermudan/errors.hpp"
#include "bermudan/parallel.hpp"
#include "bermudan/random.hpp"

namespace bermudan {

TimeGrid TimeGrid::uniform(double maturity, std::size_t num_dates, std::size_t substeps_per_interval) {
  if (num_dates < 1) throw std::invalid_argument("TimeGrid: need at least one exercise date");
  std::vector<double> dates(num_dates + 1);
  for (std::size_t j = 0; j <= num_dates; ++j) dates[j] = maturity * static_cast<double>(j) / num_dates;
  dates.back() = maturity;
  return TimeGrid(std::move(dates), substeps_per_interval);
}

TimeGrid::TimeGrid(std::vector<double> dates, std::size_t substeps_per_interval)
    : dates_(std::move(dates)), substeps_(substeps_per_interval) {
  if (dates_.size() < 2) throw std::invalid_argument("TimeGrid: need at least one exercise date");
  if (dates_.front() != 0.0) throw std::invalid_argument("TimeGrid: first date must be 0");
  for (std::size_t j = 1; j < dates_.size(); ++j) {
    if (!(dates_[j] > dates_[j - 1])) throw std::invalid_argument("TimeGrid: dates must be strictly increasing");
  }
  if (substeps_ < 1) throw std::invalid_argument("TimeGrid: substeps_per_interval must be >= 1");
}

SquareMatrix SquareMatrix::identity(std::size_t d) { return constant_correlation(d, 0.0); }

SquareMatrix SquareMatrix::constant_correlation(std::size_t d, double rho) {
  SquareMatrix m{d, std::vector<double>(d * d, rho)};
  for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
  return m;
}

BlackScholesParams BlackScholesParams::symmetric(std::size_t d, double s0, double r, double sigma,
                                                 double dividend, double rho) {
  return {std::vector<double>(d, s0), r, std::vector<double>(d, sigma), std::vector<double>(d, dividend),
          SquareMatrix::constant_correlation(d, rho)};
}

void BlackScholesParams::validate() const {
  const std::size_t d = dim();
  if (d == 0) throw DimensionMismatch("BlackScholesParams: empty s0");
  if (sigma.size() != d || dividend.size() != d || corr.dim != d || corr.values.size() != d * d) {
    throw DimensionMismatch("BlackScholesParams: s0, sigma, dividend and corr sizes disagree");
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (!(s0[i] > 0.0)) throw std::invalid_argument("BlackScholesParams: s0 must be > 0");
    if (!(sigma[i] >= 0.0)) throw std::invalid_argument("BlackScholesParams: sigma must be >= 0");
    if (std::abs(corr(i, i) - 1.0) > 1e-12) throw std::invalid_argument("BlackScholesParams: corr diagonal must be 1");
    for (std::size_t k = 0; k < i; ++k) {
      if (std::abs(corr(i, k) - corr(k, i)) > 1e-12) {
        throw std::invalid_argument("BlackScholesParams: corr must be symmetric");
      }
    }
  }
}

void HestonParams::validate() const {
  if (!(s0 > 0.0)) throw std::invalid_argument("HestonParams: s0 must be > 0");
  if (!(v0 >= 0.0)) throw std::invalid_argument("HestonParams: v0 must be >= 0");
  if (!(kappa >= 0.0 && theta >= 0.0 && xi >= 0.0)) {
    throw std::invalid_argument("HestonParams: kappa, theta and xi must be >= 0");
  }
  if (!(rho >= -1.0 && rho <= 1.0)) throw std::invalid_argument("HestonParams: rho must lie in [-1, 1]");
}

double short_rate(const MarketModel& model) {
  return std::visit([](const auto& p) { return p.r; }, model);
}

std::size_t dimension(const MarketModel& model) {
  if (const auto* bs = std::get_if<BlackScholesParams>(&model)) return bs->dim();
  return 1;
}

PathSet::PathSet(TimeGrid grid, std::size_t num_paths, std::size_t dim, std::uint64_t seed, std::size_t first_path)
    : grid_(std::move(grid)),
      num_paths_(num_paths),
      dim_(dim),
      seed_(seed),
      first_path_(first_path),
      values_(num_paths * (grid_.num_dates() + 1) * dim) {}

SquareMatrix correlation_factor(const SquareMatrix& corr) {
  const std::size_t d = corr.dim;
  if (corr.values.size() != d * d) throw DimensionMismatch("correlation_factor: matrix storage size");
  SquareMatrix l{d, std::vector<double>(d * d, 0.0)};
  for (std::size_t j = 0; j < d; ++j) {
    double pivot = corr(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (pivot < -1e-12) {
      throw NotPositiveSemiDefinite("correlation_factor: pivot " + std::to_string(pivot) + " at row " +
                                    std::to_string(j));
    }
    const double diag = pivot > 0.0 ? std::sqrt(pivot) : 0.0;
    l(j, j) = diag;
    for (std::size_t i = j + 1; i < d; ++i) {
      double s = corr(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      // A zero pivot means column j is a combination of earlier ones.
      l(i, j) = diag > 0.0 ? s / diag : 0.0;
    }
  }
  return l;
}

PathSet simulate_black_scholes(const BlackScholesParams& params, const TimeGrid& grid, std::size_t num_paths,
                               std::uint64_t seed, unsigned workers, std::size_t first_path) {
  params.validate();
  if (num_paths < 1) throw std::invalid_argument("simulate_black_scholes: need at least one path");
  const std::size_t d = params.dim();
  const std::size_t n = grid.num_dates();
  const SquareMatrix chol = correlation_factor(params.corr);

  std::vector<double> drift(n * d), vol(n * d);
  for (std::size_t j = 0; j < n; ++j) {
    const double dt = grid.date(j + 1) - grid.date(j);
    for (std::size_t i = 0; i < d; ++i) {
      const double s = params.sigma[i];
      drift[j * d + i] = (params.r - params.dividend[i] - 0.5 * s * s) * dt;
      vol[j * d + i] = s * std::sqrt(dt);
    }
  }

  PathSet paths(grid, num_paths, d, seed, first_path);
  parallel_for(num_paths, workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> z(d);
    for (std::size_t m = begin; m < end; ++m) {
      Stream rng(derive_seed(seed, first_path + m));
      auto s = paths.state(m, 0);
      for (std::size_t i = 0; i < d; ++i) s[i] = params.s0[i];
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < d; ++i) z[i] = rng.normal();
        const auto prev = paths.state(m, j);
        auto next = paths.state(m, j + 1);
        for (std::size_t i = 0; i < d; ++i) {
          double w = 0.0;
          for (std::size_t k = 0; k <= i; ++k) w += chol(i, k) * z[k];
          next[i] = prev[i] * std::exp(drift[j * d + i] + vol[j * d + i] * w);
        }
      }
    }
  });
  return paths;
}

PathSet simulate_heston(const HestonParams& params, const TimeGrid& grid, std::size_t num_paths,
                        std::uint64_t seed, unsigned workers, std::size_t first_path) {
  params.validate();
  if (num_paths < 1) throw std::invalid_argument("simulate_heston: need at least one path");
  const std::size_t n = grid.num_dates();
  const std::size_t sub = grid.substeps();
  const double rho_perp = std::sqrt(1.0 - params.rho * params.rho);

  PathSet paths(grid, num_paths, 1, seed, first_path);
  parallel_for(num_paths, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t m = begin; m < end; ++m) {
      Stream rng(derive_seed(seed, first_path + m));
      double log_s = std::log(params.s0);
      double v = params.v0;
      paths.state(m, 0)[0] = params.s0;
      for (std::size_t j = 0; j < n; ++j) {
        const double dt = (grid.date(j + 1) - grid.date(j)) / static_cast<double>(sub);
        const double sqrt_dt = std::sqrt(dt);
        for (std::size_t k = 0; k < sub; ++k) {
          const double z_vol = rng.normal();
          const double z_perp = rng.normal();
          const double v_pos = std::max(v, 0.0);
          const double sqrt_v = std::sqrt(v_pos);
          log_s += (params.r - 0.5 * v_pos) * dt + sqrt_v * sqrt_dt * (params.rho * z_vol + rho_perp * z_perp);
          v += params.kappa * (params.theta - v_pos) * dt + params.xi * sqrt_v * sqrt_dt * z_vol;
        }
        paths.state(m, j + 1)[0] = std::exp(log_s);
      }
    }
  });
  return paths;
}

PathSet simulate(const MarketModel& model, const TimeGrid& grid, std::size_t num_paths, std::uint64_t seed,
                 unsigned workers, std::size_t first_path) {
  if (const auto* bs = std::get_if<BlackScholesParams>(&model)) {
    return simulate_black_scholes(*bs, grid, num_paths, seed, workers, first_path);
  }
  return simulate_heston(std::get<HestonParams>(model), grid, num_paths, seed, workers, first_path);
}

}  // namespace bermudan
