#pragma once

#include <span>
#include <string>
#include <vector>

#include "bermudan/market_models.hpp"

namespace bermudan {

enum class PayoffKind { Put1D, MaxCall, GeometricBasketPut, ArithmeticBasketPut };

struct Payoff {
  PayoffKind kind = PayoffKind::Put1D;
  double strike = 100.0;
  std::vector<double> weights;  // ArithmeticBasketPut only

  static Payoff put(double strike) { return {PayoffKind::Put1D, strike, {}}; }
  static Payoff max_call(double strike) { return {PayoffKind::MaxCall, strike, {}}; }
  static Payoff geometric_put(double strike) { return {PayoffKind::GeometricBasketPut, strike, {}}; }
  static Payoff basket_put(double strike, std::vector<double> weights) {
    return {PayoffKind::ArithmeticBasketPut, strike, std::move(weights)};
  }
  /// Equal weights 1/d.
  static Payoff basket_put(double strike, std::size_t d) {
    return basket_put(strike, std::vector<double>(d, 1.0 / static_cast<double>(d)));
  }

  /// Throws std::invalid_argument when K <= 0 or weights do not sum to 1.
  void validate() const;
  std::string describe() const;
};

/// Undiscounted exercise value h(s) >= 0.
double evaluate(const Payoff& payoff, std::span<const double> spots);

/// Discounted exercise values z[m][j] = exp(-r t_j) h(S_{t_j}) with the
/// in-the-money mask (undiscounted payoff > 0).
class CashflowMatrix {
 public:
  CashflowMatrix(std::size_t num_paths, std::size_t num_dates_plus_one)
      : cols_(num_dates_plus_one), z_(num_paths * num_dates_plus_one), itm_(num_paths * num_dates_plus_one) {}

  std::size_t num_paths() const { return cols_ ? z_.size() / cols_ : 0; }
  std::size_t num_dates() const { return cols_ - 1; }

  double z(std::size_t path, std::size_t date) const { return z_[path * cols_ + date]; }
  bool itm(std::size_t path, std::size_t date) const { return itm_[path * cols_ + date] != 0; }
  void set(std::size_t path, std::size_t date, double z, bool itm) {
    z_[path * cols_ + date] = z;
    itm_[path * cols_ + date] = itm ? 1 : 0;
  }

 private:
  std::size_t cols_;
  std::vector<double> z_;
  std::vector<unsigned char> itm_;
};

CashflowMatrix cashflows(const Payoff& payoff, const PathSet& paths, double r, unsigned workers = 1);

}  // namespace bermudan
