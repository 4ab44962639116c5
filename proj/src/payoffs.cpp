#include "bermudan/payoffs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bermudan/errors.hpp"
#include "bermudan/parallel.hpp"

namespace bermudan {

void Payoff::validate() const {
  if (!(strike > 0.0)) throw std::invalid_argument("Payoff: strike must be > 0");
  if (kind == PayoffKind::ArithmeticBasketPut) {
    if (weights.empty()) throw std::invalid_argument("Payoff: basket put needs weights");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("Payoff: basket weights must sum to 1");
  }
}

std::string Payoff::describe() const {
  std::ostringstream out;
  switch (kind) {
    case PayoffKind::Put1D: out << "put"; break;
    case PayoffKind::MaxCall: out << "max_call"; break;
    case PayoffKind::GeometricBasketPut: out << "geometric_put"; break;
    case PayoffKind::ArithmeticBasketPut: out << "basket_put"; break;
  }
  out << "(K=" << strike << ")";
  return out.str();
}

double evaluate(const Payoff& payoff, std::span<const double> spots) {
  if (spots.empty()) throw DimensionMismatch("evaluate: empty spot vector");
  const double k = payoff.strike;
  switch (payoff.kind) {
    case PayoffKind::Put1D:
      if (spots.size() != 1) throw DimensionMismatch("evaluate: Put1D expects one spot");
      return std::max(k - spots[0], 0.0);
    case PayoffKind::MaxCall:
      return std::max(*std::max_element(spots.begin(), spots.end()) - k, 0.0);
    case PayoffKind::GeometricBasketPut: {
      double log_sum = 0.0;
      for (double s : spots) log_sum += std::log(s);
      return std::max(k - std::exp(log_sum / static_cast<double>(spots.size())), 0.0);
    }
    case PayoffKind::ArithmeticBasketPut: {
      if (payoff.weights.size() != spots.size()) throw DimensionMismatch("evaluate: basket weights vs spots");
      double basket = 0.0;
      for (std::size_t i = 0; i < spots.size(); ++i) basket += payoff.weights[i] * spots[i];
      return std::max(k - basket, 0.0);
    }
  }
  return 0.0;
}

CashflowMatrix cashflows(const Payoff& payoff, const PathSet& paths, double r, unsigned workers) {
  const std::size_t cols = paths.grid().num_dates() + 1;
  std::vector<double> discount(cols);
  for (std::size_t j = 0; j < cols; ++j) discount[j] = std::exp(-r * paths.grid().date(j));

  CashflowMatrix out(paths.num_paths(), cols);
  parallel_for(paths.num_paths(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t m = begin; m < end; ++m) {
      for (std::size_t j = 0; j < cols; ++j) {
        const double h = evaluate(payoff, paths.state(m, j));
        out.set(m, j, discount[j] * h, h > 0.0);
      }
    }
  });
  return out;
}

}  // namespace bermudan
