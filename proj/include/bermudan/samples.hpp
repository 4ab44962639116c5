#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bermudan/errors.hpp"

namespace bermudan {

/// Non-owning row-major view of n samples of dimension d.
class SampleView {
 public:
  SampleView(std::span<const double> values, std::size_t dim) : values_(values), dim_(dim) {
    if (dim_ == 0 || values_.size() % dim_ != 0) throw DimensionMismatch("SampleView: storage is not n x d");
  }
  SampleView(const std::vector<double>& values, std::size_t dim) : SampleView(std::span<const double>(values), dim) {}

  std::size_t rows() const { return values_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> row(std::size_t i) const { return values_.subspan(i * dim_, dim_); }
  double operator()(std::size_t i, std::size_t k) const { return values_[i * dim_ + k]; }

 private:
  std::span<const double> values_;
  std::size_t dim_;
};

}  // namespace bermudan
