#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace sqzlab {

/// (x, y, sigma) measurement table. sigma may be left empty, in which case
/// the consumer applies its documented default policy.
struct DataSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> sigma;

  std::size_t size() const { return x.size(); }
  bool empty() const { return x.empty(); }
  bool has_sigma() const { return !sigma.empty(); }

  void validate() const {
    if (x.size() != y.size())
      throw std::invalid_argument("data series: x and y lengths differ");
    if (has_sigma() && sigma.size() != x.size())
      throw std::invalid_argument("data series: sigma length differs");
    if (x.size() < 2) throw std::invalid_argument("data series: need at least 2 points");
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
        throw std::invalid_argument("data series: non-finite value at row " + std::to_string(i));
      if (has_sigma() && !(sigma[i] > 0.0))
        throw std::invalid_argument("data series: sigma must be > 0 at row " + std::to_string(i));
    }
    auto xs = x;
    std::sort(xs.begin(), xs.end());
    if (std::adjacent_find(xs.begin(), xs.end()) != xs.end())
      throw std::invalid_argument("data series: duplicate abscissa");
  }

  /// Copy with sigma filled from the given default where missing.
  DataSeries with_default_sigma(double sig) const {
    DataSeries out = *this;
    if (!out.has_sigma()) out.sigma.assign(out.x.size(), sig);
    return out;
  }

  /// Copy with sigma = rel * |y| where missing.
  DataSeries with_default_relative_sigma(double rel) const {
    DataSeries out = *this;
    if (!out.has_sigma()) {
      out.sigma.resize(out.x.size());
      for (std::size_t i = 0; i < out.x.size(); ++i) out.sigma[i] = rel * std::abs(out.y[i]);
    }
    return out;
  }
};

}  // namespace sqzlab
