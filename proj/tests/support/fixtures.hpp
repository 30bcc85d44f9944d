#pragma once

#include <limits>
#include <vector>

#include "hilma/dataset.hpp"
#include "hilma/types.hpp"

namespace testsupport {

// Covariate-free dataset: the given observed responses followed by n_mis
// missing slots.
inline hilma::Dataset response_only(const std::vector<double>& observed,
                                    int n_mis) {
  const int n = static_cast<int>(observed.size()) + n_mis;
  hilma::Vector y(n);
  for (std::size_t i = 0; i < observed.size(); ++i) y[i] = observed[i];
  for (int i = static_cast<int>(observed.size()); i < n; ++i) {
    y[i] = std::numeric_limits<double>::quiet_NaN();
  }
  return hilma::Dataset(hilma::Matrix(n, 0), y);
}

// Single-covariate dataset, observed rows first.
inline hilma::Dataset with_covariate(const std::vector<double>& x_obs,
                                     const std::vector<double>& y_obs,
                                     const std::vector<double>& x_mis) {
  const int n = static_cast<int>(x_obs.size() + x_mis.size());
  hilma::Matrix x(n, 1);
  hilma::Vector y(n);
  for (std::size_t i = 0; i < x_obs.size(); ++i) {
    x(static_cast<int>(i), 0) = x_obs[i];
    y[static_cast<int>(i)] = y_obs[i];
  }
  for (std::size_t i = 0; i < x_mis.size(); ++i) {
    const int row = static_cast<int>(x_obs.size() + i);
    x(row, 0) = x_mis[i];
    y[row] = std::numeric_limits<double>::quiet_NaN();
  }
  return hilma::Dataset(std::move(x), std::move(y));
}

// Balanced one-way layout: responses[g][j], group ids in covariate 0.
inline hilma::Dataset grouped(const std::vector<std::vector<double>>& responses) {
  int n = 0;
  for (const auto& g : responses) n += static_cast<int>(g.size());
  hilma::Matrix x(n, 1);
  hilma::Vector y(n);
  int row = 0;
  for (std::size_t g = 0; g < responses.size(); ++g) {
    for (double v : responses[g]) {
      x(row, 0) = static_cast<double>(g);
      y[row] = v;
      ++row;
    }
  }
  return hilma::Dataset(std::move(x), std::move(y));
}

}  // namespace testsupport
