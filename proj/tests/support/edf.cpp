#include "edf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace testsupport {

double ks_statistic(std::vector<double> sample,
                    const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = cdf(sample[i]);
    const double upper = (static_cast<double>(i) + 1.0) / n - F;
    const double lower = F - static_cast<double>(i) / n;
    d = std::max(d, std::max(upper, lower));
  }
  return d;
}

double sorted_quantile(std::vector<double> sample, double p) {
  if (sample.empty()) throw std::invalid_argument("empty sample");
  std::sort(sample.begin(), sample.end());
  const double h = (static_cast<double>(sample.size()) - 1.0) * p;
  const double lo = std::floor(h);
  const auto i = static_cast<std::size_t>(lo);
  if (i + 1 >= sample.size()) return sample.back();
  return sample[i] + (h - lo) * (sample[i + 1] - sample[i]);
}

}  // namespace testsupport
