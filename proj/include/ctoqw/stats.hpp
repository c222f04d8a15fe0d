// Copyright 2026 The ctoqw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace ctoqw::stats {

/// Pairwise summation.
inline double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 16) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const auto h = x.size() / 2;
  return pairwise_sum(x.first(h)) + pairwise_sum(x.subspan(h));
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// 95% Wilson score interval for k successes out of n.
inline Interval wilson_interval(double k, double n, double z = 1.959963984540054) {
  if (n <= 0) return {0.0, 1.0};
  const double p = k / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2 * n)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// Asymptotic Kolmogorov survival function Q(lambda) = P(K > lambda).
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// One-sample Kolmogorov–Smirnov test of `samples` against a continuous CDF
/// (p-value with the Stephens small-sample correction).
inline KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
  KsResult r;
  r.n = samples.size();
  if (samples.empty()) return r;
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  const double sn = std::sqrt(n);
  r.statistic = d;
  r.p_value = kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
  return r;
}

/// Three-sigma bound on the total-variation distance between an empirical
/// law from n samples and the true law p: 1/2 sum_i 3 sqrt(p_i (1 - p_i) / n).
inline double multinomial_tv_bound(std::span<const double> p, double n) {
  double s = 0.0;
  for (double pi : p) s += 3.0 * std::sqrt(std::max(0.0, pi * (1.0 - pi)) / n);
  return 0.5 * s;
}

}  // namespace ctoqw::stats
