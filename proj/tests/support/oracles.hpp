#pragma once

// Test-only reference implementations. Nothing here calls into the code path
// it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "isa/isa_net.hpp"
#include "isa/rng.hpp"
#include "isa/sequence.hpp"

namespace isa::testing {

inline Sequence random_sequence(Rng& rng, std::size_t length, std::size_t width,
                                double stddev = 1.0, std::string id = "s") {
  Sequence s{std::move(id), std::nullopt, Matrix(length, width)};
  for (double& x : s.obs.flat()) x = rng.normal(0.0, stddev);
  return s;
}

inline IsaParameters random_parameters(const ModelDims& dims, Rng& rng, double bound = 0.5) {
  IsaParameters p{IsaTensors::zeros(dims)};
  p.for_each([&](const std::string&, Matrix& m) {
    for (double& x : m.flat()) x = rng.uniform(-bound, bound);
  });
  return p;
}

/// Central finite differences of `loss` with respect to every parameter
/// entry, in canonical tensor order.
inline std::vector<double> finite_difference_gradient(
    IsaParameters p, const std::function<double(const IsaParameters&)>& loss, double eps) {
  std::vector<double*> entries;
  p.for_each([&](const std::string&, Matrix& m) {
    for (double& x : m.flat()) entries.push_back(&x);
  });
  std::vector<double> out;
  out.reserve(entries.size());
  for (double* x : entries) {
    const double saved = *x;
    *x = saved + eps;
    const double up = loss(p);
    *x = saved - eps;
    const double down = loss(p);
    *x = saved;
    out.push_back((up - down) / (2.0 * eps));
  }
  return out;
}

inline std::vector<double> flatten(const IsaTensors& t) {
  std::vector<double> out;
  t.for_each([&](const std::string&, const Matrix& m) {
    out.insert(out.end(), m.flat().begin(), m.flat().end());
  });
  return out;
}

/// |a - n| / max(|a|, |n|, floor). Entries below the floor are compared in
/// absolute terms; central differences carry ~1e-10 roundoff at eps = 1e-5.
inline double relative_error(double analytic, double numeric, double floor = 1e-5) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

/// DTW by exhaustive enumeration of every monotone warping path from (0,0)
/// to (n-1,m-1) with unit steps right, down and diagonal.
inline double dtw_bruteforce(const Sequence& a, const Sequence& b, bool squared) {
  const std::size_t n = a.length();
  const std::size_t m = b.length();
  auto cost = [&](std::size_t i, std::size_t j) {
    double acc = 0.0;
    for (std::size_t d = 0; d < a.width(); ++d) {
      const double diff = a.obs(i, d) - b.obs(j, d);
      acc += diff * diff;
    }
    return squared ? acc : std::sqrt(acc);
  };
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j,
                                                                   double acc) {
    acc += cost(i, j);
    if (i == n - 1 && j == m - 1) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < n) walk(i + 1, j, acc);
    if (j + 1 < m) walk(i, j + 1, acc);
    if (i + 1 < n && j + 1 < m) walk(i + 1, j + 1, acc);
  };
  walk(0, 0, 0.0);
  return best;
}

}  // namespace isa::testing
