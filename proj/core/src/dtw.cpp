#include "isa/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "isa/errors.hpp"

namespace isa {

std::string_view to_string(LocalMetric m) noexcept {
  return m == LocalMetric::euclidean ? "euclidean" : "squared_euclidean";
}

LocalMetric parse_local_metric(std::string_view name) {
  if (name == "euclidean") return LocalMetric::euclidean;
  if (name == "squared_euclidean" || name == "sqeuclidean") return LocalMetric::squared_euclidean;
  throw std::invalid_argument("unknown DTW metric '" + std::string(name) + "'");
}

double local_cost(std::span<const double> a, std::span<const double> b, LocalMetric metric) noexcept {
  double acc = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    acc += diff * diff;
  }
  return metric == LocalMetric::euclidean ? std::sqrt(acc) : acc;
}

namespace {

void check_pair(const Sequence& a, const Sequence& b) {
  if (a.length() == 0 || b.length() == 0) throw ShapeError("dtw: empty sequence");
  if (a.width() != b.width()) {
    std::ostringstream os;
    os << "dtw: width mismatch between '" << a.id << "' (" << a.width() << ") and '" << b.id
       << "' (" << b.width() << ")";
    throw ShapeError(os.str());
  }
}

bool in_band(std::size_t i, std::size_t j, const DtwConfig& cfg) {
  if (!cfg.band_radius) return true;
  const std::size_t gap = i > j ? i - j : j - i;
  return gap <= *cfg.band_radius;
}

double finish(double cost, const Sequence& a, const Sequence& b, const DtwConfig& cfg) {
  if (!std::isfinite(cost) || !cfg.normalize_by_length) return cost;
  return cost / static_cast<double>(a.length() + b.length());
}

}  // namespace

double dtw_distance(const Sequence& a, const Sequence& b, const DtwConfig& cfg) {
  check_pair(a, b);
  const std::size_t n = a.length();
  const std::size_t m = b.length();
  std::vector<double> prev(m, kDtwUnreachable), cur(m, kDtwUnreachable);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!in_band(i, j, cfg)) {
        cur[j] = kDtwUnreachable;
        continue;
      }
      const double c = local_cost(a.obs.row(i), b.obs.row(j), cfg.metric);
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = kDtwUnreachable;
        if (i > 0) best = std::min(best, prev[j]);
        if (j > 0) best = std::min(best, cur[j - 1]);
        if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
      }
      cur[j] = best + c;
    }
    std::swap(prev, cur);
  }
  return finish(prev[m - 1], a, b, cfg);
}

DtwAlignment dtw_align(const Sequence& a, const Sequence& b, const DtwConfig& cfg) {
  check_pair(a, b);
  const std::size_t n = a.length();
  const std::size_t m = b.length();
  Matrix acc(n, m, kDtwUnreachable);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!in_band(i, j, cfg)) continue;
      const double c = local_cost(a.obs.row(i), b.obs.row(j), cfg.metric);
      double best = (i == 0 && j == 0) ? 0.0 : kDtwUnreachable;
      if (i > 0) best = std::min(best, acc(i - 1, j));
      if (j > 0) best = std::min(best, acc(i, j - 1));
      if (i > 0 && j > 0) best = std::min(best, acc(i - 1, j - 1));
      acc(i, j) = best + c;
    }
  }
  DtwAlignment out;
  out.cost = finish(acc(n - 1, m - 1), a, b, cfg);
  if (!std::isfinite(acc(n - 1, m - 1))) return out;
  std::size_t i = n - 1;
  std::size_t j = m - 1;
  out.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = acc(i - 1, j - 1);
      const double up = acc(i - 1, j);
      const double left = acc(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    out.path.emplace_back(i, j);
  }
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

Vector dtw_representation(const Sequence& x, std::span<const Sequence> vocabulary,
                          const DtwConfig& cfg, std::size_t workers) {
  if (vocabulary.empty()) throw std::invalid_argument("dtw_representation: empty vocabulary");
  Vector out(vocabulary.size());
  workers = std::clamp<std::size_t>(workers, 1, vocabulary.size());
  if (workers == 1) {
    for (std::size_t k = 0; k < vocabulary.size(); ++k) out[k] = dtw_distance(x, vocabulary[k], cfg);
    return out;
  }
  for (const Sequence& v : vocabulary) check_pair(x, v);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t k = w; k < vocabulary.size(); k += workers) {
        out[k] = dtw_distance(x, vocabulary[k], cfg);
      }
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace isa
