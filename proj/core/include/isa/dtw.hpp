#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "isa/linalg.hpp"
#include "isa/sequence.hpp"

namespace isa {

enum class LocalMetric { euclidean, squared_euclidean };

std::string_view to_string(LocalMetric m) noexcept;
LocalMetric parse_local_metric(std::string_view name);

struct DtwConfig {
  std::optional<std::size_t> band_radius;  // Sakoe-Chiba half-width
  LocalMetric metric = LocalMetric::euclidean;
  bool normalize_by_length = false;        // divide by T_a + T_b
};

inline constexpr double kDtwUnreachable = std::numeric_limits<double>::infinity();

/// Local cost between two observations of equal width.
double local_cost(std::span<const double> a, std::span<const double> b, LocalMetric metric) noexcept;

/// Accumulated cost of the optimal monotone alignment using steps
/// (i+1, j), (i, j+1), (i+1, j+1). Returns kDtwUnreachable when the band
/// admits no path.
double dtw_distance(const Sequence& a, const Sequence& b, const DtwConfig& cfg = {});

struct DtwAlignment {
  double cost = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> path;  // zero-based (i, j), start to end
};

/// Same recurrence with the full cost matrix retained for backtracking.
DtwAlignment dtw_align(const Sequence& a, const Sequence& b, const DtwConfig& cfg = {});

/// Distances from `x` to each vocabulary entry, in vocabulary order.
Vector dtw_representation(const Sequence& x, std::span<const Sequence> vocabulary,
                          const DtwConfig& cfg = {}, std::size_t workers = 1);

}  // namespace isa
