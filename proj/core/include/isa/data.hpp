#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "isa/sequence.hpp"

namespace isa {

/// Per-feature z-score statistics. `scale` is the divisor applied after
/// centering; features whose std is below 1e-12 keep scale 1.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> scale;

  Sequence apply(const Sequence& s) const;
  Sequence invert(const Sequence& s) const;
  bool operator==(const NormStats&) const = default;
};

struct Dataset {
  std::vector<Sequence> sequences;
  std::vector<std::string> class_names;
  std::optional<NormStats> normalization;

  std::size_t size() const noexcept { return sequences.size(); }
  bool empty() const noexcept { return sequences.empty(); }
  /// Shared feature width; 0 for an empty dataset.
  std::size_t width() const noexcept;
  bool labeled() const noexcept;
  /// Largest label + 1, or 0 when unlabeled.
  std::size_t class_count() const noexcept;
};

struct CircleSpec {
  std::size_t samples_per_class = 100;
  std::vector<int> loops_per_class{2, 3};
  std::size_t length_lo = 50;
  std::size_t length_hi = 200;
  double radius = 1.0;
  std::optional<double> noise_std;  // default 0.01 * radius
  bool random_phase = false;
  std::uint64_t seed = 0;

  double resolved_noise_std() const noexcept { return noise_std.value_or(0.01 * radius); }
  void validate() const;
};

/// Circles traced `loops` times; the class index is the position in
/// loops_per_class. Observation i of an L-step sample sits at angle
/// phase + 2 pi k (i - 1) / (L - 1).
Dataset gen_circles(const CircleSpec& spec);

/// JSON-lines sequence files: {"id": ..., "label": int (optional),
/// "features": [[...], ...]}, one record per line.
Dataset load_sequences(const std::filesystem::path& path);
void save_sequences(const Dataset& ds, const std::filesystem::path& path);

Dataset parse_sequences(std::string_view text, const std::string& source = "<memory>");
std::string format_sequences(const Dataset& ds);

NormStats fit_normalization(std::span<const Sequence> fit_subset);

/// Z-scores every sequence with statistics fitted on the sequences at
/// `fit_indices`. The returned dataset carries the statistics.
Dataset normalize(const Dataset& ds, std::span<const std::size_t> fit_indices);

/// Disjoint cover of `ds` into parts sized by `fractions` (largest remainder
/// rounding, per class when stratified). Parts keep the input order.
std::vector<Dataset> split(const Dataset& ds, std::span<const double> fractions, bool stratified,
                           std::uint64_t seed);

/// Index form of split, for callers that need to track membership.
std::vector<std::vector<std::size_t>> split_indices(const Dataset& ds,
                                                    std::span<const double> fractions,
                                                    bool stratified, std::uint64_t seed);

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);

}  // namespace isa
