#pragma once

#include <optional>
#include <span>
#include <string>

#include "isa/linalg.hpp"

namespace isa {

/// A T x D multivariate sequence; row t is the observation at step t + 1.
struct Sequence {
  std::string id;
  std::optional<int> label;
  Matrix obs;

  std::size_t length() const noexcept { return obs.rows(); }
  std::size_t width() const noexcept { return obs.cols(); }

  bool operator==(const Sequence&) const = default;
};

/// Throws DataError if the sequence is empty, zero-width or non-finite.
void validate(const Sequence& s);

}  // namespace isa
