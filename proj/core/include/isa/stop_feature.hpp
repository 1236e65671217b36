#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "isa/sequence.hpp"

namespace isa {

enum class StopMechanism { none, linear, tanh, exp };

std::string_view to_string(StopMechanism m) noexcept;
// Throws std::invalid_argument for unknown names.
StopMechanism parse_stop_mechanism(std::string_view name);

struct StopFeatureConfig {
  StopMechanism mechanism = StopMechanism::none;
  double gamma = 1.0;  // steepness for tanh/exp

  bool enabled() const noexcept { return mechanism != StopMechanism::none; }
  void validate() const;

  bool operator==(const StopFeatureConfig&) const = default;
};

/// Temporal stamp v_t for step t in 1..T. Reaches exactly 1 at t = T and is
/// strictly increasing in t.
///   linear: t/T
///   tanh:   tanh(gamma t/T) + 1 - tanh(gamma)
///   exp:    exp(gamma (t - T)/T)
double stop_value(std::size_t t, std::size_t length, const StopFeatureConfig& cfg);

/// Appends the stop channel as the last column. Identity for mechanism none.
Sequence augment(const Sequence& s, const StopFeatureConfig& cfg);

/// Drops the last column.
Sequence strip(const Sequence& s);

}  // namespace isa
