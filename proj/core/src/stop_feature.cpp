#include "isa/stop_feature.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "isa/errors.hpp"

namespace isa {

std::string_view to_string(StopMechanism m) noexcept {
  switch (m) {
    case StopMechanism::none: return "none";
    case StopMechanism::linear: return "linear";
    case StopMechanism::tanh: return "tanh";
    case StopMechanism::exp: return "exp";
  }
  return "none";
}

StopMechanism parse_stop_mechanism(std::string_view name) {
  if (name == "none") return StopMechanism::none;
  if (name == "linear") return StopMechanism::linear;
  if (name == "tanh") return StopMechanism::tanh;
  if (name == "exp") return StopMechanism::exp;
  throw std::invalid_argument("unknown stop mechanism '" + std::string(name) +
                              "' (expected none|linear|tanh|exp)");
}

void StopFeatureConfig::validate() const {
  const bool needs_gamma = mechanism == StopMechanism::tanh || mechanism == StopMechanism::exp;
  if (needs_gamma && !(gamma > 0.0 && std::isfinite(gamma))) {
    throw std::invalid_argument("stop feature gamma must be positive and finite");
  }
}

double stop_value(std::size_t t, std::size_t length, const StopFeatureConfig& cfg) {
  if (length < 1 || t < 1 || t > length) {
    std::ostringstream os;
    os << "stop_value: step " << t << " outside 1.." << length;
    throw std::out_of_range(os.str());
  }
  cfg.validate();
  const double ratio = static_cast<double>(t) / static_cast<double>(length);
  switch (cfg.mechanism) {
    case StopMechanism::linear:
      return ratio;
    case StopMechanism::tanh:
      return std::tanh(cfg.gamma * ratio) + 1.0 - std::tanh(cfg.gamma);
    case StopMechanism::exp:
      return std::exp(cfg.gamma * (static_cast<double>(t) - static_cast<double>(length)) /
                      static_cast<double>(length));
    case StopMechanism::none:
      break;
  }
  throw std::invalid_argument("stop_value: mechanism none has no stop value");
}

Sequence augment(const Sequence& s, const StopFeatureConfig& cfg) {
  if (!cfg.enabled()) return s;
  cfg.validate();
  const std::size_t rows = s.length();
  const std::size_t cols = s.width();
  Sequence out{s.id, s.label, Matrix(rows, cols + 1)};
  for (std::size_t r = 0; r < rows; ++r) {
    auto src = s.obs.row(r);
    auto dst = out.obs.row(r);
    std::copy(src.begin(), src.end(), dst.begin());
    dst[cols] = stop_value(r + 1, rows, cfg);
  }
  return out;
}

Sequence strip(const Sequence& s) {
  if (s.width() < 2) throw ShapeError("strip: sequence '" + s.id + "' has width < 2");
  const std::size_t rows = s.length();
  const std::size_t cols = s.width() - 1;
  Sequence out{s.id, s.label, Matrix(rows, cols)};
  for (std::size_t r = 0; r < rows; ++r) {
    auto src = s.obs.row(r);
    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(cols), out.obs.row(r).begin());
  }
  return out;
}

}  // namespace isa
