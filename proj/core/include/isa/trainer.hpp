#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "isa/data.hpp"
#include "isa/isa_net.hpp"
#include "isa/stop_feature.hpp"

namespace isa {

enum class Precision { f32, f64 };

std::string_view to_string(Precision p) noexcept;
Precision parse_precision(std::string_view name);  // "single" | "double"

struct TrainConfig {
  double alpha = 0.5;
  std::size_t hidden_size = 32;
  double learning_rate = 1e-3;
  double clip_lo = -5.0;
  double clip_hi = 5.0;
  std::size_t epochs = 200;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  StopFeatureConfig stop;
  // f32 keeps every parameter exactly representable in single precision
  // (rounded after each update); arithmetic is carried out in double.
  Precision precision = Precision::f64;
  double rho = 0.9;
  double epsilon = 1e-8;
  std::size_t workers = 1;
  bool normalize = true;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

std::string to_json_string(const TrainConfig& cfg);
TrainConfig train_config_from_json(std::string_view text);

struct RmspropState {
  IsaTensors mean_square;
  double rho = 0.9;
  double epsilon = 1e-8;

  static RmspropState fresh(const ModelDims& dims, double rho = 0.9, double epsilon = 1e-8);
};

/// Element-wise clamp of every gradient entry into [lo, hi].
IsaGradients clip_gradients(IsaGradients g, double lo, double hi);
void clip_gradients_in_place(IsaGradients& g, double lo, double hi);

/// acc <- rho acc + (1 - rho) g^2;  p <- p - lr g / sqrt(acc + eps).
void rmsprop_step(IsaParameters& p, const IsaGradients& g, RmspropState& st, double lr);

struct EpochRecord {
  std::size_t epoch = 0;      // 1-based
  double train_loss = 0.0;    // mean per-sequence integrated loss seen during the epoch
  std::optional<double> val_loss;
  double wall_seconds = 0.0;
  std::size_t updates = 0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t total_updates() const noexcept;
};

struct TrainResult {
  IsaParameters params;
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&, const IsaParameters&)>;

/// Trains from a fresh seeded initialization. Sequences must already be
/// normalized (if desired) but not augmented; the stop channel is appended
/// here according to cfg.stop. Mini-batch gradients are averaged over the
/// batch, clipped, then applied with RMSprop.
TrainResult train(std::span<const Sequence> train_set, std::span<const Sequence> val_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// A trained model together with everything needed to feed it new data.
struct Model {
  IsaParameters params;
  TrainConfig config;
  std::optional<NormStats> norm;

  /// Normalizes (if fitted) then appends the stop channel.
  Sequence prepare(const Sequence& s) const;
  Representation encode(const Sequence& s) const;
};

struct FitResult {
  Model model;
  TrainHistory history;
};

/// Fits normalization on `train_ds` (when cfg.normalize) and trains.
FitResult fit_model(const Dataset& train_ds, const Dataset& val_ds, const TrainConfig& cfg,
                    const EpochCallback& on_epoch = {});

/// Mean per-sequence integrated loss of `model` on `ds` (prepared internally).
double validation_loss(const Model& model, const Dataset& ds);

struct Selection {
  TrainConfig best;
  std::size_t best_index = 0;
  std::vector<double> val_losses;  // aligned with the grid
};

/// Argmin over validation losses with ties broken by smaller hidden size,
/// then smaller gamma, then the remaining config fields.
std::size_t select_best(std::span<const TrainConfig> grid, std::span<const double> val_losses);

/// Trains one model per grid point and keeps the one with the lowest
/// validation loss.
Selection select_hyperparams(const Dataset& train_ds, const Dataset& val_ds,
                             std::span<const TrainConfig> grid);

}  // namespace isa
