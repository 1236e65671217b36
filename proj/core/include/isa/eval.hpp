#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "isa/data.hpp"
#include "isa/linalg.hpp"
#include "isa/trainer.hpp"

namespace isa {

/// N fixed-length representations, one per row, with aligned labels and ids.
struct RepresentationSet {
  Matrix z;
  std::vector<int> labels;
  std::vector<std::string> ids;

  std::size_t size() const noexcept { return z.rows(); }
  void validate() const;
};

/// Euclidean k-nearest-neighbour vote. Neighbours are ordered by
/// (distance, label, row); vote ties go to the class with the smaller summed
/// neighbour distance, then the smaller class index.
std::vector<int> knn_classify(const RepresentationSet& train, const Matrix& queries,
                              std::size_t k = 1, std::size_t workers = 1);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Encodes every sequence of `ds` with `model`. Unlabeled sequences get -1.
RepresentationSet encode_dataset(const Model& model, const Dataset& ds);

/// Representation rows as a dataset of T = 1 sequences (for export).
Dataset to_dataset(const RepresentationSet& reps);
RepresentationSet from_dataset(const Dataset& ds);

/// Encodes both sets with the same model and returns k-NN accuracy on test.
double evaluate_pipeline(const Dataset& train_ds, const Dataset& test_ds, const Model& model,
                         std::size_t k = 1);

struct SemiSupPoint {
  double unlabeled_fraction = 0.0;
  std::size_t train_size = 0;
  double accuracy = 0.0;
};

struct SemiSupReport {
  double labeled_fraction = 0.2;
  std::uint64_t seed = 0;
  std::vector<SemiSupPoint> points;
};

/// For each fraction f (strictly increasing, in (0, 1]) trains a model on the
/// first round(f N) sequences of a fixed ordering that begins with the
/// labeled subset, ignoring labels; then fits k-NN on the labeled subset's
/// representations and scores it on `test`. The labeled subset is fixed
/// (stratified, seeded) across all fractions.
SemiSupReport semi_sup_run(const Dataset& full_train, const Dataset& test, double labeled_fraction,
                           std::span<const double> unlabeled_fractions, const TrainConfig& cfg,
                           std::size_t k = 1);

std::string format_report_csv(const SemiSupReport& report);

}  // namespace isa
