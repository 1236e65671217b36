#include "isa/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "isa/errors.hpp"
#include "isa/rng.hpp"

namespace isa {

void RepresentationSet::validate() const {
  if (labels.size() != z.rows()) throw ShapeError("representation set: label count != row count");
  if (!ids.empty() && ids.size() != z.rows()) throw ShapeError("representation set: id count != row count");
  if (!all_finite(z.flat())) throw NumericError("representation set has non-finite entries");
}

namespace {

int classify_one(const RepresentationSet& train, std::span<const double> q, std::size_t k,
                 std::vector<std::tuple<double, int, std::size_t>>& scratch) {
  scratch.clear();
  for (std::size_t r = 0; r < train.size(); ++r) {
    auto row = train.z.row(r);
    double acc = 0.0;
    for (std::size_t d = 0; d < row.size(); ++d) {
      const double diff = row[d] - q[d];
      acc += diff * diff;
    }
    scratch.emplace_back(std::sqrt(acc), train.labels[r], r);
  }
  std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k), scratch.end());
  std::map<int, std::pair<std::size_t, double>> votes;  // label -> (count, summed distance)
  for (std::size_t i = 0; i < k; ++i) {
    auto& v = votes[std::get<1>(scratch[i])];
    ++v.first;
    v.second += std::get<0>(scratch[i]);
  }
  int best = votes.begin()->first;
  auto best_vote = votes.begin()->second;
  for (const auto& [label, vote] : votes) {
    if (vote.first > best_vote.first ||
        (vote.first == best_vote.first && vote.second < best_vote.second)) {
      best = label;
      best_vote = vote;
    }
  }
  return best;
}

}  // namespace

std::vector<int> knn_classify(const RepresentationSet& train, const Matrix& queries, std::size_t k,
                              std::size_t workers) {
  if (train.size() == 0) throw std::invalid_argument("knn_classify: empty training set");
  if (k == 0 || k > train.size()) throw std::invalid_argument("knn_classify: k must lie in [1, train size]");
  if (train.labels.size() != train.size()) throw ShapeError("knn_classify: label count != row count");
  if (queries.rows() > 0 && queries.cols() != train.z.cols()) {
    throw ShapeError("knn_classify: query width " + std::to_string(queries.cols()) +
                     " != representation width " + std::to_string(train.z.cols()));
  }
  std::vector<int> out(queries.rows());
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, queries.rows()));
  auto run = [&](std::size_t first, std::size_t stride) {
    std::vector<std::tuple<double, int, std::size_t>> scratch;
    for (std::size_t i = first; i < queries.rows(); i += stride) {
      out[i] = classify_one(train, queries.row(i), k, scratch);
    }
  };
  if (workers == 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w, workers);
    for (auto& t : pool) t.join();
  }
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw ShapeError("accuracy: length mismatch");
  if (predicted.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

RepresentationSet encode_dataset(const Model& model, const Dataset& ds) {
  RepresentationSet reps;
  reps.z = Matrix(ds.size(), model.params.dims().hidden);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Sequence& s = ds.sequences[i];
    const Representation r = model.encode(s);
    std::copy(r.z.span().begin(), r.z.span().end(), reps.z.row(i).begin());
    reps.labels.push_back(s.label.value_or(-1));
    reps.ids.push_back(s.id);
  }
  return reps;
}

Dataset to_dataset(const RepresentationSet& reps) {
  Dataset ds;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    Sequence s;
    s.id = i < reps.ids.size() ? reps.ids[i] : std::to_string(i);
    if (i < reps.labels.size() && reps.labels[i] >= 0) s.label = reps.labels[i];
    s.obs = Matrix(1, reps.z.cols());
    std::copy(reps.z.row(i).begin(), reps.z.row(i).end(), s.obs.row(0).begin());
    ds.sequences.push_back(std::move(s));
  }
  return ds;
}

RepresentationSet from_dataset(const Dataset& ds) {
  RepresentationSet reps;
  reps.z = Matrix(ds.size(), ds.width());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Sequence& s = ds.sequences[i];
    if (s.length() != 1) {
      throw DataError("representation record '" + s.id + "' must have exactly one row");
    }
    std::copy(s.obs.row(0).begin(), s.obs.row(0).end(), reps.z.row(i).begin());
    reps.labels.push_back(s.label.value_or(-1));
    reps.ids.push_back(s.id);
  }
  return reps;
}

namespace {

std::vector<int> require_labels(const Dataset& ds, const char* which) {
  std::vector<int> labels;
  for (const Sequence& s : ds.sequences) {
    if (!s.label) throw DataError(std::string(which) + " sequence '" + s.id + "' has no label");
    labels.push_back(*s.label);
  }
  return labels;
}

}  // namespace

double evaluate_pipeline(const Dataset& train_ds, const Dataset& test_ds, const Model& model,
                         std::size_t k) {
  require_labels(train_ds, "training");
  const std::vector<int> truth = require_labels(test_ds, "test");
  const RepresentationSet train_reps = encode_dataset(model, train_ds);
  const RepresentationSet test_reps = encode_dataset(model, test_ds);
  return accuracy(knn_classify(train_reps, test_reps.z, k, model.config.workers), truth);
}

SemiSupReport semi_sup_run(const Dataset& full_train, const Dataset& test, double labeled_fraction,
                           std::span<const double> unlabeled_fractions, const TrainConfig& cfg,
                           std::size_t k) {
  if (!(labeled_fraction > 0.0 && labeled_fraction <= 1.0)) {
    throw std::invalid_argument("labeled fraction must lie in (0, 1]");
  }
  if (unlabeled_fractions.empty()) throw std::invalid_argument("no unlabeled fractions given");
  for (std::size_t i = 0; i < unlabeled_fractions.size(); ++i) {
    const double f = unlabeled_fractions[i];
    if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("unlabeled fractions must lie in (0, 1]");
    if (i > 0 && !(f > unlabeled_fractions[i - 1])) {
      throw std::invalid_argument("unlabeled fractions must be strictly increasing");
    }
  }
  if (full_train.empty()) throw std::invalid_argument("semi_sup_run: empty training set");

  const std::vector<double> parts{labeled_fraction, 1.0 - labeled_fraction};
  const auto idx = split_indices(full_train, parts, full_train.labeled(), cfg.seed);
  const Dataset labeled = subset(full_train, idx[0]);
  // Labeled subset first, then the remainder in a seeded order.
  std::vector<std::size_t> rest = idx[1];
  Rng rng(cfg.seed ^ 0x5eed5eed5eed5eedULL);
  rng.shuffle(std::span<std::size_t>(rest));
  std::vector<std::size_t> ordering = idx[0];
  ordering.insert(ordering.end(), rest.begin(), rest.end());

  SemiSupReport report;
  report.labeled_fraction = labeled_fraction;
  report.seed = cfg.seed;
  for (double f : unlabeled_fractions) {
    auto count = static_cast<std::size_t>(std::llround(f * static_cast<double>(full_train.size())));
    count = std::clamp<std::size_t>(count, 1, full_train.size());
    Dataset unlabeled = subset(full_train, std::span<const std::size_t>(ordering.data(), count));
    for (Sequence& s : unlabeled.sequences) s.label.reset();
    const FitResult fit = fit_model(unlabeled, Dataset{}, cfg);
    report.points.push_back({f, count, evaluate_pipeline(labeled, test, fit.model, k)});
  }
  return report;
}

std::string format_report_csv(const SemiSupReport& report) {
  auto num = [](double v) {
    char buf[32];
    return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
  };
  std::ostringstream os;
  os << "fraction,train_size,accuracy\n";
  for (const auto& p : report.points) {
    os << num(p.unlabeled_fraction) << ',' << p.train_size << ',' << num(p.accuracy) << '\n';
  }
  return os.str();
}

}  // namespace isa
