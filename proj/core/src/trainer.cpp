#include "isa/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "isa/errors.hpp"
#include "isa/rng.hpp"

namespace isa {

using nlohmann::json;

std::string_view to_string(Precision p) noexcept { return p == Precision::f32 ? "single" : "double"; }

Precision parse_precision(std::string_view name) {
  if (name == "single" || name == "f32" || name == "float") return Precision::f32;
  if (name == "double" || name == "f64") return Precision::f64;
  throw std::invalid_argument("unknown precision '" + std::string(name) + "' (single|double)");
}

void TrainConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  if (hidden_size == 0) throw std::invalid_argument("hidden size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(clip_lo < clip_hi)) throw std::invalid_argument("clip bounds must satisfy lo < hi");
  if (epochs == 0) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (workers == 0) throw std::invalid_argument("workers must be >= 1");
  stop.validate();
}

std::string to_json_string(const TrainConfig& c) {
  json j{{"alpha", c.alpha},
         {"hidden_size", c.hidden_size},
         {"learning_rate", c.learning_rate},
         {"clip_lo", c.clip_lo},
         {"clip_hi", c.clip_hi},
         {"epochs", c.epochs},
         {"batch_size", c.batch_size},
         {"seed", c.seed},
         {"stop", {{"mechanism", to_string(c.stop.mechanism)}, {"gamma", c.stop.gamma}}},
         {"precision", to_string(c.precision)},
         {"rho", c.rho},
         {"epsilon", c.epsilon},
         {"workers", c.workers},
         {"normalize", c.normalize}};
  return j.dump();
}

TrainConfig train_config_from_json(std::string_view text) {
  TrainConfig c;
  try {
    const json j = json::parse(text);
    c.alpha = j.at("alpha").get<double>();
    c.hidden_size = j.at("hidden_size").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.clip_lo = j.at("clip_lo").get<double>();
    c.clip_hi = j.at("clip_hi").get<double>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.stop.mechanism = parse_stop_mechanism(j.at("stop").at("mechanism").get<std::string>());
    c.stop.gamma = j.at("stop").at("gamma").get<double>();
    c.precision = parse_precision(j.at("precision").get<std::string>());
    c.rho = j.at("rho").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.workers = j.at("workers").get<std::size_t>();
    c.normalize = j.at("normalize").get<bool>();
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid training config: ") + e.what());
  }
  return c;
}

RmspropState RmspropState::fresh(const ModelDims& dims, double rho, double epsilon) {
  return {IsaTensors::zeros(dims), rho, epsilon};
}

void clip_gradients_in_place(IsaGradients& g, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("clip bounds must satisfy lo < hi");
  g.for_each([&](const std::string&, Matrix& m) {
    for (double& x : m.flat()) x = std::clamp(x, lo, hi);
  });
}

IsaGradients clip_gradients(IsaGradients g, double lo, double hi) {
  clip_gradients_in_place(g, lo, hi);
  return g;
}

namespace {

std::vector<Matrix*> tensor_list(IsaTensors& t) {
  std::vector<Matrix*> out;
  t.for_each([&](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}

std::vector<const Matrix*> tensor_list(const IsaTensors& t) {
  std::vector<const Matrix*> out;
  t.for_each([&](const std::string&, const Matrix& m) { out.push_back(&m); });
  return out;
}

void round_to_single(IsaTensors& t) {
  t.for_each([](const std::string&, Matrix& m) {
    for (double& x : m.flat()) x = static_cast<double>(static_cast<float>(x));
  });
}

void scale(IsaTensors& t, double factor) {
  t.for_each([&](const std::string&, Matrix& m) {
    for (double& x : m.flat()) x *= factor;
  });
}

bool finite(const IsaTensors& t) {
  bool ok = true;
  t.for_each([&](const std::string&, const Matrix& m) { ok = ok && all_finite(m.flat()); });
  return ok;
}

}  // namespace

void rmsprop_step(IsaParameters& p, const IsaGradients& g, RmspropState& st, double lr) {
  auto params = tensor_list(p);
  auto grads = tensor_list(g);
  auto accs = tensor_list(st.mean_square);
  if (params.size() != grads.size() || params.size() != accs.size()) {
    throw ShapeError("rmsprop_step: parameter, gradient and state layouts differ");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto pv = params[k]->flat();
    auto gv = grads[k]->flat();
    auto av = accs[k]->flat();
    if (pv.size() != gv.size() || pv.size() != av.size()) {
      throw ShapeError("rmsprop_step: tensor " + std::to_string(k) + " shape mismatch");
    }
    for (std::size_t i = 0; i < pv.size(); ++i) {
      av[i] = st.rho * av[i] + (1.0 - st.rho) * gv[i] * gv[i];
      pv[i] -= lr * gv[i] / std::sqrt(av[i] + st.epsilon);
    }
  }
}

std::size_t TrainHistory::total_updates() const noexcept {
  std::size_t n = 0;
  for (const auto& e : epochs) n += e.updates;
  return n;
}

TrainResult train(std::span<const Sequence> train_set, std::span<const Sequence> val_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  const std::size_t width = train_set.front().width();
  auto check_widths = [&](std::span<const Sequence> set, const char* which) {
    for (const Sequence& s : set) {
      if (s.width() != width) {
        std::ostringstream os;
        os << "train: inconsistent widths: " << which << " sequence '" << s.id << "' has width "
           << s.width() << ", expected " << width;
        throw DataError(os.str());
      }
      if (s.length() < 2) throw DataError("train: sequence '" + s.id + "' has fewer than 2 steps");
    }
  };
  check_widths(train_set, "training");
  check_widths(val_set, "validation");

  std::vector<Sequence> data;
  data.reserve(train_set.size());
  for (const Sequence& s : train_set) data.push_back(augment(s, cfg.stop));
  std::vector<Sequence> val;
  val.reserve(val_set.size());
  for (const Sequence& s : val_set) val.push_back(augment(s, cfg.stop));

  const ModelDims dims = ModelDims::make(data.front().width(), cfg.hidden_size);
  Rng rng(cfg.seed);
  TrainResult result{init_parameters(dims, rng), {}};
  if (cfg.precision == Precision::f32) round_to_single(result.params);
  RmspropState state = RmspropState::fresh(dims, cfg.rho, cfg.epsilon);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Sequence> batch;
  batch.reserve(cfg.batch_size);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    rng.shuffle(std::span<std::size_t>(order));
    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      ++batch_no;
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      batch.clear();
      for (std::size_t k = begin; k < end; ++k) batch.push_back(data[order[k]]);

      LossAndGradients lg = backward(result.params, batch, cfg.alpha, cfg.workers);
      if (!std::isfinite(lg.loss) || !finite(lg.grads)) {
        std::ostringstream os;
        os << "non-finite loss or gradient at epoch " << epoch << ", batch " << batch_no;
        throw NumericError(os.str());
      }
      loss_sum += lg.loss;
      scale(lg.grads, 1.0 / static_cast<double>(batch.size()));
      clip_gradients_in_place(lg.grads, cfg.clip_lo, cfg.clip_hi);
      rmsprop_step(result.params, lg.grads, state, cfg.learning_rate);
      if (cfg.precision == Precision::f32) round_to_single(result.params);
      ++rec.updates;
    }
    rec.train_loss = loss_sum / static_cast<double>(data.size());
    if (!val.empty()) {
      rec.val_loss = loss_integrated(result.params, val, cfg.alpha) / static_cast<double>(val.size());
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec, result.params);
  }
  return result;
}

Sequence Model::prepare(const Sequence& s) const {
  return augment(norm ? norm->apply(s) : s, config.stop);
}

Representation Model::encode(const Sequence& s) const { return isa::encode(params, prepare(s)); }

FitResult fit_model(const Dataset& train_ds, const Dataset& val_ds, const TrainConfig& cfg,
                    const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_ds.empty()) throw std::invalid_argument("fit_model: empty training set");
  std::optional<NormStats> norm;
  if (cfg.normalize) norm = fit_normalization(train_ds.sequences);
  auto apply = [&](const Dataset& ds) {
    std::vector<Sequence> out;
    out.reserve(ds.size());
    for (const Sequence& s : ds.sequences) out.push_back(norm ? norm->apply(s) : s);
    return out;
  };
  const std::vector<Sequence> tr = apply(train_ds);
  const std::vector<Sequence> va = apply(val_ds);
  TrainResult res = train(tr, va, cfg, on_epoch);
  return {Model{std::move(res.params), cfg, std::move(norm)}, std::move(res.history)};
}

double validation_loss(const Model& model, const Dataset& ds) {
  if (ds.empty()) throw std::invalid_argument("validation_loss: empty dataset");
  std::vector<Sequence> prepared;
  prepared.reserve(ds.size());
  for (const Sequence& s : ds.sequences) prepared.push_back(model.prepare(s));
  return loss_integrated(model.params, prepared, model.config.alpha) /
         static_cast<double>(prepared.size());
}

std::size_t select_best(std::span<const TrainConfig> grid, std::span<const double> val_losses) {
  if (grid.empty()) throw std::invalid_argument("select_hyperparams: empty grid");
  if (grid.size() != val_losses.size()) throw std::invalid_argument("select_best: size mismatch");
  auto key = [&](std::size_t i) {
    const TrainConfig& c = grid[i];
    // NaN losses never win.
    const double loss = std::isnan(val_losses[i]) ? std::numeric_limits<double>::infinity() : val_losses[i];
    return std::make_tuple(loss, c.hidden_size, c.stop.gamma, c.alpha,
                           static_cast<int>(c.stop.mechanism), c.learning_rate, c.epochs,
                           c.batch_size, c.seed);
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (key(i) < key(best)) best = i;
  }
  return best;
}

Selection select_hyperparams(const Dataset& train_ds, const Dataset& val_ds,
                             std::span<const TrainConfig> grid) {
  if (grid.empty()) throw std::invalid_argument("select_hyperparams: empty grid");
  if (val_ds.empty()) throw std::invalid_argument("select_hyperparams: empty validation set");
  Selection sel;
  for (const TrainConfig& cfg : grid) {
    const FitResult fit = fit_model(train_ds, Dataset{}, cfg);
    sel.val_losses.push_back(validation_loss(fit.model, val_ds));
  }
  sel.best_index = select_best(grid, sel.val_losses);
  sel.best = grid[sel.best_index];
  return sel;
}

}  // namespace isa
