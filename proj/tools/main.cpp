#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "isa/checkpoint.hpp"
#include "isa/data.hpp"
#include "isa/dtw.hpp"
#include "isa/errors.hpp"
#include "isa/eval.hpp"
#include "isa/trainer.hpp"
#include "report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace isa::cli {
namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct Globals {
  std::size_t workers = 1;
  std::string data_dir;
  std::vector<std::string> argv;
};

fs::path resolve(const Globals& g, const std::string& p) {
  fs::path path(p);
  if (path.is_relative() && !g.data_dir.empty()) return fs::path(g.data_dir) / path;
  return path;
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  return fs::path(p.string() + suffix);
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof()) {
      throw std::invalid_argument(flag + ": cannot parse '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument(flag + ": empty list");
  return out;
}

json config_json(const TrainConfig& cfg) { return json::parse(to_json_string(cfg)); }

void write_representations(const RepresentationSet& reps, const fs::path& out,
                           const std::optional<fs::path>& csv) {
  save_sequences(to_dataset(reps), out);
  if (!csv) return;
  std::ostringstream os;
  os << "id,label";
  for (std::size_t j = 0; j < reps.z.cols(); ++j) os << ",z" << j;
  os << '\n';
  for (std::size_t i = 0; i < reps.size(); ++i) {
    os << reps.ids[i] << ',';
    if (reps.labels[i] >= 0) os << reps.labels[i];
    for (double v : reps.z.row(i)) os << ',' << format_number(v);
    os << '\n';
  }
  write_text(*csv, os.str());
}

// Flags shared by every command that trains a model.
struct TrainFlags {
  TrainConfig cfg;
  std::string stop = "none";
  std::string precision = "double";
  std::string config_file;
  bool no_normalize = false;
  CLI::App* app = nullptr;

  void add(CLI::App* sub) {
    app = sub;
    sub->add_option("--config", config_file, "JSON training config used as the base; explicit flags override");
    sub->add_option("--alpha", cfg.alpha, "Holistic/atomistic loss balance in [0,1]")->capture_default_str();
    sub->add_option("--hidden", cfg.hidden_size, "Hidden units H")->capture_default_str();
    sub->add_option("--stop", stop, "Stop feature: none|linear|tanh|exp")->capture_default_str();
    sub->add_option("--gamma", cfg.stop.gamma, "Stop feature shape parameter")->capture_default_str();
    sub->add_option("--lr", cfg.learning_rate, "RMSprop learning rate")->capture_default_str();
    sub->add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
    sub->add_option("--batch", cfg.batch_size, "Mini-batch size")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    sub->add_option("--precision", precision, "Parameter precision: single|double")->capture_default_str();
    sub->add_option("--clip-lo", cfg.clip_lo, "Lower gradient clip bound")->capture_default_str();
    sub->add_option("--clip-hi", cfg.clip_hi, "Upper gradient clip bound")->capture_default_str();
    sub->add_option("--rho", cfg.rho, "RMSprop decay")->capture_default_str();
    sub->add_option("--epsilon", cfg.epsilon, "RMSprop epsilon")->capture_default_str();
    sub->add_flag("--no-normalize", no_normalize, "Skip per-feature standardization");
  }

  bool given(const std::string& name) const { return app->count(name) > 0; }

  TrainConfig resolve(const Globals& g) const {
    TrainConfig out = cfg;
    out.stop.mechanism = parse_stop_mechanism(stop);
    out.precision = parse_precision(precision);
    out.normalize = !no_normalize;
    if (!config_file.empty()) {
      std::ifstream in(isa::cli::resolve(g, config_file));
      if (!in) throw DataError("cannot open config " + config_file);
      std::stringstream ss;
      ss << in.rdbuf();
      std::string text = ss.str();
      // Accept either a bare config or a manifest that embeds one.
      const json j = json::parse(text, nullptr, false);
      if (!j.is_discarded() && j.contains("config")) text = j.at("config").dump();
      TrainConfig base = train_config_from_json(text);
      if (given("--alpha")) base.alpha = out.alpha;
      if (given("--hidden")) base.hidden_size = out.hidden_size;
      if (given("--stop")) base.stop.mechanism = out.stop.mechanism;
      if (given("--gamma")) base.stop.gamma = out.stop.gamma;
      if (given("--lr")) base.learning_rate = out.learning_rate;
      if (given("--epochs")) base.epochs = out.epochs;
      if (given("--batch")) base.batch_size = out.batch_size;
      if (given("--seed")) base.seed = out.seed;
      if (given("--precision")) base.precision = out.precision;
      if (given("--clip-lo")) base.clip_lo = out.clip_lo;
      if (given("--clip-hi")) base.clip_hi = out.clip_hi;
      if (given("--rho")) base.rho = out.rho;
      if (given("--epsilon")) base.epsilon = out.epsilon;
      if (given("--no-normalize")) base.normalize = false;
      out = base;
    }
    out.workers = g.workers;
    out.validate();
    return out;
  }
};

// ---------------------------------------------------------------------------

struct GenCirclesCmd {
  std::size_t per_class = 100;
  std::string loops = "2,3";
  std::string len = "50:200";
  double radius = 1.0;
  std::optional<double> noise;
  bool random_phase = false;
  std::uint64_t seed = 0;
  std::string split = "0.6,0.15,0.25";
  std::string out_dir = ".";
  std::string prefix = "circles";

  void add(CLI::App& app, const Globals& g, std::function<void()>& action) {
    auto* sub = app.add_subcommand("gen-circles", "Generate the synthetic circle dataset");
    sub->add_option("--per-class", per_class, "Sequences per class")->capture_default_str();
    sub->add_option("--loops", loops, "Comma-separated loop count per class")->capture_default_str();
    sub->add_option("--len", len, "Length range lo:hi (inclusive)")->capture_default_str();
    sub->add_option("--radius", radius, "Circle radius")->capture_default_str();
    sub->add_option("--noise", noise, "Gaussian noise std (default 0.01 * radius)");
    sub->add_flag("--random-phase", random_phase, "Draw a random starting angle per sequence");
    sub->add_option("--seed", seed, "Random seed")->capture_default_str();
    sub->add_option("--split", split, "Train,val,test fractions; a single 1 writes one file")->capture_default_str();
    sub->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
    sub->add_option("--prefix", prefix, "Output file prefix")->capture_default_str();
    sub->callback([this, &g, &action] { action = [this, &g] { run(g); }; });
  }

  void run(const Globals& g) const {
    CircleSpec spec;
    spec.samples_per_class = per_class;
    spec.loops_per_class = parse_list<int>(loops, "--loops");
    const auto colon = len.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("--len must be lo:hi");
    spec.length_lo = parse_list<std::size_t>(len.substr(0, colon), "--len").at(0);
    spec.length_hi = parse_list<std::size_t>(len.substr(colon + 1), "--len").at(0);
    spec.radius = radius;
    spec.noise_std = noise;
    spec.random_phase = random_phase;
    spec.seed = seed;
    const std::vector<double> fractions = parse_list<double>(split, "--split");

    const Dataset ds = gen_circles(spec);
    const fs::path dir = resolve(g, out_dir);
    Manifest m("gen-circles", g.argv);
    m.seed(seed);
    m.config({{"per_class", per_class},
              {"loops", spec.loops_per_class},
              {"length_lo", spec.length_lo},
              {"length_hi", spec.length_hi},
              {"radius", radius},
              {"noise_std", spec.resolved_noise_std()},
              {"random_phase", random_phase},
              {"split", fractions}});
    if (fractions.size() == 1 && fractions[0] == 1.0) {
      const fs::path p = dir / (prefix + ".jsonl");
      save_sequences(ds, p);
      m.output("all", p);
      std::cout << "wrote " << ds.size() << " sequences to " << p.string() << '\n';
    } else {
      static const char* names[] = {"train", "val", "test"};
      if (fractions.size() > 3) throw std::invalid_argument("--split takes at most three fractions");
      const auto parts = isa::split(ds, fractions, true, seed);
      for (std::size_t k = 0; k < parts.size(); ++k) {
        const fs::path p = dir / (prefix + "-" + names[k] + ".jsonl");
        save_sequences(parts[k], p);
        m.output(names[k], p);
        std::cout << "wrote " << parts[k].size() << " sequences to " << p.string() << '\n';
      }
    }
    m.write(dir / (prefix + "-manifest.json"));
  }
};

struct TrainCmd {
  TrainFlags flags;
  std::string train_path, val_path, out_path, plot_path;

  void add(CLI::App& app, const Globals& g, std::function<void()>& action) {
    auto* sub = app.add_subcommand("train", "Train an integrated sequence autoencoder");
    sub->add_option("--train", train_path, "Training sequence file")->required();
    sub->add_option("--val", val_path, "Validation sequence file");
    sub->add_option("--out", out_path, "Checkpoint path")->required();
    sub->add_option("--plot", plot_path, "Write an SVG loss curve");
    flags.add(sub);
    sub->callback([this, &g, &action] { action = [this, &g] { run(g); }; });
  }

  void run(const Globals& g) const {
    const TrainConfig cfg = flags.resolve(g);
    const fs::path train_file = resolve(g, train_path);
    const Dataset train_ds = load_sequences(train_file);
    Dataset val_ds;
    if (!val_path.empty()) val_ds = load_sequences(resolve(g, val_path));
    const fs::path out = resolve(g, out_path);
    const fs::path history_path = with_suffix(out, ".history.csv");

    Manifest m("train", g.argv);
    m.seed(cfg.seed);
    m.config(config_json(cfg));
    m.input("train", train_file);
    if (!val_path.empty()) m.input("val", resolve(g, val_path));

    const FitResult fit = fit_model(train_ds, val_ds, cfg, [](const EpochRecord& r, const IsaParameters&) {
      std::cerr << "epoch " << r.epoch << " train_loss " << format_number(r.train_loss);
      if (r.val_loss) std::cerr << " val_loss " << format_number(*r.val_loss);
      std::cerr << '\n';
    });
    save_checkpoint(fit.model, out);

    std::ostringstream hist;
    hist << "epoch,train_loss,val_loss,wall_seconds,updates\n";
    for (const EpochRecord& r : fit.history.epochs) {
      hist << r.epoch << ',' << format_number(r.train_loss) << ','
           << (r.val_loss ? format_number(*r.val_loss) : "") << ',' << format_number(r.wall_seconds)
           << ',' << r.updates << '\n';
    }
    write_text(history_path, hist.str());
    m.output("checkpoint", out);
    m.output("history", history_path);

    if (!plot_path.empty()) {
      Series tr{"train", {}}, va{"validation", {}};
      for (const EpochRecord& r : fit.history.epochs) {
        tr.points.emplace_back(static_cast<double>(r.epoch), r.train_loss);
        if (r.val_loss) va.points.emplace_back(static_cast<double>(r.epoch), *r.val_loss);
      }
      std::vector<Series> series{tr};
      if (!va.points.empty()) series.push_back(va);
      write_text(resolve(g, plot_path), svg_line_plot(series, "Integrated loss", "epoch", "loss"));
      m.output("plot", resolve(g, plot_path));
    }
    m.write(with_suffix(out, ".manifest.json"));
    std::cout << "final train_loss " << format_number(fit.history.epochs.back().train_loss) << '\n';
  }
};

struct EncodeCmd {
  std::string model_path, input_path, out_path, csv_path;

  void add(CLI::App& app, const Globals& g, std::function<void()>& action) {
    auto* sub = app.add_subcommand("encode", "Encode sequences into fixed-length representations");
    sub->add_option("--model", model_path, "Checkpoint")->required();
    sub->add_option("--input", input_path, "Sequence file")->required();
    sub->add_option("--out", out_path, "Representation file (sequence format, T=1)")->required();
    sub->add_option("--csv", csv_path, "Also write a delimited table");
    sub->callback([this, &g, &action] { action = [this, &g] { run(g); }; });
  }

  void run(const Globals& g) const {
    const Model model = load_checkpoint(resolve(g, model_path));
    const Dataset ds = load_sequences(resolve(g, input_path));
    const RepresentationSet reps = encode_dataset(model, ds);
    const fs::path out = resolve(g, out_path);
    std::optional<fs::path> csv;
    if (!csv_path.empty()) csv = resolve(g, csv_path);
    write_representations(reps, out, csv);

    Manifest m("encode", g.argv);
    m.config(config_json(model.config));
    m.input("model", resolve(g, model_path));
    m.input("sequences", resolve(g, input_path));
    m.output("representations", out);
    if (csv) m.output("csv", *csv);
    m.write(with_suffix(out, ".manifest.json"));
    std::cout << "encoded " << reps.size() << " sequences into " << reps.z.cols() << " dims\n";
  }
};

struct ReconstructCmd {
  std::string model_path, input_path, out_path, trace_path, plot_path, plot_id;

  void add(CLI::App& app, const Globals& g, std::function<void()>& action) {
    auto* sub = app.add_subcommand("reconstruct", "Holistic reconstruction with stop-feature trace");
    sub->add_option("--model", model_path, "Checkpoint")->required();
    sub->add_option("--input", input_path, "Sequence file")->required();
    sub->add_option("--out", out_path, "Reconstructed sequence file")->required();
    sub->add_option("--trace", trace_path, "Per-step trace table (default <out>.trace.csv)");
    sub->add_option("--plot", plot_path, "SVG of observed and reconstructed stop feature");
    sub->add_option("--plot-id", plot_id, "Sequence id to plot (default: first)");
    sub->callback([this, &g, &action] { action = [this, &g] { run(g); }; });
  }

  void run(const Globals& g) const {
    const Model model = load_checkpoint(resolve(g, model_path));
    const Dataset ds = load_sequences(resolve(g, input_path));
    const bool has_stop = model.config.stop.enabled();
    Dataset out_ds;
    out_ds.class_names = ds.class_names;
    std::ostringstream trace;
    trace << "id,t,stop_observed,stop_reconstructed,sequence_mse\n";
    std::vector<Series> plot;
    for (const Sequence& s : ds.sequences) {
      const Sequence prepared = model.prepare(s);
      const Vector z = encode(model.params, prepared).z;
      Sequence rec{s.id, s.label, holistic_reconstruct(model.params, z, s.length())};
      double err = 0.0;
      for (std::size_t i = 0; i < rec.obs.flat().size(); ++i) {
        const double d = rec.obs.flat()[i] - prepared.obs.flat()[i];
        err += d * d;
      }
      err /= static_cast<double>(s.length());
      const bool plot_this = !plot_path.empty() && plot.empty() && (plot_id.empty() || plot_id == s.id);
      if (has_stop) {
        const std::size_t c = prepared.width() - 1;
        Series obs{s.id + " observed", {}}, rc{s.id + " reconstructed", {}};
        for (std::size_t t = 0; t < s.length(); ++t) {
          trace << s.id << ',' << t + 1 << ',' << format_number(prepared.obs(t, c)) << ','
                << format_number(rec.obs(t, c)) << ',' << format_number(err) << '\n';
          obs.points.emplace_back(static_cast<double>(t + 1), prepared.obs(t, c));
          rc.points.emplace_back(static_cast<double>(t + 1), rec.obs(t, c));
        }
        if (plot_this) plot = {obs, rc};
        rec = strip(rec);
      } else {
        trace << s.id << ",,,," << format_number(err) << '\n';
      }
      if (model.norm) rec = model.norm->invert(rec);
      out_ds.sequences.push_back(std::move(rec));
    }
    const fs::path out = resolve(g, out_path);
    const fs::path trace_file = trace_path.empty() ? with_suffix(out, ".trace.csv") : resolve(g, trace_path);
    save_sequences(out_ds, out);
    write_text(trace_file, trace.str());

    Manifest m("reconstruct", g.argv);
    m.config(config_json(model.config));
    m.input("model", resolve(g, model_path));
    m.input("sequences", resolve(g, input_path));
    m.output("reconstruction", out);
    m.output("trace", trace_file);
    if (!plot_path.empty()) {
      if (!has_stop) throw std::invalid_argument("--plot needs a model trained with a stop feature");
      if (plot.empty()) throw DataError("no sequence with id '" + plot_id + "'");
      write_text(resolve(g, plot_path), svg_line_plot(plot, "Stop feature", "t", "v_t"));
      m.output("plot", resolve(g, plot_path));
    }
    m.write(with_suffix(out, ".manifest.json"));
    std::cout << "reconstructed " << out_ds.size() << " sequences\n";
  }
};

struct DtwCmd {
  std::string vocab_path, input_path, out_path, csv_path, metric = "euclidean";
  std::optional<std::size_t> band;
  bool normalize = false;

  void add(CLI::App& app, const Globals& g, std::function<void()>& action) {
    auto* sub = app.add_subcommand("dtw", "DTW distance-to-vocabulary representations");
    sub->add_option("--vocab", vocab_path, "Vocabulary sequence file")->required();
    sub->add_option("--input", input_path, "Sequence file to represent")->required();
    sub->add_option("--out", out_path, "Representation file")->required();
    sub->add_option("--csv", csv_path, "Also write a delimited table");
    sub->add_option("--band", band, "Sakoe-Chiba band radius");
    sub->add_option("--metric", metric, "euclidean|squared")->capture_default_str();
    sub->add_flag("--normalize-length", normalize, "Divide by the sum of both lengths");
    sub->callback([this, &g, &action] { action = [this, &g] { run(g); }; });
  }

  void run(const Globals& g) const {
    DtwConfig cfg;
    cfg.band_radius = band;
    cfg.metric = parse_local_metric(metric);
    cfg.normalize_by_length = normalize;
    const Dataset vocab = load_sequences(resolve(g, vocab_path));
    const Dataset ds = load_sequences(resolve(g, input_path));
    if (vocab.empty()) throw DataError("empty vocabulary");
    RepresentationSet reps;
    reps.z = Matrix(ds.size(), vocab.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const Vector r = dtw_representation(ds.sequences[i], vocab.sequences, cfg, g.workers);
      std::copy(r.span().begin(), r.span().end(), reps.z.row(i).begin());
      reps.labels.push_back(ds.sequences[i].label.value_or(-1));
      reps.ids.push_back(ds.sequences[i].id);
    }
    const fs::path out = resolve(g, out_path);
    std::optional<fs::path> csv;
    if (!csv_path.empty()) csv = resolve(g, csv_path);
    write_representations(reps, out, csv);

    Manifest m("dtw", g.argv);
    m.config({{"band_radius", band ? json(*band) : json(nullptr)},
              {"metric", to_string(cfg.metric)},
              {"normalize_by_length", normalize}});
    m.input("vocabulary", resolve(g, vocab_path));
    m.input("sequences", resolve(g, input_path));
    m.output("representations", out);
    if (csv) m.output("csv", *csv);
    m.write(with_suffix(out, ".manifest.json"));
    std::cout << "represented " << ds.size() << " sequences against " << vocab.size() << " references\n";
  }
};

struct EvalCmd {
  std::string model_path, train_path, test_path, out_path, predictions_path;
  bool reps_input = false;
  std::size_t k = 1;

  void add(CLI::App& app, const Globals& g, std::function<void()>& action) {
    auto* sub = app.add_subcommand("eval", "k-NN accuracy on representations");
    sub->add_option("--model", model_path, "Checkpoint; sequences are encoded with it");
    sub->add_flag("--representations", reps_input, "Inputs are representation files (encode/dtw output)");
    sub->add_option("--train", train_path, "Labeled reference file")->required();
    sub->add_option("--test", test_path, "Labeled query file")->required();
    sub->add_option("--k", k, "Neighbours")->capture_default_str();
    sub->add_option("--out", out_path, "Accuracy report")->required();
    sub->add_option("--predictions", predictions_path, "Per-query predictions table");
    sub->callback([this, &g, &action] { action = [this, &g] { run(g); }; });
  }

  void run(const Globals& g) const {
    if (reps_input == !model_path.empty()) {
      throw std::invalid_argument("eval needs exactly one of --model or --representations");
    }
    const Dataset train_ds = load_sequences(resolve(g, train_path));
    const Dataset test_ds = load_sequences(resolve(g, test_path));
    RepresentationSet train_reps, test_reps;
    Manifest m("eval", g.argv);
    if (reps_input) {
      train_reps = from_dataset(train_ds);
      test_reps = from_dataset(test_ds);
    } else {
      const Model model = load_checkpoint(resolve(g, model_path));
      m.config(config_json(model.config));
      m.input("model", resolve(g, model_path));
      train_reps = encode_dataset(model, train_ds);
      test_reps = encode_dataset(model, test_ds);
    }
    for (int l : train_reps.labels) {
      if (l < 0) throw DataError("training references must all be labeled");
    }
    for (int l : test_reps.labels) {
      if (l < 0) throw DataError("test queries must all be labeled");
    }
    const std::vector<int> pred = knn_classify(train_reps, test_reps.z, k, g.workers);
    const double acc = accuracy(pred, test_reps.labels);

    const fs::path out = resolve(g, out_path);
    write_text(out, "k,train_size,test_size,accuracy\n" + std::to_string(k) + "," +
                        std::to_string(train_reps.size()) + "," + std::to_string(test_reps.size()) +
                        "," + format_number(acc) + "\n");
    m.input("train", resolve(g, train_path));
    m.input("test", resolve(g, test_path));
    m.output("report", out);
    if (!predictions_path.empty()) {
      std::ostringstream os;
      os << "id,label,predicted\n";
      for (std::size_t i = 0; i < pred.size(); ++i) {
        os << test_reps.ids[i] << ',' << test_reps.labels[i] << ',' << pred[i] << '\n';
      }
      write_text(resolve(g, predictions_path), os.str());
      m.output("predictions", resolve(g, predictions_path));
    }
    m.write(with_suffix(out, ".manifest.json"));
    std::cout << "accuracy " << format_number(acc) << '\n';
  }
};

struct SemiSupCmd {
  TrainFlags flags;
  std::string train_path, test_path, out_path, fractions = "0.2,0.4,0.6,0.8,1.0", plot_path;
  double labeled = 0.2;
  std::size_t k = 1;

  void add(CLI::App& app, const Globals& g, std::function<void()>& action) {
    auto* sub = app.add_subcommand("semisup", "Accuracy as the unlabeled training pool grows");
    sub->add_option("--train", train_path, "Labeled training pool")->required();
    sub->add_option("--test", test_path, "Labeled test file")->required();
    sub->add_option("--labeled-fraction", labeled, "Fraction kept labeled for the classifier")->capture_default_str();
    sub->add_option("--fractions", fractions, "Increasing unlabeled fractions")->capture_default_str();
    sub->add_option("--k", k, "Neighbours")->capture_default_str();
    sub->add_option("--out", out_path, "Report table")->required();
    sub->add_option("--plot", plot_path, "SVG accuracy curve");
    flags.add(sub);
    sub->callback([this, &g, &action] { action = [this, &g] { run(g); }; });
  }

  void run(const Globals& g) const {
    const TrainConfig cfg = flags.resolve(g);
    const std::vector<double> f = parse_list<double>(fractions, "--fractions");
    const Dataset train_ds = load_sequences(resolve(g, train_path));
    const Dataset test_ds = load_sequences(resolve(g, test_path));
    const SemiSupReport report = semi_sup_run(train_ds, test_ds, labeled, f, cfg, k);
    const fs::path out = resolve(g, out_path);
    write_text(out, format_report_csv(report));

    Manifest m("semisup", g.argv);
    m.seed(cfg.seed);
    json c = config_json(cfg);
    c["labeled_fraction"] = labeled;
    c["unlabeled_fractions"] = f;
    c["k"] = k;
    m.config(c);
    m.input("train", resolve(g, train_path));
    m.input("test", resolve(g, test_path));
    m.output("report", out);
    if (!plot_path.empty()) {
      Series s{"1-NN accuracy", {}};
      for (const SemiSupPoint& p : report.points) s.points.emplace_back(p.unlabeled_fraction, p.accuracy);
      write_text(resolve(g, plot_path), svg_line_plot({s}, "Semi-supervised", "unlabeled fraction", "accuracy"));
      m.output("plot", resolve(g, plot_path));
    }
    m.write(with_suffix(out, ".manifest.json"));
    for (const SemiSupPoint& p : report.points) {
      std::cout << "fraction " << format_number(p.unlabeled_fraction) << " train_size " << p.train_size
                << " accuracy " << format_number(p.accuracy) << '\n';
    }
  }
};

struct TuneCmd {
  TrainFlags flags;
  std::string train_path, val_path, out_path;
  std::string hidden_grid = "32,64,128", alpha_grid, gamma_grid, stop_grid;

  void add(CLI::App& app, const Globals& g, std::function<void()>& action) {
    auto* sub = app.add_subcommand("tune", "Grid search by validation loss");
    sub->add_option("--train", train_path, "Training sequence file")->required();
    sub->add_option("--val", val_path, "Validation sequence file")->required();
    sub->add_option("--out", out_path, "Best configuration (JSON)")->required();
    sub->add_option("--hidden-grid", hidden_grid, "Hidden sizes")->capture_default_str();
    sub->add_option("--alpha-grid", alpha_grid, "Alpha values (default: --alpha)");
    sub->add_option("--gamma-grid", gamma_grid, "Gamma values (default: --gamma)");
    sub->add_option("--stop-grid", stop_grid, "Stop mechanisms (default: --stop)");
    flags.add(sub);
    sub->callback([this, &g, &action] { action = [this, &g] { run(g); }; });
  }

  void run(const Globals& g) const {
    const TrainConfig base = flags.resolve(g);
    const auto hidden = parse_list<std::size_t>(hidden_grid, "--hidden-grid");
    const auto alphas = alpha_grid.empty() ? std::vector<double>{base.alpha} : parse_list<double>(alpha_grid, "--alpha-grid");
    const auto gammas = gamma_grid.empty() ? std::vector<double>{base.stop.gamma} : parse_list<double>(gamma_grid, "--gamma-grid");
    std::vector<StopMechanism> stops{base.stop.mechanism};
    if (!stop_grid.empty()) {
      stops.clear();
      for (const std::string& name : parse_list<std::string>(stop_grid, "--stop-grid")) {
        stops.push_back(parse_stop_mechanism(name));
      }
    }
    std::vector<TrainConfig> grid;
    for (std::size_t h : hidden) {
      for (double a : alphas) {
        for (StopMechanism s : stops) {
          // gamma is irrelevant without a shaped stop feature
          const bool shaped = s == StopMechanism::tanh || s == StopMechanism::exp;
          for (std::size_t gi = 0; gi < (shaped ? gammas.size() : 1); ++gi) {
            TrainConfig c = base;
            c.hidden_size = h;
            c.alpha = a;
            c.stop.mechanism = s;
            c.stop.gamma = shaped ? gammas[gi] : base.stop.gamma;
            c.validate();
            grid.push_back(c);
          }
        }
      }
    }
    const Dataset train_ds = load_sequences(resolve(g, train_path));
    const Dataset val_ds = load_sequences(resolve(g, val_path));
    const Selection sel = select_hyperparams(train_ds, val_ds, grid);

    const fs::path out = resolve(g, out_path);
    write_text(out, config_json(sel.best).dump(2) + "\n");
    std::ostringstream os;
    os << "hidden,alpha,stop,gamma,val_loss\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      os << grid[i].hidden_size << ',' << format_number(grid[i].alpha) << ','
         << to_string(grid[i].stop.mechanism) << ',' << format_number(grid[i].stop.gamma) << ','
         << format_number(sel.val_losses[i]) << '\n';
    }
    const fs::path losses = with_suffix(out, ".losses.csv");
    write_text(losses, os.str());

    Manifest m("tune", g.argv);
    m.seed(base.seed);
    m.config({{"base", config_json(base)}, {"grid_size", grid.size()}});
    m.input("train", resolve(g, train_path));
    m.input("val", resolve(g, val_path));
    m.output("best", out);
    m.output("losses", losses);
    m.write(with_suffix(out, ".manifest.json"));
    std::cout << "best " << to_json_string(sel.best) << " val_loss "
              << format_number(sel.val_losses[sel.best_index]) << '\n';
  }
};

}  // namespace
}  // namespace isa::cli

int main(int argc, char** argv) {
  using namespace isa::cli;
  Globals g;
  g.argv.assign(argv, argv + argc);
  if (const char* dir = std::getenv("ISA_DATA_DIR")) g.data_dir = dir;

  CLI::App app{"Integrated sequence autoencoder toolkit"};
  app.set_version_flag("--version", ISA_VERSION);
  app.require_subcommand(1);
  app.add_option("--workers", g.workers, "Worker threads for data-parallel steps")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--data-dir", g.data_dir, "Base directory for relative paths (env ISA_DATA_DIR)");

  std::function<void()> action;
  GenCirclesCmd gen;
  TrainCmd train;
  EncodeCmd enc;
  ReconstructCmd rec;
  DtwCmd dtw;
  EvalCmd eval;
  SemiSupCmd semi;
  TuneCmd tune;
  gen.add(app, g, action);
  train.add(app, g, action);
  enc.add(app, g, action);
  rec.add(app, g, action);
  dtw.add(app, g, action);
  eval.add(app, g, action);
  semi.add(app, g, action);
  tune.add(app, g, action);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    action();
  } catch (const isa::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  } catch (const isa::ShapeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const isa::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
