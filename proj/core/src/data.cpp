#include "isa/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "isa/errors.hpp"
#include "isa/rng.hpp"

namespace isa {

using nlohmann::json;

void validate(const Sequence& s) {
  if (s.length() == 0) throw DataError("sequence '" + s.id + "' has no observations");
  if (s.width() == 0) throw DataError("sequence '" + s.id + "' has zero width");
  if (!all_finite(s.obs.flat())) throw DataError("sequence '" + s.id + "' has non-finite values");
}

Sequence NormStats::apply(const Sequence& s) const {
  if (s.width() != mean.size()) {
    std::ostringstream os;
    os << "normalization expects width " << mean.size() << ", sequence '" << s.id << "' has "
       << s.width();
    throw ShapeError(os.str());
  }
  Sequence out = s;
  for (std::size_t r = 0; r < out.length(); ++r) {
    auto row = out.obs.row(r);
    for (std::size_t d = 0; d < row.size(); ++d) row[d] = (row[d] - mean[d]) / scale[d];
  }
  return out;
}

Sequence NormStats::invert(const Sequence& s) const {
  if (s.width() != mean.size()) throw ShapeError("inverse normalization: width mismatch");
  Sequence out = s;
  for (std::size_t r = 0; r < out.length(); ++r) {
    auto row = out.obs.row(r);
    for (std::size_t d = 0; d < row.size(); ++d) row[d] = row[d] * scale[d] + mean[d];
  }
  return out;
}

std::size_t Dataset::width() const noexcept {
  return sequences.empty() ? 0 : sequences.front().width();
}

bool Dataset::labeled() const noexcept {
  return !sequences.empty() &&
         std::all_of(sequences.begin(), sequences.end(), [](const Sequence& s) { return s.label.has_value(); });
}

std::size_t Dataset::class_count() const noexcept {
  int hi = -1;
  for (const auto& s : sequences) {
    if (s.label) hi = std::max(hi, *s.label);
  }
  return static_cast<std::size_t>(hi + 1);
}

void CircleSpec::validate() const {
  if (samples_per_class == 0) throw std::invalid_argument("samples per class must be >= 1");
  if (loops_per_class.empty()) throw std::invalid_argument("at least one loop count is required");
  for (int k : loops_per_class) {
    if (k < 1) throw std::invalid_argument("loop counts must be >= 1");
  }
  if (length_lo < 2 || length_hi < length_lo) {
    throw std::invalid_argument("length range must satisfy 2 <= lo <= hi");
  }
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  if (!(resolved_noise_std() >= 0.0)) throw std::invalid_argument("noise std must be >= 0");
}

Dataset gen_circles(const CircleSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const double noise = spec.resolved_noise_std();
  Dataset ds;
  for (std::size_t c = 0; c < spec.loops_per_class.size(); ++c) {
    const int loops = spec.loops_per_class[c];
    ds.class_names.push_back("loops=" + std::to_string(loops));
    for (std::size_t n = 0; n < spec.samples_per_class; ++n) {
      const auto length = static_cast<std::size_t>(rng.uniform_int(
          static_cast<std::int64_t>(spec.length_lo), static_cast<std::int64_t>(spec.length_hi)));
      const double phase = spec.random_phase ? rng.uniform(0.0, 2.0 * std::numbers::pi) : 0.0;
      const double step = 2.0 * std::numbers::pi * loops / static_cast<double>(length - 1);
      Sequence s;
      s.id = "circle-c" + std::to_string(c) + "-" + std::to_string(n);
      s.label = static_cast<int>(c);
      s.obs = Matrix(length, 2);
      for (std::size_t i = 0; i < length; ++i) {
        const double theta = phase + step * static_cast<double>(i);
        double x = spec.radius * std::cos(theta);
        double y = spec.radius * std::sin(theta);
        if (noise > 0.0) {
          x += rng.normal(0.0, noise);
          y += rng.normal(0.0, noise);
        }
        s.obs(i, 0) = x;
        s.obs(i, 1) = y;
      }
      ds.sequences.push_back(std::move(s));
    }
  }
  return ds;
}

namespace {

Sequence parse_record(const json& rec, const std::string& where) {
  if (!rec.is_object()) throw DataError(where + ": record is not a JSON object");
  Sequence s;
  auto id = rec.find("id");
  if (id == rec.end() || !id->is_string()) throw DataError(where + ": missing string field 'id'");
  s.id = id->get<std::string>();
  if (auto label = rec.find("label"); label != rec.end() && !label->is_null()) {
    if (!label->is_number_integer()) throw DataError(where + ": 'label' must be an integer");
    s.label = label->get<int>();
  }
  auto features = rec.find("features");
  if (features == rec.end() || !features->is_array() || features->empty()) {
    throw DataError(where + ": 'features' must be a non-empty array of arrays");
  }
  const json& first = features->front();
  if (!first.is_array() || first.empty()) {
    throw DataError(where + ": each observation must be a non-empty array");
  }
  const std::size_t cols = first.size();
  s.obs = Matrix(features->size(), cols);
  for (std::size_t t = 0; t < features->size(); ++t) {
    const json& row = (*features)[t];
    if (!row.is_array() || row.size() != cols) {
      std::ostringstream os;
      os << where << ": observation " << t << " has width " << (row.is_array() ? row.size() : 0)
         << ", expected " << cols;
      throw DataError(os.str());
    }
    for (std::size_t d = 0; d < cols; ++d) {
      if (!row[d].is_number()) {
        std::ostringstream os;
        os << where << ": non-numeric value at observation " << t << ", feature " << d;
        throw DataError(os.str());
      }
      const double v = row[d].get<double>();
      if (!std::isfinite(v)) throw DataError(where + ": non-finite value");
      s.obs(t, d) = v;
    }
  }
  return s;
}

}  // namespace

Dataset parse_sequences(std::string_view text, const std::string& source) {
  Dataset ds;
  std::size_t line_no = 0;
  std::size_t width_line = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    const std::string where = source + ":" + std::to_string(line_no);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + ": malformed JSON (" + e.what() + ")");
    }
    Sequence s = parse_record(rec, where);
    if (ds.sequences.empty()) {
      width_line = line_no;
    } else if (s.width() != ds.width()) {
      std::ostringstream os;
      os << source << ": inconsistent widths: line " << width_line << " has width "
         << ds.width() << " but line " << line_no << " has width " << s.width();
      throw DataError(os.str());
    }
    if (s.label && *s.label < 0) throw DataError(where + ": negative label");
    ds.sequences.push_back(std::move(s));
  }
  return ds;
}

std::string format_sequences(const Dataset& ds) {
  std::string out;
  for (const Sequence& s : ds.sequences) {
    json rec;
    rec["id"] = s.id;
    if (s.label) rec["label"] = *s.label;
    json features = json::array();
    for (std::size_t t = 0; t < s.length(); ++t) {
      auto row = s.obs.row(t);
      features.push_back(json(std::vector<double>(row.begin(), row.end())));
    }
    rec["features"] = std::move(features);
    out += rec.dump();
    out += '\n';
  }
  return out;
}

Dataset load_sequences(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open sequence file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_sequences(buf.str(), path.string());
}

void save_sequences(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write sequence file " + path.string());
  out << format_sequences(ds);
  if (!out) throw DataError("write failed for " + path.string());
}

NormStats fit_normalization(std::span<const Sequence> fit_subset) {
  if (fit_subset.empty()) throw std::invalid_argument("normalization fit subset is empty");
  const std::size_t width = fit_subset.front().width();
  std::vector<double> sum(width, 0.0);
  std::size_t count = 0;
  for (const Sequence& s : fit_subset) {
    if (s.width() != width) throw ShapeError("normalization fit subset has mixed widths");
    for (std::size_t t = 0; t < s.length(); ++t) {
      auto row = s.obs.row(t);
      for (std::size_t d = 0; d < width; ++d) sum[d] += row[d];
    }
    count += s.length();
  }
  NormStats stats{std::vector<double>(width), std::vector<double>(width, 1.0)};
  for (std::size_t d = 0; d < width; ++d) stats.mean[d] = sum[d] / static_cast<double>(count);
  std::vector<double> sq(width, 0.0);
  for (const Sequence& s : fit_subset) {
    for (std::size_t t = 0; t < s.length(); ++t) {
      auto row = s.obs.row(t);
      for (std::size_t d = 0; d < width; ++d) {
        const double c = row[d] - stats.mean[d];
        sq[d] += c * c;
      }
    }
  }
  for (std::size_t d = 0; d < width; ++d) {
    const double sd = std::sqrt(sq[d] / static_cast<double>(count));
    if (sd >= 1e-12) stats.scale[d] = sd;
  }
  return stats;
}

Dataset normalize(const Dataset& ds, std::span<const std::size_t> fit_indices) {
  std::vector<Sequence> fit;
  fit.reserve(fit_indices.size());
  for (std::size_t i : fit_indices) fit.push_back(ds.sequences.at(i));
  NormStats stats = fit_normalization(fit);
  Dataset out;
  out.class_names = ds.class_names;
  out.sequences.reserve(ds.size());
  for (const Sequence& s : ds.sequences) out.sequences.push_back(stats.apply(s));
  out.normalization = std::move(stats);
  return out;
}

std::vector<std::vector<std::size_t>> split_indices(const Dataset& ds,
                                                    std::span<const double> fractions,
                                                    bool stratified, std::uint64_t seed) {
  if (fractions.empty()) throw std::invalid_argument("split: no fractions given");
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw std::invalid_argument("split: fractions must be nonnegative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("split: fractions must sum to 1");
  if (stratified && !ds.labeled()) {
    throw std::invalid_argument("split: stratified split requested on unlabeled data");
  }

  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    groups[stratified ? *ds.sequences[i].label : 0].push_back(i);
  }

  Rng rng(seed);
  std::vector<std::vector<std::size_t>> parts(fractions.size());
  for (auto& [label, members] : groups) {
    rng.shuffle(std::span<std::size_t>(members));
    const std::size_t n = members.size();
    std::vector<std::size_t> counts(fractions.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < fractions.size(); ++k) {
      const double exact = fractions[k] * static_cast<double>(n);
      counts[k] = static_cast<std::size_t>(std::floor(exact));
      assigned += counts[k];
      remainders.emplace_back(exact - std::floor(exact), k);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++counts[remainders[r % remainders.size()].second];
    std::size_t offset = 0;
    for (std::size_t k = 0; k < fractions.size(); ++k) {
      parts[k].insert(parts[k].end(), members.begin() + static_cast<std::ptrdiff_t>(offset),
                      members.begin() + static_cast<std::ptrdiff_t>(offset + counts[k]));
      offset += counts[k];
    }
  }
  for (auto& part : parts) std::sort(part.begin(), part.end());
  return parts;
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out;
  out.class_names = ds.class_names;
  out.normalization = ds.normalization;
  out.sequences.reserve(indices.size());
  for (std::size_t i : indices) out.sequences.push_back(ds.sequences.at(i));
  return out;
}

std::vector<Dataset> split(const Dataset& ds, std::span<const double> fractions, bool stratified,
                           std::uint64_t seed) {
  std::vector<Dataset> out;
  for (const auto& idx : split_indices(ds, fractions, stratified, seed)) out.push_back(subset(ds, idx));
  return out;
}

}  // namespace isa
