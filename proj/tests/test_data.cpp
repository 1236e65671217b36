#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <set>

#include "isa/data.hpp"
#include "isa/errors.hpp"

namespace isa {
namespace {

CircleSpec clean_spec() {
  CircleSpec spec;
  spec.samples_per_class = 10;
  spec.noise_std = 0.0;
  spec.seed = 3;
  return spec;
}

// Sum of wrapped angle increments along the trajectory.
double unwrapped_angle(const Sequence& s) {
  double total = 0.0;
  for (std::size_t t = 1; t < s.length(); ++t) {
    double d = std::atan2(s.obs(t, 1), s.obs(t, 0)) - std::atan2(s.obs(t - 1, 1), s.obs(t - 1, 0));
    while (d > std::numbers::pi) d -= 2 * std::numbers::pi;
    while (d <= -std::numbers::pi) d += 2 * std::numbers::pi;
    total += d;
  }
  return total;
}

TEST(Circles, CountsLabelsAndLengths) {
  CircleSpec spec;
  spec.seed = 7;
  const Dataset ds = gen_circles(spec);
  EXPECT_EQ(ds.size(), 200u);
  std::map<int, int> per_class;
  for (const Sequence& s : ds.sequences) {
    ++per_class[*s.label];
    EXPECT_GE(s.length(), 50u);
    EXPECT_LE(s.length(), 200u);
    EXPECT_EQ(s.width(), 2u);
  }
  EXPECT_EQ(per_class[0], 100);
  EXPECT_EQ(per_class[1], 100);
  EXPECT_EQ(ds.class_names, (std::vector<std::string>{"loops=2", "loops=3"}));
}

TEST(Circles, NoiselessGeometry) {
  const Dataset ds = gen_circles(clean_spec());
  for (const Sequence& s : ds.sequences) {
    const std::size_t last = s.length() - 1;
    EXPECT_NEAR(s.obs(0, 0), s.obs(last, 0), 1e-12);
    EXPECT_NEAR(s.obs(0, 1), s.obs(last, 1), 1e-12);
    for (std::size_t t = 0; t < s.length(); ++t) {
      EXPECT_NEAR(s.obs(t, 0) * s.obs(t, 0) + s.obs(t, 1) * s.obs(t, 1), 1.0, 1e-12);
    }
  }
}

TEST(Circles, UnwrappedAngleMatchesLoopCount) {
  const Dataset ds = gen_circles(clean_spec());
  for (const Sequence& s : ds.sequences) {
    const double loops = *s.label == 0 ? 2.0 : 3.0;
    EXPECT_NEAR(unwrapped_angle(s), 2.0 * std::numbers::pi * loops, 1e-9) << s.id;
  }
}

TEST(Circles, DeterministicPerSeedAndGeneralizesClasses) {
  CircleSpec spec;
  spec.samples_per_class = 5;
  spec.seed = 11;
  EXPECT_EQ(gen_circles(spec).sequences, gen_circles(spec).sequences);
  spec.loops_per_class = {2, 3, 4};
  EXPECT_EQ(gen_circles(spec).class_count(), 3u);
  spec.random_phase = true;
  EXPECT_EQ(gen_circles(spec).size(), 15u);
}

TEST(Circles, RejectsInvalidCircleSpec) {
  CircleSpec spec;
  spec.length_lo = 1;
  EXPECT_THROW(gen_circles(spec), std::invalid_argument);
  spec = CircleSpec{};
  spec.loops_per_class = {0};
  EXPECT_THROW(gen_circles(spec), std::invalid_argument);
  spec = CircleSpec{};
  spec.noise_std = -1.0;
  EXPECT_THROW(gen_circles(spec), std::invalid_argument);
}

TEST(SequenceFile, RoundTripIsExact) {
  CircleSpec spec;
  spec.samples_per_class = 3;
  spec.seed = 5;
  Dataset ds = gen_circles(spec);
  ds.sequences[1].label.reset();
  ds.sequences[2].obs(0, 0) = 0.1 + 0.2;  // not representable in short decimal
  const auto path = std::filesystem::temp_directory_path() / "isa_roundtrip.jsonl";
  save_sequences(ds, path);
  const Dataset back = load_sequences(path);
  EXPECT_EQ(back.sequences, ds.sequences);
  std::filesystem::remove(path);
}

TEST(SequenceFile, FormatIsOneRecordPerLine) {
  Dataset ds;
  ds.sequences.push_back(Sequence{"a", 1, Matrix{{1.5, 2.0}}});
  ds.sequences.push_back(Sequence{"b", std::nullopt, Matrix{{0.25, -1.0}, {3.0, 4.0}}});
  EXPECT_EQ(format_sequences(ds),
            "{\"features\":[[1.5,2.0]],\"id\":\"a\",\"label\":1}\n"
            "{\"features\":[[0.25,-1.0],[3.0,4.0]],\"id\":\"b\"}\n");
}

TEST(SequenceFile, EmptyInputIsEmptyDataset) {
  EXPECT_TRUE(parse_sequences("").empty());
  EXPECT_TRUE(parse_sequences("\n\n").empty());
}

TEST(SequenceFile, MixedWidthsNameBothLines) {
  const std::string text =
      "{\"id\":\"a\",\"features\":[[1,2,3]]}\n"
      "\n"
      "{\"id\":\"b\",\"features\":[[1,2,3,4]]}\n";
  try {
    parse_sequences(text, "f");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  }
}

TEST(SequenceFile, MalformedLineReportsLineNumber) {
  try {
    parse_sequences("{\"id\":\"a\",\"features\":[[1]]}\n{not json\n", "f");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("f:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_sequences("{\"id\":\"a\",\"features\":[[1],[1,2]]}"), DataError);
  EXPECT_THROW(parse_sequences("{\"id\":\"a\",\"features\":[[null]]}"), DataError);
  EXPECT_THROW(parse_sequences("{\"features\":[[1]]}"), DataError);
  EXPECT_THROW(load_sequences("/nonexistent/isa.jsonl"), DataError);
}

TEST(Normalize, FitSubsetHasZeroMeanUnitStd) {
  CircleSpec spec;
  spec.samples_per_class = 20;
  spec.seed = 2;
  Dataset ds = gen_circles(spec);
  for (Sequence& s : ds.sequences) {
    for (std::size_t t = 0; t < s.length(); ++t) s.obs(t, 0) = 3.0 * s.obs(t, 0) + 7.0;
  }
  // Constant third feature.
  std::vector<std::size_t> fit{0, 1, 2, 3, 25, 26, 27};
  const Dataset norm = normalize(ds, fit);
  ASSERT_TRUE(norm.normalization);
  for (std::size_t d = 0; d < 2; ++d) {
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i : fit) {
      const Sequence& s = norm.sequences[i];
      for (std::size_t t = 0; t < s.length(); ++t) {
        sum += s.obs(t, d);
        sq += s.obs(t, d) * s.obs(t, d);
        ++n;
      }
    }
    const double mean = sum / static_cast<double>(n);
    const double sd = std::sqrt(sq / static_cast<double>(n) - mean * mean);
    EXPECT_LE(std::abs(mean), 1e-9);
    EXPECT_NEAR(sd, 1.0, 1e-6);
  }
  const Sequence back = norm.normalization->invert(norm.sequences[5]);
  for (std::size_t t = 0; t < back.length(); ++t) {
    EXPECT_NEAR(back.obs(t, 0), ds.sequences[5].obs(t, 0), 1e-12);
  }
}

TEST(Normalize, ConstantFeaturePassesThroughCentered) {
  Dataset ds;
  ds.sequences.push_back(Sequence{"a", std::nullopt, Matrix{{4.0, 1.0}, {4.0, 3.0}}});
  std::vector<std::size_t> fit{0};
  const Dataset n = normalize(ds, fit);
  EXPECT_EQ(n.normalization->scale[0], 1.0);
  EXPECT_EQ(n.sequences[0].obs(0, 0), 0.0);
  EXPECT_THROW(normalize(ds, std::span<const std::size_t>{}), std::invalid_argument);
}

TEST(Split, DisjointCoverAndStratified) {
  CircleSpec spec;
  spec.samples_per_class = 33;
  spec.loops_per_class = {2, 3, 4};
  spec.seed = 4;
  const Dataset ds = gen_circles(spec);
  const std::vector<double> fractions{0.6, 0.15, 0.25};
  const auto parts = split_indices(ds, fractions, true, 9);
  std::set<std::size_t> seen;
  std::size_t total = 0;
  for (const auto& part : parts) {
    total += part.size();
    seen.insert(part.begin(), part.end());
  }
  EXPECT_EQ(total, ds.size());
  EXPECT_EQ(seen.size(), ds.size());
  for (std::size_t k = 0; k < parts.size(); ++k) {
    std::map<int, int> per_class;
    for (std::size_t i : parts[k]) ++per_class[*ds.sequences[i].label];
    for (auto& [label, count] : per_class) {
      EXPECT_LE(std::abs(count - fractions[k] * 33.0), 1.0) << "part " << k << " class " << label;
    }
  }
  EXPECT_EQ(split_indices(ds, fractions, true, 9), parts);
  EXPECT_NE(split_indices(ds, fractions, true, 10), parts);
}

TEST(Split, Errors) {
  Dataset unlabeled;
  unlabeled.sequences.push_back(Sequence{"a", std::nullopt, Matrix(2, 1)});
  const std::vector<double> half{0.5, 0.5};
  EXPECT_THROW(split(unlabeled, half, true, 1), std::invalid_argument);
  EXPECT_NO_THROW(split(unlabeled, half, false, 1));
  const std::vector<double> bad{0.5, 0.4};
  EXPECT_THROW(split(unlabeled, bad, false, 1), std::invalid_argument);
}

}  // namespace
}  // namespace isa
