#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "isa/checkpoint.hpp"
#include "isa/errors.hpp"
#include "support/oracles.hpp"

namespace isa {
namespace {

Model random_model(Precision precision, bool with_norm) {
  Rng rng(21);
  Model m;
  m.config.hidden_size = 5;
  m.config.stop = {StopMechanism::tanh, 2.0};
  m.config.alpha = 0.3;
  m.config.precision = precision;
  m.params = testing::random_parameters(ModelDims::make(3, 5), rng);
  if (precision == Precision::f32) {
    m.params.for_each([](const std::string&, Matrix& t) {
      for (double& x : t.flat()) x = static_cast<float>(x);
    });
  }
  if (with_norm) m.norm = NormStats{{0.5, -1.25}, {2.0, 0.75}};
  return m;
}

std::vector<Sequence> probe_sequences() {
  Rng rng(5);
  std::vector<Sequence> out;
  for (int i = 0; i < 10; ++i) out.push_back(testing::random_sequence(rng, 3 + i, 2, 1.0, "p"));
  return out;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  for (Precision precision : {Precision::f64, Precision::f32}) {
    const Model m = random_model(precision, true);
    const Model back = deserialize_checkpoint(serialize_checkpoint(m));
    EXPECT_EQ(back.params, m.params);
    EXPECT_EQ(back.config, m.config);
    EXPECT_EQ(back.norm, m.norm);
    for (const Sequence& s : probe_sequences()) {
      EXPECT_EQ(back.encode(s).z, m.encode(s).z);
    }
  }
}

TEST(Checkpoint, SinglePrecisionStoresFourByteEntries) {
  const Model m64 = random_model(Precision::f64, false);
  const Model m32 = random_model(Precision::f32, false);
  const std::size_t count = m64.params.parameter_count();
  const std::size_t s64 = serialize_checkpoint(m64).size();
  const std::size_t s32 = serialize_checkpoint(m32).size();
  EXPECT_GE(s64 - s32, 4 * count - 64);
  EXPECT_LE(s64 - s32, 4 * count + 64);
}

TEST(Checkpoint, FileRoundTrip) {
  const Model m = random_model(Precision::f64, false);
  const auto path = std::filesystem::temp_directory_path() / "isa_ckpt_test.bin";
  save_checkpoint(m, path);
  const Model back = load_checkpoint(path);
  EXPECT_EQ(back.params, m.params);
  EXPECT_FALSE(back.norm.has_value());
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), DataError);
}

TEST(Checkpoint, VersionMismatchRejected) {
  std::string bytes = serialize_checkpoint(random_model(Precision::f64, false));
  const std::uint32_t v = 99;
  std::memcpy(bytes.data() + 8, &v, sizeof v);
  try {
    deserialize_checkpoint(bytes);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, TruncationRejected) {
  const std::string bytes = serialize_checkpoint(random_model(Precision::f64, false));
  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{40}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, cut)), DataError) << cut;
  }
  EXPECT_THROW(deserialize_checkpoint(bytes + "x"), DataError);
}

TEST(Checkpoint, CorruptionRejected) {
  std::string bytes = serialize_checkpoint(random_model(Precision::f64, false));
  bytes[bytes.size() - 20] ^= 0x01;
  EXPECT_THROW(deserialize_checkpoint(bytes), DataError);
  bytes = serialize_checkpoint(random_model(Precision::f64, false));
  bytes[0] = 'X';
  EXPECT_THROW(deserialize_checkpoint(bytes), DataError);
}

TEST(Checkpoint, ShapeTableInconsistencyRejected) {
  std::string bytes = serialize_checkpoint(random_model(Precision::f64, false));
  // First tensor record: find its name and bump the row count that follows.
  const std::string name = "encoder.W_i";
  const std::size_t at = bytes.find(name);
  ASSERT_NE(at, std::string::npos);
  const std::size_t rows_at = at + name.size() + 1;
  std::uint64_t rows = 0;
  std::memcpy(&rows, bytes.data() + rows_at, sizeof rows);
  ++rows;
  std::memcpy(bytes.data() + rows_at, &rows, sizeof rows);
  EXPECT_THROW(deserialize_checkpoint(bytes), DataError);
}

}  // namespace
}  // namespace isa
