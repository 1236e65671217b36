#pragma once

// Integrated sequence autoencoder: a shared LSTM encoder whose final hidden
// state is the sequence representation, a holistic LSTM decoder that rebuilds
// the full sequence from that representation, and an atomistic head that
// predicts each next observation from the encoder's running hidden state.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "isa/linalg.hpp"
#include "isa/sequence.hpp"

namespace isa {

class Rng;

enum class Gate : std::size_t { input = 0, forget = 1, output = 2, candidate = 3 };
inline constexpr std::size_t kGateCount = 4;

struct ModelDims {
  std::size_t input_width = 0;  // D' (includes the stop channel when used)
  std::size_t hidden = 0;       // H
  std::size_t head_hidden = 0;  // width of the holistic output nonlinearity
  std::size_t atom_hidden = 0;  // width of the atomistic nonlinearity

  /// Head widths default to the hidden size.
  static ModelDims make(std::size_t input_width, std::size_t hidden) noexcept {
    return {input_width, hidden, hidden, hidden};
  }
  bool operator==(const ModelDims&) const = default;
};

/// Per-gate tensors of one LSTM cell. `V` (latent conditioning) is only
/// populated for the decoder; for the encoder those matrices are 0x0.
struct LstmCellParams {
  std::array<Matrix, kGateCount> W;  // H x H recurrent
  std::array<Matrix, kGateCount> U;  // H x D' input
  std::array<Matrix, kGateCount> V;  // H x H latent (decoder only)
  std::array<Matrix, kGateCount> b;  // H x 1 bias

  bool conditioned() const noexcept { return !V[0].empty(); }
  bool operator==(const LstmCellParams&) const = default;
};

/// Every learnable tensor of the model, addressable by a stable name.
struct IsaTensors {
  LstmCellParams encoder;
  LstmCellParams decoder;
  // Holistic output: xhat_t = M relu(A z + B xhat_{t-1} + E hhat_t)
  Matrix M, A, B, E;
  // Atomistic output: xcheck_{t+1} = P relu(F h_t)
  Matrix P, F;

  static IsaTensors zeros(const ModelDims& dims);

  ModelDims dims() const noexcept;
  std::size_t parameter_count() const noexcept;

  /// Visits tensors in canonical order as fn(name, tensor).
  template <class Fn>
  void for_each(Fn&& fn) {
    visit(*this, fn);
  }
  template <class Fn>
  void for_each(Fn&& fn) const {
    visit(*this, fn);
  }

  bool operator==(const IsaTensors&) const = default;

 private:
  template <class Self, class Fn>
  static void visit(Self& self, Fn& fn) {
    static constexpr std::array<std::string_view, kGateCount> suffix{"i", "f", "o", "c"};
    auto cell = [&](std::string_view prefix, auto& c) {
      for (std::size_t g = 0; g < kGateCount; ++g) fn(join(prefix, "W", suffix[g]), c.W[g]);
      for (std::size_t g = 0; g < kGateCount; ++g) fn(join(prefix, "U", suffix[g]), c.U[g]);
      if (c.conditioned()) {
        for (std::size_t g = 0; g < kGateCount; ++g) fn(join(prefix, "V", suffix[g]), c.V[g]);
      }
      for (std::size_t g = 0; g < kGateCount; ++g) fn(join(prefix, "b", suffix[g]), c.b[g]);
    };
    cell("encoder", self.encoder);
    cell("decoder", self.decoder);
    fn(std::string("head.M"), self.M);
    fn(std::string("head.A"), self.A);
    fn(std::string("head.B"), self.B);
    fn(std::string("head.E"), self.E);
    fn(std::string("atom.P"), self.P);
    fn(std::string("atom.F"), self.F);
  }
  static std::string join(std::string_view prefix, std::string_view kind, std::string_view gate) {
    std::string s(prefix);
    s += '.';
    s += kind;
    s += '_';
    s += gate;
    return s;
  }
};

struct IsaParameters : IsaTensors {};
struct IsaGradients : IsaTensors {};

/// Glorot-uniform matrices, zero biases except the forget gates (1.0).
IsaParameters init_parameters(const ModelDims& dims, Rng& rng);

struct Representation {
  Vector z;
  std::string source_id;
};

struct CellState {
  Vector h;
  Vector c;
};

struct DecodeStep {
  Vector xhat;
  Vector h;
  Vector c;
};

/// Throws ShapeError unless the sequence width equals the model input width.
void check_compatible(const IsaParameters& p, const Sequence& s);

CellState encoder_step(const IsaParameters& p, const Vector& h_prev, const Vector& c_prev,
                       const Vector& x);

/// z = h_T after T encoder steps from a zero state.
Representation encode(const IsaParameters& p, const Sequence& s);

/// All encoder hidden states, one row per step.
Matrix encoder_states(const IsaParameters& p, const Sequence& s);

/// M relu(A z + B xhat_prev + E h).
Vector output_head(const IsaParameters& p, const Vector& z, const Vector& xhat_prev,
                   const Vector& h);

DecodeStep holistic_decode_step(const IsaParameters& p, const Vector& z, const Vector& h_prev,
                                const Vector& c_prev, const Vector& xhat_prev);

/// Unrolls the decoder from zero state and zero previous output for `steps`
/// steps, feeding back its own outputs. Returns steps x D'.
Matrix holistic_reconstruct(const IsaParameters& p, const Vector& z, std::size_t steps);

Vector atomistic_predict(const IsaParameters& p, const Vector& h);

double loss_holistic(const IsaParameters& p, std::span<const Sequence> batch);
double loss_atomistic(const IsaParameters& p, std::span<const Sequence> batch);
double loss_integrated(const IsaParameters& p, std::span<const Sequence> batch, double alpha);

struct LossAndGradients {
  double loss = 0.0;
  IsaGradients grads;
};

/// Exact gradient of loss_integrated by backpropagation through time. The
/// batch is split across `workers` threads; per-sequence gradients are summed
/// in batch order so the result does not depend on the worker count.
LossAndGradients backward(const IsaParameters& p, std::span<const Sequence> batch, double alpha,
                          std::size_t workers = 1);

}  // namespace isa
