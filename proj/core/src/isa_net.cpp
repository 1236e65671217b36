#include "isa/isa_net.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "isa/errors.hpp"
#include "isa/rng.hpp"

namespace isa {

namespace {

using kernel::gemv_acc;
using kernel::gemv_t_acc;
using kernel::outer_acc;

constexpr std::size_t kI = 0;
constexpr std::size_t kF = 1;
constexpr std::size_t kO = 2;
constexpr std::size_t kC = 3;

LstmCellParams zero_cell(std::size_t hidden, std::size_t input, bool conditioned) {
  LstmCellParams c;
  for (std::size_t g = 0; g < kGateCount; ++g) {
    c.W[g] = Matrix(hidden, hidden);
    c.U[g] = Matrix(hidden, input);
    if (conditioned) c.V[g] = Matrix(hidden, hidden);
    c.b[g] = Matrix(hidden, 1);
  }
  return c;
}

// Pre-activation offsets per gate: b, plus V z for the decoder. Computed once
// per sequence and shared by every path that runs a cell step.
std::vector<double> gate_offsets(const LstmCellParams& cell, std::span<const double> z) {
  const std::size_t h = cell.b[0].rows();
  std::vector<double> out(kGateCount * h);
  for (std::size_t g = 0; g < kGateCount; ++g) {
    std::span<double> dst(out.data() + g * h, h);
    std::copy(cell.b[g].flat().begin(), cell.b[g].flat().end(), dst.begin());
    if (cell.conditioned()) gemv_acc(cell.V[g], z, dst);
  }
  return out;
}

// One LSTM step. `gates` receives the activated i, f, o, candidate blocks.
void cell_forward(const LstmCellParams& cell, std::span<const double> offsets,
                  std::span<const double> h_prev, std::span<const double> c_prev,
                  std::span<const double> x, std::span<double> gates, std::span<double> c,
                  std::span<double> tc, std::span<double> h) {
  const std::size_t n = h.size();
  std::copy(offsets.begin(), offsets.end(), gates.begin());
  for (std::size_t g = 0; g < kGateCount; ++g) {
    std::span<double> pre = gates.subspan(g * n, n);
    gemv_acc(cell.W[g], h_prev, pre);
    gemv_acc(cell.U[g], x, pre);
  }
  double* gi = gates.data() + kI * n;
  double* gf = gates.data() + kF * n;
  double* go = gates.data() + kO * n;
  double* gc = gates.data() + kC * n;
  for (std::size_t j = 0; j < n; ++j) {
    gi[j] = sigmoid(gi[j]);
    gf[j] = sigmoid(gf[j]);
    go[j] = sigmoid(go[j]);
    gc[j] = std::tanh(gc[j]);
    c[j] = gf[j] * c_prev[j] + gi[j] * gc[j];
    tc[j] = std::tanh(c[j]);
    h[j] = go[j] * tc[j];
  }
}

// Backward through one LSTM step. Accumulates parameter gradients into
// `grad`, writes dh_prev/dc_prev, and accumulates input and latent gradients
// into dx/dz when those spans are non-empty.
struct CellBackwardScratch {
  std::vector<double> dpre;
};

void cell_backward(const LstmCellParams& cell, LstmCellParams& grad,
                   std::span<const double> gates, std::span<const double> c_prev,
                   std::span<const double> tc, std::span<const double> h_prev,
                   std::span<const double> x, std::span<const double> z,
                   std::span<const double> dh, std::span<const double> dc_in,
                   std::span<double> dh_prev, std::span<double> dc_prev, std::span<double> dx,
                   std::span<double> dz, CellBackwardScratch& scratch) {
  const std::size_t n = dh.size();
  scratch.dpre.resize(kGateCount * n);
  const double* gi = gates.data() + kI * n;
  const double* gf = gates.data() + kF * n;
  const double* go = gates.data() + kO * n;
  const double* gc = gates.data() + kC * n;
  double* di = scratch.dpre.data() + kI * n;
  double* df = scratch.dpre.data() + kF * n;
  double* dout = scratch.dpre.data() + kO * n;
  double* dcand = scratch.dpre.data() + kC * n;
  for (std::size_t j = 0; j < n; ++j) {
    const double d_o = dh[j] * tc[j];
    const double dc = dh[j] * go[j] * (1.0 - tc[j] * tc[j]) + dc_in[j];
    di[j] = dc * gc[j] * gi[j] * (1.0 - gi[j]);
    df[j] = dc * c_prev[j] * gf[j] * (1.0 - gf[j]);
    dout[j] = d_o * go[j] * (1.0 - go[j]);
    dcand[j] = dc * gi[j] * (1.0 - gc[j] * gc[j]);
    dc_prev[j] = dc * gf[j];
  }
  std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
  for (std::size_t g = 0; g < kGateCount; ++g) {
    std::span<const double> d(scratch.dpre.data() + g * n, n);
    outer_acc(grad.W[g], d, h_prev);
    outer_acc(grad.U[g], d, x);
    auto db = grad.b[g].flat();
    for (std::size_t j = 0; j < n; ++j) db[j] += d[j];
    gemv_t_acc(cell.W[g], d, dh_prev);
    if (!dx.empty()) gemv_t_acc(cell.U[g], d, dx);
    if (cell.conditioned()) {
      outer_acc(grad.V[g], d, z);
      gemv_t_acc(cell.V[g], d, dz);
    }
  }
}

void output_head_forward(const IsaParameters& p, std::span<const double> az,
                         std::span<const double> xprev, std::span<const double> h,
                         std::span<double> q, std::span<double> xhat) {
  std::copy(az.begin(), az.end(), q.begin());
  gemv_acc(p.B, xprev, q);
  gemv_acc(p.E, h, q);
  std::fill(xhat.begin(), xhat.end(), 0.0);
  const std::size_t rows = p.M.rows();
  const std::size_t cols = p.M.cols();
  const double* m = p.M.flat().data();
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double r = q[j] > 0.0 ? q[j] : 0.0;
      acc += m[i * cols + j] * r;
    }
    xhat[i] += acc;
  }
}

void relu_mul(const Matrix& m, std::span<const double> pre, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  const double* a = m.flat().data();
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += a[i * cols + j] * (pre[j] > 0.0 ? pre[j] : 0.0);
    out[i] += acc;
  }
}

std::vector<double> head_offset(const IsaParameters& p, std::span<const double> z) {
  std::vector<double> az(p.A.rows(), 0.0);
  gemv_acc(p.A, z, az);
  return az;
}

// Forward activations of the encoder for a whole sequence.
struct EncoderTrace {
  Matrix gates, c, tc, h;
};

EncoderTrace run_encoder(const IsaParameters& p, const Sequence& s) {
  const std::size_t T = s.length();
  const std::size_t H = p.encoder.W[0].rows();
  EncoderTrace tr{Matrix(T, kGateCount * H), Matrix(T, H), Matrix(T, H), Matrix(T, H)};
  const std::vector<double> offsets = gate_offsets(p.encoder, {});
  const std::vector<double> zero(H, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    std::span<const double> h_prev = t == 0 ? std::span<const double>(zero) : tr.h.row(t - 1);
    std::span<const double> c_prev = t == 0 ? std::span<const double>(zero) : tr.c.row(t - 1);
    cell_forward(p.encoder, offsets, h_prev, c_prev, s.obs.row(t), tr.gates.row(t), tr.c.row(t),
                 tr.tc.row(t), tr.h.row(t));
  }
  return tr;
}

struct DecoderTrace {
  Matrix gates, c, tc, h, q, xhat;
};

DecoderTrace run_decoder(const IsaParameters& p, std::span<const double> z, std::size_t steps) {
  const std::size_t H = p.decoder.W[0].rows();
  const std::size_t D = p.M.rows();
  DecoderTrace tr{Matrix(steps, kGateCount * H), Matrix(steps, H), Matrix(steps, H),
                  Matrix(steps, H),  Matrix(steps, p.A.rows()), Matrix(steps, D)};
  const std::vector<double> offsets = gate_offsets(p.decoder, z);
  const std::vector<double> az = head_offset(p, z);
  const std::vector<double> zero_h(H, 0.0);
  const std::vector<double> zero_x(D, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    std::span<const double> h_prev = t == 0 ? std::span<const double>(zero_h) : tr.h.row(t - 1);
    std::span<const double> c_prev = t == 0 ? std::span<const double>(zero_h) : tr.c.row(t - 1);
    std::span<const double> x_prev = t == 0 ? std::span<const double>(zero_x) : tr.xhat.row(t - 1);
    cell_forward(p.decoder, offsets, h_prev, c_prev, x_prev, tr.gates.row(t), tr.c.row(t),
                 tr.tc.row(t), tr.h.row(t));
    output_head_forward(p, az, x_prev, tr.h.row(t), tr.q.row(t), tr.xhat.row(t));
  }
  return tr;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double sequence_loss_holistic(const IsaParameters& p, const Sequence& s, const EncoderTrace& enc) {
  const std::size_t T = s.length();
  const DecoderTrace dec = run_decoder(p, enc.h.row(T - 1), T);
  double acc = 0.0;
  for (std::size_t t = 0; t < T; ++t) acc += squared_distance(dec.xhat.row(t), s.obs.row(t));
  return acc / static_cast<double>(T);
}

double sequence_loss_atomistic(const IsaParameters& p, const Sequence& s,
                               const EncoderTrace& enc) {
  const std::size_t T = s.length();
  std::vector<double> a(p.F.rows());
  std::vector<double> pred(p.P.rows());
  double acc = 0.0;
  for (std::size_t t = 0; t + 1 < T; ++t) {
    std::fill(a.begin(), a.end(), 0.0);
    gemv_acc(p.F, enc.h.row(t), a);
    relu_mul(p.P, a, pred);
    acc += squared_distance(pred, s.obs.row(t + 1));
  }
  return acc / static_cast<double>(T - 1);
}

void check_batch(const IsaParameters& p, std::span<const Sequence> batch, std::size_t min_len) {
  if (batch.empty()) throw std::invalid_argument("loss: empty batch");
  for (const Sequence& s : batch) {
    check_compatible(p, s);
    if (s.length() < min_len) {
      std::ostringstream os;
      os << "sequence '" << s.id << "' has length " << s.length() << "; at least " << min_len
         << " steps are required";
      throw std::invalid_argument(os.str());
    }
  }
}

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in [0, 1]");
  }
}

void check_length(const Vector& v, std::size_t n, const char* what) {
  if (v.size() != n) {
    std::ostringstream os;
    os << what << ": expected length " << n << ", got " << v.size();
    throw ShapeError(os.str());
  }
}

struct SequenceLoss {
  double holistic = 0.0;
  double atomistic = 0.0;
};

// Loss terms and gradient contributions of one sequence. `g` must be zeroed.
SequenceLoss sequence_backward(const IsaParameters& p, const Sequence& s, double alpha,
                               IsaGradients& g) {
  const std::size_t T = s.length();
  const std::size_t H = p.encoder.W[0].rows();
  const std::size_t D = p.M.rows();
  const std::size_t Hg = p.A.rows();
  const std::size_t Ha = p.F.rows();
  SequenceLoss loss;
  CellBackwardScratch scratch;

  const EncoderTrace enc = run_encoder(p, s);
  Matrix dh_enc(T, H);  // external gradient into each encoder hidden state
  const std::vector<double> zero_h(H, 0.0);

  if (alpha < 1.0) {
    const double w = 2.0 * (1.0 - alpha) / static_cast<double>(T - 1);
    std::vector<double> a(Ha), pred(D), r(Ha), dpred(D), da(Ha);
    double acc = 0.0;
    for (std::size_t t = 0; t + 1 < T; ++t) {
      std::fill(a.begin(), a.end(), 0.0);
      gemv_acc(p.F, enc.h.row(t), a);
      relu_mul(p.P, a, pred);
      auto target = s.obs.row(t + 1);
      acc += squared_distance(pred, target);
      for (std::size_t j = 0; j < Ha; ++j) r[j] = a[j] > 0.0 ? a[j] : 0.0;
      for (std::size_t d = 0; d < D; ++d) dpred[d] = w * (pred[d] - target[d]);
      outer_acc(g.P, dpred, r);
      std::fill(da.begin(), da.end(), 0.0);
      gemv_t_acc(p.P, dpred, da);
      for (std::size_t j = 0; j < Ha; ++j) da[j] = a[j] > 0.0 ? da[j] : 0.0;
      outer_acc(g.F, da, enc.h.row(t));
      gemv_t_acc(p.F, da, dh_enc.row(t));
    }
    loss.atomistic = acc / static_cast<double>(T - 1);
  }

  if (alpha > 0.0) {
    std::span<const double> z = enc.h.row(T - 1);
    const DecoderTrace dec = run_decoder(p, z, T);
    const double w = 2.0 * alpha / static_cast<double>(T);
    std::vector<double> dz(H, 0.0), dh_next(H, 0.0), dc_next(H, 0.0), dh(H), dh_prev(H),
        dc_prev(H), dx_carry(D, 0.0), dx_new(D), dxhat(D), dq(Hg), r(Hg);
    const std::vector<double> zero_x(D, 0.0);
    double acc = 0.0;
    for (std::size_t t = 0; t < T; ++t) acc += squared_distance(dec.xhat.row(t), s.obs.row(t));
    for (std::size_t k = T; k-- > 0;) {
      auto xhat = dec.xhat.row(k);
      auto target = s.obs.row(k);
      for (std::size_t d = 0; d < D; ++d) dxhat[d] = w * (xhat[d] - target[d]) + dx_carry[d];
      std::span<const double> x_prev = k == 0 ? std::span<const double>(zero_x) : dec.xhat.row(k - 1);
      std::span<const double> h_prev = k == 0 ? std::span<const double>(zero_h) : dec.h.row(k - 1);
      std::span<const double> c_prev = k == 0 ? std::span<const double>(zero_h) : dec.c.row(k - 1);
      auto q = dec.q.row(k);

      for (std::size_t j = 0; j < Hg; ++j) r[j] = q[j] > 0.0 ? q[j] : 0.0;
      outer_acc(g.M, dxhat, r);
      std::fill(dq.begin(), dq.end(), 0.0);
      gemv_t_acc(p.M, dxhat, dq);
      for (std::size_t j = 0; j < Hg; ++j) dq[j] = q[j] > 0.0 ? dq[j] : 0.0;
      outer_acc(g.A, dq, z);
      gemv_t_acc(p.A, dq, dz);
      outer_acc(g.B, dq, x_prev);
      std::fill(dx_new.begin(), dx_new.end(), 0.0);
      gemv_t_acc(p.B, dq, dx_new);
      outer_acc(g.E, dq, dec.h.row(k));
      std::copy(dh_next.begin(), dh_next.end(), dh.begin());
      gemv_t_acc(p.E, dq, dh);

      cell_backward(p.decoder, g.decoder, dec.gates.row(k), c_prev, dec.tc.row(k), h_prev, x_prev,
                    z, dh, dc_next, dh_prev, dc_prev, dx_new, dz, scratch);
      dh_next.swap(dh_prev);
      dc_next.swap(dc_prev);
      dx_carry.swap(dx_new);
    }
    loss.holistic = acc / static_cast<double>(T);
    auto last = dh_enc.row(T - 1);
    for (std::size_t j = 0; j < H; ++j) last[j] += dz[j];
  }

  std::vector<double> dh(H), dh_next(H, 0.0), dc_next(H, 0.0), dh_prev(H), dc_prev(H);
  for (std::size_t k = T; k-- > 0;) {
    auto ext = dh_enc.row(k);
    for (std::size_t j = 0; j < H; ++j) dh[j] = ext[j] + dh_next[j];
    std::span<const double> h_prev = k == 0 ? std::span<const double>(zero_h) : enc.h.row(k - 1);
    std::span<const double> c_prev = k == 0 ? std::span<const double>(zero_h) : enc.c.row(k - 1);
    cell_backward(p.encoder, g.encoder, enc.gates.row(k), c_prev, enc.tc.row(k), h_prev,
                  s.obs.row(k), {}, dh, dc_next, dh_prev, dc_prev, {}, {}, scratch);
    dh_next.swap(dh_prev);
    dc_next.swap(dc_prev);
  }
  return loss;
}

void add_into(IsaTensors& dst, const IsaTensors& src) {
  std::vector<Matrix*> targets;
  dst.for_each([&](const std::string&, Matrix& m) { targets.push_back(&m); });
  std::size_t idx = 0;
  src.for_each([&](const std::string&, const Matrix& m) {
    auto out = targets[idx++]->flat();
    auto in = m.flat();
    for (std::size_t i = 0; i < in.size(); ++i) out[i] += in[i];
  });
}

void zero(IsaTensors& t) {
  t.for_each([](const std::string&, Matrix& m) { m.fill(0.0); });
}

}  // namespace

IsaTensors IsaTensors::zeros(const ModelDims& d) {
  if (d.input_width == 0 || d.hidden == 0 || d.head_hidden == 0 || d.atom_hidden == 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  IsaTensors t;
  t.encoder = zero_cell(d.hidden, d.input_width, false);
  t.decoder = zero_cell(d.hidden, d.input_width, true);
  t.M = Matrix(d.input_width, d.head_hidden);
  t.A = Matrix(d.head_hidden, d.hidden);
  t.B = Matrix(d.head_hidden, d.input_width);
  t.E = Matrix(d.head_hidden, d.hidden);
  t.P = Matrix(d.input_width, d.atom_hidden);
  t.F = Matrix(d.atom_hidden, d.hidden);
  return t;
}

ModelDims IsaTensors::dims() const noexcept {
  return {M.rows(), encoder.W[0].rows(), A.rows(), F.rows()};
}

std::size_t IsaTensors::parameter_count() const noexcept {
  std::size_t n = 0;
  for_each([&](const std::string&, const Matrix& m) { n += m.size(); });
  return n;
}

IsaParameters init_parameters(const ModelDims& dims, Rng& rng) {
  IsaParameters p{IsaTensors::zeros(dims)};
  p.for_each([&](const std::string& name, Matrix& m) {
    if (name.find(".b_") != std::string::npos) return;
    m = init_glorot(m.rows(), m.cols(), rng);
  });
  p.encoder.b[kF].fill(1.0);
  p.decoder.b[kF].fill(1.0);
  return p;
}

void check_compatible(const IsaParameters& p, const Sequence& s) {
  const std::size_t width = p.dims().input_width;
  if (s.width() != width) {
    std::ostringstream os;
    os << "sequence '" << s.id << "' has width " << s.width() << " but the model expects "
       << width;
    throw ShapeError(os.str());
  }
  if (s.length() == 0) throw ShapeError("sequence '" + s.id + "' is empty");
}

CellState encoder_step(const IsaParameters& p, const Vector& h_prev, const Vector& c_prev,
                       const Vector& x) {
  const ModelDims d = p.dims();
  check_length(h_prev, d.hidden, "encoder_step h_prev");
  check_length(c_prev, d.hidden, "encoder_step c_prev");
  check_length(x, d.input_width, "encoder_step x");
  const std::vector<double> offsets = gate_offsets(p.encoder, {});
  std::vector<double> gates(kGateCount * d.hidden), tc(d.hidden);
  CellState out{Vector(d.hidden), Vector(d.hidden)};
  cell_forward(p.encoder, offsets, h_prev.span(), c_prev.span(), x.span(), gates, out.c.span(), tc,
               out.h.span());
  return out;
}

Representation encode(const IsaParameters& p, const Sequence& s) {
  check_compatible(p, s);
  const EncoderTrace tr = run_encoder(p, s);
  return {Vector(tr.h.row(s.length() - 1)), s.id};
}

Matrix encoder_states(const IsaParameters& p, const Sequence& s) {
  check_compatible(p, s);
  return run_encoder(p, s).h;
}

Vector output_head(const IsaParameters& p, const Vector& z, const Vector& xhat_prev,
                   const Vector& h) {
  const ModelDims d = p.dims();
  check_length(z, d.hidden, "output_head z");
  check_length(xhat_prev, d.input_width, "output_head xhat_prev");
  check_length(h, d.hidden, "output_head h");
  const std::vector<double> az = head_offset(p, z.span());
  std::vector<double> q(d.head_hidden);
  Vector out(d.input_width);
  output_head_forward(p, az, xhat_prev.span(), h.span(), q, out.span());
  return out;
}

DecodeStep holistic_decode_step(const IsaParameters& p, const Vector& z, const Vector& h_prev,
                                const Vector& c_prev, const Vector& xhat_prev) {
  const ModelDims d = p.dims();
  check_length(z, d.hidden, "holistic_decode_step z");
  check_length(h_prev, d.hidden, "holistic_decode_step h_prev");
  check_length(c_prev, d.hidden, "holistic_decode_step c_prev");
  check_length(xhat_prev, d.input_width, "holistic_decode_step xhat_prev");
  const std::vector<double> offsets = gate_offsets(p.decoder, z.span());
  const std::vector<double> az = head_offset(p, z.span());
  std::vector<double> gates(kGateCount * d.hidden), tc(d.hidden), q(d.head_hidden);
  DecodeStep out{Vector(d.input_width), Vector(d.hidden), Vector(d.hidden)};
  cell_forward(p.decoder, offsets, h_prev.span(), c_prev.span(), xhat_prev.span(), gates,
               out.c.span(), tc, out.h.span());
  output_head_forward(p, az, xhat_prev.span(), out.h.span(), q, out.xhat.span());
  return out;
}

Matrix holistic_reconstruct(const IsaParameters& p, const Vector& z, std::size_t steps) {
  if (steps == 0) throw std::invalid_argument("holistic_reconstruct: steps must be >= 1");
  check_length(z, p.dims().hidden, "holistic_reconstruct z");
  return run_decoder(p, z.span(), steps).xhat;
}

Vector atomistic_predict(const IsaParameters& p, const Vector& h) {
  check_length(h, p.dims().hidden, "atomistic_predict h");
  std::vector<double> a(p.F.rows(), 0.0);
  gemv_acc(p.F, h.span(), a);
  Vector out(p.P.rows());
  relu_mul(p.P, a, out.span());
  return out;
}

double loss_holistic(const IsaParameters& p, std::span<const Sequence> batch) {
  check_batch(p, batch, 1);
  double total = 0.0;
  for (const Sequence& s : batch) total += sequence_loss_holistic(p, s, run_encoder(p, s));
  return total;
}

double loss_atomistic(const IsaParameters& p, std::span<const Sequence> batch) {
  check_batch(p, batch, 2);
  double total = 0.0;
  for (const Sequence& s : batch) total += sequence_loss_atomistic(p, s, run_encoder(p, s));
  return total;
}

double loss_integrated(const IsaParameters& p, std::span<const Sequence> batch, double alpha) {
  check_alpha(alpha);
  check_batch(p, batch, 2);
  double lh = 0.0;
  double la = 0.0;
  for (const Sequence& s : batch) {
    const EncoderTrace enc = run_encoder(p, s);
    lh += sequence_loss_holistic(p, s, enc);
    la += sequence_loss_atomistic(p, s, enc);
  }
  return alpha * lh + (1.0 - alpha) * la;
}

LossAndGradients backward(const IsaParameters& p, std::span<const Sequence> batch, double alpha,
                          std::size_t workers) {
  check_alpha(alpha);
  check_batch(p, batch, 2);
  const ModelDims dims = p.dims();
  const std::size_t n = batch.size();
  workers = std::clamp<std::size_t>(workers, 1, n);

  LossAndGradients out{0.0, IsaGradients{IsaTensors::zeros(dims)}};
  std::vector<SequenceLoss> losses(n);

  if (workers == 1) {
    IsaGradients local{IsaTensors::zeros(dims)};
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) zero(local);
      losses[i] = sequence_backward(p, batch[i], alpha, local);
      add_into(out.grads, local);
    }
  } else {
    std::vector<IsaGradients> per_seq(n, IsaGradients{IsaTensors::zeros(dims)});
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) {
          losses[i] = sequence_backward(p, batch[i], alpha, per_seq[i]);
        }
      });
    }
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < n; ++i) add_into(out.grads, per_seq[i]);
  }

  double lh = 0.0;
  double la = 0.0;
  for (const SequenceLoss& l : losses) {
    lh += l.holistic;
    la += l.atomistic;
  }
  out.loss = alpha * lh + (1.0 - alpha) * la;
  return out;
}

}  // namespace isa
