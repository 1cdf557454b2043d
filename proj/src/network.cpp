#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "dualnav/neuralnet.hpp"
#include "dualnav/rng.hpp"

namespace dualnav::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

ConstMatMap as_matrix(const Tensor& t, int rows, int cols) { return {t.data.data(), rows, cols}; }
MatMap as_matrix(Tensor& t, int rows, int cols) { return {t.data.data(), rows, cols}; }

// ------------------------------------------------------------ convolution

// cols[(c*k + ky)*k + kx, y*side + x] = in[c, y + ky - pad, x + kx - pad]
void im2col(const AlignedVector& in, int channels, int side, int k, AlignedVector& cols) {
  const int pad = (k - 1) / 2;
  const int hw = side * side;
  cols.assign(static_cast<std::size_t>(channels) * k * k * hw, 0.0);
  for (int c = 0; c < channels; ++c) {
    const double* src = in.data() + static_cast<std::size_t>(c) * hw;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* dst = cols.data() + (static_cast<std::size_t>(c * k + ky) * k + kx) * hw;
        for (int y = 0; y < side; ++y) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= side) continue;
          const int x0 = std::max(0, pad - kx);
          const int x1 = std::min(side, side + pad - kx);
          for (int x = x0; x < x1; ++x) dst[y * side + x] = src[sy * side + x + kx - pad];
        }
      }
    }
  }
}

void col2im_add(const RowMat& dcols, int channels, int side, int k, AlignedVector& din) {
  const int pad = (k - 1) / 2;
  const int hw = side * side;
  din.assign(static_cast<std::size_t>(channels) * hw, 0.0);
  for (int c = 0; c < channels; ++c) {
    double* dst = din.data() + static_cast<std::size_t>(c) * hw;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* src = dcols.data() + (static_cast<std::size_t>(c * k + ky) * k + kx) * hw;
        for (int y = 0; y < side; ++y) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= side) continue;
          const int x0 = std::max(0, pad - kx);
          const int x1 = std::min(side, side + pad - kx);
          for (int x = x0; x < x1; ++x) dst[sy * side + x + kx - pad] += src[y * side + x];
        }
      }
    }
  }
}

// Same-padded stride-1 convolution followed by ReLU.
void conv_relu_forward(const AlignedVector& in, int in_c, int side, const Tensor& w,
                       const Tensor& b, AlignedVector& out) {
  const int out_c = w.shape[0];
  const int k = w.shape[2];
  const int hw = side * side;
  thread_local AlignedVector cols;
  im2col(in, in_c, side, k, cols);
  out.resize(static_cast<std::size_t>(out_c) * hw);
  MatMap o(out.data(), out_c, hw);
  o.noalias() = as_matrix(w, out_c, in_c * k * k) * ConstMatMap(cols.data(), in_c * k * k, hw);
  for (int c = 0; c < out_c; ++c) {
    o.row(c).array() = (o.row(c).array() + b.data[static_cast<std::size_t>(c)]).max(0.0);
  }
}

// dout is the gradient w.r.t. the post-ReLU output and is overwritten with the
// pre-activation gradient. din is skipped when null.
void conv_relu_backward(const AlignedVector& in, int in_c, int side, const Tensor& w,
                        const AlignedVector& out, AlignedVector& dout, Tensor& dw,
                        Tensor& db, AlignedVector* din) {
  const int out_c = w.shape[0];
  const int k = w.shape[2];
  const int hw = side * side;
  for (std::size_t i = 0; i < dout.size(); ++i) {
    if (out[i] <= 0.0) dout[i] = 0.0;
  }
  thread_local AlignedVector cols;
  im2col(in, in_c, side, k, cols);
  ConstMatMap d(dout.data(), out_c, hw);
  ConstMatMap cm(cols.data(), in_c * k * k, hw);
  as_matrix(dw, out_c, in_c * k * k).noalias() += d * cm.transpose();
  VecMap(db.data.data(), out_c) += d.rowwise().sum();
  if (din) {
    RowMat dcols = as_matrix(w, out_c, in_c * k * k).transpose() * d;
    col2im_add(dcols, in_c, side, k, *din);
  }
}

void maxpool_forward(const AlignedVector& in, int channels, int side, AlignedVector& out,
                     std::vector<std::uint32_t>& idx) {
  const int os = side / 2;
  out.resize(static_cast<std::size_t>(channels) * os * os);
  idx.resize(out.size());
  std::size_t o = 0;
  for (int c = 0; c < channels; ++c) {
    const std::size_t base = static_cast<std::size_t>(c) * side * side;
    for (int y = 0; y < os; ++y) {
      for (int x = 0; x < os; ++x, ++o) {
        std::size_t best = base + static_cast<std::size_t>(2 * y) * side + 2 * x;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const std::size_t j = base + static_cast<std::size_t>(2 * y + dy) * side + 2 * x + dx;
            if (in[j] > in[best]) best = j;
          }
        }
        out[o] = in[best];
        idx[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

void maxpool_backward(const AlignedVector& dout, const std::vector<std::uint32_t>& idx,
                      std::size_t in_size, AlignedVector& din) {
  din.assign(in_size, 0.0);
  for (std::size_t o = 0; o < dout.size(); ++o) din[idx[o]] += dout[o];
}

void downsample(std::span<const double> frame, int side, AlignedVector& out) {
  const int block = kFrameSide / side;
  out.assign(static_cast<std::size_t>(side) * side, 0.0);
  if (block == 1) {
    std::copy(frame.begin(), frame.end(), out.begin());
    return;
  }
  const double scale = 1.0 / (block * block);
  for (int y = 0; y < kFrameSide; ++y) {
    for (int x = 0; x < kFrameSide; ++x) {
      out[static_cast<std::size_t>(y / block) * side + x / block] +=
          frame[static_cast<std::size_t>(y) * kFrameSide + x] * scale;
    }
  }
}

void check_input(const Input& in) {
  if (in.frame.size() != static_cast<std::size_t>(kFrameSide * kFrameSide)) {
    throw std::invalid_argument("frame must hold 84x84 values");
  }
  if (in.map.size() != static_cast<std::size_t>(kMapInputs)) {
    throw std::invalid_argument("map raster must hold 100 values");
  }
}

// Shared image + map trunk; fills cache.features.
void trunk_forward(const NetworkParams& p, const Input& in, Mode mode, std::uint64_t seed,
                   TrunkCache& cache) {
  check_input(in);
  const auto& s = p.shape;
  const auto chain = s.spatial_chain();
  downsample(in.frame, s.image_side, cache.image);

  conv_relu_forward(cache.image, 1, chain[0], p.conv1_w, p.conv1_b, cache.a1);
  maxpool_forward(cache.a1, s.filters[0], chain[0], cache.p1, cache.i1);
  conv_relu_forward(cache.p1, s.filters[0], chain[1], p.conv2_w, p.conv2_b, cache.a2);
  maxpool_forward(cache.a2, s.filters[1], chain[1], cache.p2, cache.i2);
  conv_relu_forward(cache.p2, s.filters[1], chain[2], p.conv3_w, p.conv3_b, cache.a3);
  maxpool_forward(cache.a3, s.filters[2], chain[2], cache.p3, cache.i3);

  const int flat = s.flatten_width();
  cache.h1.resize(static_cast<std::size_t>(s.dense_units));
  VecMap h1(cache.h1.data(), s.dense_units);
  h1.noalias() = as_matrix(p.dense1_w, s.dense_units, flat) * ConstVecMap(cache.p3.data(), flat);
  h1 = (h1 + ConstVecMap(p.dense1_b.data.data(), s.dense_units)).cwiseMax(0.0);

  cache.d1 = cache.h1;
  cache.keep.clear();
  if (mode == Mode::Train && s.dropout > 0.0) {
    Rng rng(seed);
    const double scale = 1.0 / (1.0 - s.dropout);
    cache.keep.resize(cache.h1.size());
    for (std::size_t i = 0; i < cache.keep.size(); ++i) {
      cache.keep[i] = rng.uniform() < s.dropout ? 0.0 : scale;
      cache.d1[i] *= cache.keep[i];
    }
  }

  cache.h2.resize(kImageFeatures);
  VecMap h2(cache.h2.data(), kImageFeatures);
  h2.noalias() =
      as_matrix(p.dense2_w, kImageFeatures, s.dense_units) * ConstVecMap(cache.d1.data(), s.dense_units);
  h2 = (h2 + ConstVecMap(p.dense2_b.data.data(), kImageFeatures)).cwiseMax(0.0);

  std::copy(in.map.begin(), in.map.end(), cache.map_in.begin());
  Eigen::Map<Eigen::Matrix<double, kMapFeatures, 1>> pre(cache.map_pre.data());
  pre.noalias() = as_matrix(p.map_w, kMapFeatures, kMapInputs) *
                  Eigen::Map<const Eigen::Matrix<double, kMapInputs, 1>>(cache.map_in.data());
  pre += ConstVecMap(p.map_b.data.data(), kMapFeatures);

  const double slope = p.map_slope.data[0];
  std::copy(cache.h2.begin(), cache.h2.end(), cache.features.begin());
  for (int i = 0; i < kMapFeatures; ++i) {
    const double z = cache.map_pre[static_cast<std::size_t>(i)];
    cache.features[static_cast<std::size_t>(kImageFeatures + i)] = z > 0.0 ? z : slope * z;
  }
}

void trunk_backward(const NetworkParams& p, const TrunkCache& cache,
                    std::span<const double, kConcatWidth> dfeat, NetworkParams& g) {
  const auto& s = p.shape;
  const auto chain = s.spatial_chain();

  // Map branch.
  const double slope = p.map_slope.data[0];
  Eigen::Matrix<double, kMapFeatures, 1> dpre;
  double dslope = 0.0;
  for (int i = 0; i < kMapFeatures; ++i) {
    const double z = cache.map_pre[static_cast<std::size_t>(i)];
    const double d = dfeat[static_cast<std::size_t>(kImageFeatures + i)];
    if (z > 0.0) {
      dpre[i] = d;
    } else {
      dpre[i] = slope * d;
      dslope += z * d;
    }
  }
  g.map_slope.data[0] += dslope;
  as_matrix(g.map_w, kMapFeatures, kMapInputs).noalias() +=
      dpre * Eigen::Map<const Eigen::Matrix<double, 1, kMapInputs>>(cache.map_in.data());
  VecMap(g.map_b.data.data(), kMapFeatures) += dpre;

  // Image branch, dense layers.
  Eigen::VectorXd dh2(kImageFeatures);
  bool any = false;
  for (int i = 0; i < kImageFeatures; ++i) {
    dh2[i] = cache.h2[static_cast<std::size_t>(i)] > 0.0 ? dfeat[static_cast<std::size_t>(i)] : 0.0;
    any = any || dh2[i] != 0.0;
  }
  if (!any) return;
  as_matrix(g.dense2_w, kImageFeatures, s.dense_units).noalias() +=
      dh2 * ConstVecMap(cache.d1.data(), s.dense_units).transpose();
  VecMap(g.dense2_b.data.data(), kImageFeatures) += dh2;

  Eigen::VectorXd dh1 = as_matrix(p.dense2_w, kImageFeatures, s.dense_units).transpose() * dh2;
  for (int i = 0; i < s.dense_units; ++i) {
    if (!cache.keep.empty()) dh1[i] *= cache.keep[static_cast<std::size_t>(i)];
    if (cache.h1[static_cast<std::size_t>(i)] <= 0.0) dh1[i] = 0.0;
  }
  const int flat = s.flatten_width();
  as_matrix(g.dense1_w, s.dense_units, flat).noalias() +=
      dh1 * ConstVecMap(cache.p3.data(), flat).transpose();
  VecMap(g.dense1_b.data.data(), s.dense_units) += dh1;

  AlignedVector dp3(static_cast<std::size_t>(flat));
  VecMap(dp3.data(), flat).noalias() = as_matrix(p.dense1_w, s.dense_units, flat).transpose() * dh1;

  // Convolutional stack.
  AlignedVector da3, dp2, da2, dp1, da1;
  maxpool_backward(dp3, cache.i3, cache.a3.size(), da3);
  conv_relu_backward(cache.p2, s.filters[1], chain[2], p.conv3_w, cache.a3, da3, g.conv3_w,
                     g.conv3_b, &dp2);
  maxpool_backward(dp2, cache.i2, cache.a2.size(), da2);
  conv_relu_backward(cache.p1, s.filters[0], chain[1], p.conv2_w, cache.a2, da2, g.conv2_w,
                     g.conv2_b, &dp1);
  maxpool_backward(dp1, cache.i1, cache.a1.size(), da1);
  conv_relu_backward(cache.image, 1, chain[0], p.conv1_w, cache.a1, da1, g.conv1_w, g.conv1_b,
                     nullptr);
}

QValues head_forward(const NetworkParams& p, std::span<const double, kConcatWidth> x) {
  QValues q{};
  Eigen::Map<Eigen::Matrix<double, kOutputs, 1>> qm(q.data());
  qm.noalias() = as_matrix(p.head_w, kOutputs, kConcatWidth) *
                 Eigen::Map<const Eigen::Matrix<double, kConcatWidth, 1>>(x.data());
  qm += ConstVecMap(p.head_b.data.data(), kOutputs);
  return q;
}

// Accumulates head gradients and returns dLoss/dx.
std::array<double, kConcatWidth> head_backward(const NetworkParams& p,
                                               std::span<const double, kConcatWidth> x,
                                               const QValues& dq, NetworkParams& g) {
  Eigen::Map<const Eigen::Matrix<double, kOutputs, 1>> d(dq.data());
  as_matrix(g.head_w, kOutputs, kConcatWidth).noalias() +=
      d * Eigen::Map<const Eigen::Matrix<double, 1, kConcatWidth>>(x.data());
  VecMap(g.head_b.data.data(), kOutputs) += d;
  std::array<double, kConcatWidth> dx{};
  Eigen::Map<Eigen::Matrix<double, kConcatWidth, 1>>(dx.data()).noalias() =
      as_matrix(p.head_w, kOutputs, kConcatWidth).transpose() * d;
  return dx;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void require_recurrent(const NetworkParams& p) {
  if (!p.shape.recurrent) throw std::invalid_argument("parameter set has no recurrent cell");
}

}  // namespace

// ---------------------------------------------------------------- public

QValues forward(const NetworkParams& params, const Input& input, Mode mode, std::uint64_t dropout_seed) {
  if (params.shape.recurrent) {
    return forward_recurrent(params, std::span(&input, 1), LstmState{}, mode, dropout_seed).front();
  }
  TrunkCache cache;
  trunk_forward(params, input, mode, derive_seed(dropout_seed, 0), cache);
  return head_forward(params, cache.features);
}

BatchPass forward_batch(const NetworkParams& params, std::span<const Input> batch, Mode mode,
                        std::uint64_t dropout_seed) {
  if (params.shape.recurrent) throw std::invalid_argument("forward_batch needs a feedforward network");
  BatchPass pass;
  pass.q.resize(batch.size());
  pass.trunks.resize(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    trunk_forward(params, batch[i], mode, derive_seed(dropout_seed, i), pass.trunks[i]);
    pass.q[i] = head_forward(params, pass.trunks[i].features);
  }
  return pass;
}

void backward(const NetworkParams& params, const BatchPass& pass, std::span<const QValues> dq,
              NetworkParams& grads) {
  if (dq.size() != pass.q.size()) throw std::invalid_argument("backward: gradient count mismatch");
  for (std::size_t i = 0; i < dq.size(); ++i) {
    if (dq[i] == QValues{}) continue;
    const auto dfeat = head_backward(params, pass.trunks[i].features, dq[i], grads);
    trunk_backward(params, pass.trunks[i], dfeat, grads);
  }
}

SequencePass forward_sequence(const NetworkParams& params, std::span<const Input> sequence,
                              const LstmState& initial, Mode mode, std::uint64_t dropout_seed) {
  require_recurrent(params);
  if (sequence.empty()) throw std::invalid_argument("forward_sequence: empty sequence");
  constexpr int H = kLstmUnits;
  SequencePass pass;
  pass.q.resize(sequence.size());
  pass.trunks.resize(sequence.size());
  pass.cells.resize(sequence.size());
  std::array<double, H> h{}, c{};
  std::copy(initial.h.begin(), initial.h.end(), h.begin());
  std::copy(initial.c.begin(), initial.c.end(), c.begin());

  const auto wx = as_matrix(params.lstm_wx, 4 * H, kConcatWidth);
  const auto wh = as_matrix(params.lstm_wh, 4 * H, H);
  const ConstVecMap b(params.lstm_b.data.data(), 4 * H);
  for (std::size_t t = 0; t < sequence.size(); ++t) {
    auto& trunk = pass.trunks[t];
    trunk_forward(params, sequence[t], mode, derive_seed(dropout_seed, t), trunk);
    auto& cell = pass.cells[t];
    cell.h_prev = h;
    cell.c_prev = c;
    Eigen::VectorXd z = wx * Eigen::Map<const Eigen::Matrix<double, kConcatWidth, 1>>(trunk.features.data()) +
                        wh * Eigen::Map<const Eigen::Matrix<double, H, 1>>(h.data()) + b;
    for (int u = 0; u < H; ++u) {
      const auto k = static_cast<std::size_t>(u);
      cell.i[k] = sigmoid(z[u]);
      cell.f[k] = sigmoid(z[H + u]);
      cell.g[k] = std::tanh(z[2 * H + u]);
      cell.o[k] = sigmoid(z[3 * H + u]);
      cell.c[k] = cell.f[k] * c[k] + cell.i[k] * cell.g[k];
      cell.tanh_c[k] = std::tanh(cell.c[k]);
      cell.h[k] = cell.o[k] * cell.tanh_c[k];
    }
    h = cell.h;
    c = cell.c;
    std::array<double, H> out{};
    for (int u = 0; u < H; ++u) out[static_cast<std::size_t>(u)] = std::max(0.0, h[static_cast<std::size_t>(u)]);
    pass.q[t] = head_forward(params, out);
  }
  pass.final_state.h.assign(h.begin(), h.end());
  pass.final_state.c.assign(c.begin(), c.end());
  return pass;
}

std::vector<QValues> forward_recurrent(const NetworkParams& params, std::span<const Input> sequence,
                                       const LstmState& initial, Mode mode, std::uint64_t dropout_seed) {
  return forward_sequence(params, sequence, initial, mode, dropout_seed).q;
}

void backward_sequence(const NetworkParams& params, const SequencePass& pass,
                       std::span<const QValues> dq, NetworkParams& grads) {
  require_recurrent(params);
  if (dq.size() != pass.q.size()) throw std::invalid_argument("backward_sequence: gradient count mismatch");
  constexpr int H = kLstmUnits;
  const auto wx = as_matrix(params.lstm_wx, 4 * H, kConcatWidth);
  const auto wh = as_matrix(params.lstm_wh, 4 * H, H);
  auto gwx = as_matrix(grads.lstm_wx, 4 * H, kConcatWidth);
  auto gwh = as_matrix(grads.lstm_wh, 4 * H, H);
  VecMap gb(grads.lstm_b.data.data(), 4 * H);

  Eigen::Matrix<double, H, 1> dh_next = Eigen::Matrix<double, H, 1>::Zero();
  Eigen::Matrix<double, H, 1> dc_next = Eigen::Matrix<double, H, 1>::Zero();
  for (std::size_t step = pass.q.size(); step-- > 0;) {
    const auto& cell = pass.cells[step];
    std::array<double, H> out{};
    for (int u = 0; u < H; ++u) out[static_cast<std::size_t>(u)] = std::max(0.0, cell.h[static_cast<std::size_t>(u)]);
    const auto dout = head_backward(params, out, dq[step], grads);

    Eigen::VectorXd dz(4 * H);
    for (int u = 0; u < H; ++u) {
      const auto k = static_cast<std::size_t>(u);
      const double dh = (cell.h[k] > 0.0 ? dout[k] : 0.0) + dh_next[u];
      const double dc = dh * cell.o[k] * (1.0 - cell.tanh_c[k] * cell.tanh_c[k]) + dc_next[u];
      const double di = dc * cell.g[k];
      const double dg = dc * cell.i[k];
      const double df = dc * cell.c_prev[k];
      const double dox = dh * cell.tanh_c[k];
      dz[u] = di * cell.i[k] * (1.0 - cell.i[k]);
      dz[H + u] = df * cell.f[k] * (1.0 - cell.f[k]);
      dz[2 * H + u] = dg * (1.0 - cell.g[k] * cell.g[k]);
      dz[3 * H + u] = dox * cell.o[k] * (1.0 - cell.o[k]);
      dc_next[u] = dc * cell.f[k];
    }
    const auto& feat = pass.trunks[step].features;
    gwx.noalias() += dz * Eigen::Map<const Eigen::Matrix<double, 1, kConcatWidth>>(feat.data());
    gwh.noalias() += dz * Eigen::Map<const Eigen::Matrix<double, 1, H>>(cell.h_prev.data());
    gb += dz;
    dh_next.noalias() = wh.transpose() * dz;

    std::array<double, kConcatWidth> dfeat{};
    Eigen::Map<Eigen::Matrix<double, kConcatWidth, 1>>(dfeat.data()).noalias() = wx.transpose() * dz;
    trunk_backward(params, pass.trunks[step], dfeat, grads);
  }
}

// ------------------------------------------------------------------ loss

namespace {
void check_loss_args(std::span<const QValues> pred, std::span<const QValues> target,
                     std::span<const int> taken) {
  if (pred.empty()) throw std::invalid_argument("mse_loss: empty batch");
  if (pred.size() != target.size() || pred.size() != taken.size()) {
    throw std::invalid_argument("mse_loss: batch shape mismatch");
  }
  for (int a : taken) {
    if (a < 0 || a >= kOutputs) throw std::invalid_argument("mse_loss: action index out of range");
  }
}
}  // namespace

double mse_loss(std::span<const QValues> pred, std::span<const QValues> target, std::span<const int> taken) {
  check_loss_args(pred, target, taken);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto a = static_cast<std::size_t>(taken[i]);
    const double e = pred[i][a] - target[i][a];
    sum += e * e;
  }
  return sum / static_cast<double>(pred.size());
}

std::vector<QValues> mse_loss_gradient(std::span<const QValues> pred, std::span<const QValues> target,
                                       std::span<const int> taken) {
  check_loss_args(pred, target, taken);
  std::vector<QValues> d(pred.size(), QValues{});
  const double scale = 2.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto a = static_cast<std::size_t>(taken[i]);
    d[i][a] = scale * (pred[i][a] - target[i][a]);
  }
  return d;
}

}  // namespace dualnav::nn
