#pragma once

// Fixed-architecture double-input Q-network.
//
// Image branch: conv(8x8) -> pool -> conv(4x4) -> pool -> conv(3x3) -> pool ->
// dense -> dropout -> dense(10). Map branch: dense(100) with a learnable
// PReLU slope. The 110 concatenated features go straight to a 4-way linear
// head, or through a 110-unit LSTM cell first in the recurrent variant.
//
// Convolutions use stride 1 and "same" padding (pad (k-1)/2 before, the rest
// after), pools are 2x2 with floor division, so an 84x84 frame goes
// 84 -> 42 -> 21 -> 10 and flattens to 10*10*64 = 6400.

#include <array>
#include <cstddef>
#include <cstdint>
#include <new>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dualnav::nn {

inline constexpr int kFrameSide = 84;
inline constexpr int kImageFeatures = 10;
inline constexpr int kMapInputs = 100;
inline constexpr int kMapFeatures = 100;
inline constexpr int kConcatWidth = kImageFeatures + kMapFeatures;
inline constexpr int kLstmUnits = kConcatWidth;
inline constexpr int kOutputs = 4;

// Buffers start on a 64-byte boundary so vectorised reductions split the
// same way on every run.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using AlignedVector = std::vector<double, AlignedAllocator<double>>;

struct Tensor {
  std::vector<int> shape;
  AlignedVector data;

  Tensor() = default;
  explicit Tensor(std::vector<int> dims, double fill = 0.0);

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  bool all_finite() const;
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::size_t element_count(std::span<const int> shape);

struct NetworkShape {
  // Side of the square image fed to the first convolution; the 84x84 frame is
  // block-averaged down to it. Must divide 84.
  int image_side = kFrameSide;
  std::array<int, 3> filters{32, 64, 64};
  std::array<int, 3> kernels{8, 4, 3};
  int dense_units = 256;
  double dropout = 0.5;
  bool recurrent = false;

  // The layer widths of the published network.
  static NetworkShape table1() { return {}; }
  // Narrow trunk used for single-core training runs; same topology.
  static NetworkShape compact();

  // Spatial side after the input and each pool.
  std::array<int, 4> spatial_chain() const;
  int flatten_width() const;
  // Throws std::invalid_argument on an unusable shape.
  void validate() const;

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

struct NetworkParams {
  NetworkShape shape;
  Tensor conv1_w, conv1_b, conv2_w, conv2_b, conv3_w, conv3_b;
  Tensor dense1_w, dense1_b, dense2_w, dense2_b;
  Tensor map_w, map_b, map_slope;
  Tensor lstm_wx, lstm_wh, lstm_b;  // empty for the feedforward variant
  Tensor head_w, head_b;

  // f(name, tensor) over every present tensor in a fixed order.
  template <class F>
  void for_each(F&& f);
  template <class F>
  void for_each(F&& f) const;

  std::size_t parameter_count() const;
  NetworkParams zeros_like() const;
  bool all_finite() const;

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

template <class Self, class F>
void visit_tensors(Self& p, F&& f) {
  f("conv1.weight", p.conv1_w);
  f("conv1.bias", p.conv1_b);
  f("conv2.weight", p.conv2_w);
  f("conv2.bias", p.conv2_b);
  f("conv3.weight", p.conv3_w);
  f("conv3.bias", p.conv3_b);
  f("dense1.weight", p.dense1_w);
  f("dense1.bias", p.dense1_b);
  f("dense2.weight", p.dense2_w);
  f("dense2.bias", p.dense2_b);
  f("map.weight", p.map_w);
  f("map.bias", p.map_b);
  f("map.prelu_slope", p.map_slope);
  if (p.shape.recurrent) {
    f("lstm.input_weight", p.lstm_wx);
    f("lstm.recurrent_weight", p.lstm_wh);
    f("lstm.bias", p.lstm_b);
  }
  f("head.weight", p.head_w);
  f("head.bias", p.head_b);
}

template <class F>
void NetworkParams::for_each(F&& f) {
  visit_tensors(*this, f);
}
template <class F>
void NetworkParams::for_each(F&& f) const {
  visit_tensors(*this, f);
}

// He-style uniform initialisation scaled by fan-in; biases zero, PReLU slope
// 0.25, LSTM forget-gate bias 1.
NetworkParams init_params(const NetworkShape& shape, std::uint64_t seed);

// Deep copy. NetworkParams is a value type, so this is a plain copy; it exists
// to name the target-network snapshot.
inline NetworkParams clone_params(const NetworkParams& p) { return p; }

using QValues = std::array<double, kOutputs>;

enum class Mode { Train, Eval };

struct Input {
  std::span<const double> frame;  // 84*84, row-major
  std::span<const double> map;    // 100, row-major
};

QValues forward(const NetworkParams& params, const Input& input, Mode mode,
                std::uint64_t dropout_seed = 0);

// Activations kept for the backward pass.
struct TrunkCache {
  AlignedVector image;
  AlignedVector a1, a2, a3;  // conv outputs after ReLU
  AlignedVector p1, p2, p3;  // pooled
  std::vector<std::uint32_t> i1, i2, i3;
  AlignedVector h1;    // dense1 after ReLU
  AlignedVector keep;  // dropout scale per unit; empty in eval mode
  AlignedVector d1;    // dense1 after dropout
  AlignedVector h2;    // image features
  alignas(64) std::array<double, kMapInputs> map_in{};
  alignas(64) std::array<double, kMapFeatures> map_pre{};
  alignas(64) std::array<double, kConcatWidth> features{};
};

struct BatchPass {
  std::vector<QValues> q;
  std::vector<TrunkCache> trunks;
};

// Sample i of a training batch draws its dropout mask from
// derive_seed(dropout_seed, i).
BatchPass forward_batch(const NetworkParams& params, std::span<const Input> batch, Mode mode,
                        std::uint64_t dropout_seed = 0);

// Accumulates dLoss/dparams into grads given dLoss/dq per sample.
void backward(const NetworkParams& params, const BatchPass& pass, std::span<const QValues> dq,
              NetworkParams& grads);

// ------------------------------------------------------------- recurrent

struct LstmState {
  AlignedVector h = AlignedVector(kLstmUnits, 0.0);
  AlignedVector c = AlignedVector(kLstmUnits, 0.0);

  friend bool operator==(const LstmState&, const LstmState&) = default;
};

struct LstmStepCache {
  alignas(64) std::array<double, kLstmUnits> h_prev{}, c_prev{};
  alignas(64) std::array<double, kLstmUnits> i{}, f{}, g{}, o{}, c{}, tanh_c{}, h{};
};

struct SequencePass {
  std::vector<QValues> q;
  std::vector<TrunkCache> trunks;
  std::vector<LstmStepCache> cells;
  LstmState final_state;
};

// Step t of a training sequence draws its dropout mask from
// derive_seed(dropout_seed, t). Throws on an empty sequence or a feedforward
// parameter set.
SequencePass forward_sequence(const NetworkParams& params, std::span<const Input> sequence,
                              const LstmState& initial, Mode mode, std::uint64_t dropout_seed = 0);

std::vector<QValues> forward_recurrent(const NetworkParams& params, std::span<const Input> sequence,
                                       const LstmState& initial, Mode mode,
                                       std::uint64_t dropout_seed = 0);

// Backpropagation through time; the initial state is treated as a constant.
void backward_sequence(const NetworkParams& params, const SequencePass& pass,
                       std::span<const QValues> dq, NetworkParams& grads);

// ------------------------------------------------------------------ loss

// Mean over the batch of the squared error on the taken action only.
double mse_loss(std::span<const QValues> pred, std::span<const QValues> target,
                std::span<const int> taken);
std::vector<QValues> mse_loss_gradient(std::span<const QValues> pred,
                                       std::span<const QValues> target, std::span<const int> taken);

// ------------------------------------------------------------------ adam

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

struct AdamState {
  AdamConfig config;
  NetworkParams m;
  NetworkParams v;
  std::int64_t step = 0;

  static AdamState for_params(const NetworkParams& params, AdamConfig config = {});
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state);

}  // namespace dualnav::nn
