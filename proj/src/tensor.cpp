#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "dualnav/neuralnet.hpp"
#include "dualnav/rng.hpp"

namespace dualnav::nn {

std::size_t element_count(std::span<const int> shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative tensor dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tensor::Tensor(std::vector<int> dims, double fill) : shape(std::move(dims)) {
  data.assign(element_count(shape), fill);
}

bool Tensor::all_finite() const {
  for (double x : data) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

NetworkShape NetworkShape::compact() {
  NetworkShape s;
  s.image_side = 12;
  s.filters = {4, 8, 8};
  s.kernels = {4, 3, 3};
  s.dense_units = 32;
  return s;
}

std::array<int, 4> NetworkShape::spatial_chain() const {
  return {image_side, image_side / 2, image_side / 4, image_side / 8};
}

int NetworkShape::flatten_width() const {
  const int side = spatial_chain()[3];
  return side * side * filters[2];
}

void NetworkShape::validate() const {
  if (image_side < 8 || kFrameSide % image_side != 0) {
    throw std::invalid_argument("image_side must be at least 8 and divide 84");
  }
  for (int f : filters) {
    if (f <= 0) throw std::invalid_argument("filter counts must be positive");
  }
  for (int k : kernels) {
    if (k <= 0) throw std::invalid_argument("kernel sizes must be positive");
  }
  if (dense_units <= 0) throw std::invalid_argument("dense_units must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must be in [0, 1)");
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](std::string_view, const Tensor& t) { n += t.size(); });
  return n;
}

NetworkParams NetworkParams::zeros_like() const {
  NetworkParams z = *this;
  z.for_each([](std::string_view, Tensor& t) { std::fill(t.data.begin(), t.data.end(), 0.0); });
  return z;
}

bool NetworkParams::all_finite() const {
  bool ok = true;
  for_each([&](std::string_view, const Tensor& t) { ok = ok && t.all_finite(); });
  return ok;
}

NetworkParams init_params(const NetworkShape& shape, std::uint64_t seed) {
  shape.validate();
  NetworkParams p;
  p.shape = shape;
  const auto [f1, f2, f3] = shape.filters;
  const auto [k1, k2, k3] = shape.kernels;
  p.conv1_w = Tensor({f1, 1, k1, k1});
  p.conv1_b = Tensor({f1});
  p.conv2_w = Tensor({f2, f1, k2, k2});
  p.conv2_b = Tensor({f2});
  p.conv3_w = Tensor({f3, f2, k3, k3});
  p.conv3_b = Tensor({f3});
  p.dense1_w = Tensor({shape.dense_units, shape.flatten_width()});
  p.dense1_b = Tensor({shape.dense_units});
  p.dense2_w = Tensor({kImageFeatures, shape.dense_units});
  p.dense2_b = Tensor({kImageFeatures});
  p.map_w = Tensor({kMapFeatures, kMapInputs});
  p.map_b = Tensor({kMapFeatures});
  p.map_slope = Tensor({1}, 0.25);
  if (shape.recurrent) {
    p.lstm_wx = Tensor({4 * kLstmUnits, kConcatWidth});
    p.lstm_wh = Tensor({4 * kLstmUnits, kLstmUnits});
    p.lstm_b = Tensor({4 * kLstmUnits});
    // Gate order i, f, g, o.
    std::fill_n(p.lstm_b.data.begin() + kLstmUnits, kLstmUnits, 1.0);
  }
  p.head_w = Tensor({kOutputs, kConcatWidth});
  p.head_b = Tensor({kOutputs});

  Rng rng(seed);
  auto fill = [&](Tensor& w, int fan_in) {
    const double bound = std::sqrt(6.0 / fan_in);
    for (auto& x : w.data) x = rng.uniform(-bound, bound);
  };
  fill(p.conv1_w, k1 * k1);
  fill(p.conv2_w, f1 * k2 * k2);
  fill(p.conv3_w, f2 * k3 * k3);
  fill(p.dense1_w, shape.flatten_width());
  fill(p.dense2_w, shape.dense_units);
  fill(p.map_w, kMapInputs);
  if (shape.recurrent) {
    fill(p.lstm_wx, kConcatWidth);
    fill(p.lstm_wh, kLstmUnits);
  }
  fill(p.head_w, kConcatWidth);
  return p;
}

}  // namespace dualnav::nn
