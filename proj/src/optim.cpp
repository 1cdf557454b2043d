#include <cmath>
#include <stdexcept>

#include "dualnav/neuralnet.hpp"

namespace dualnav::nn {

AdamState AdamState::for_params(const NetworkParams& params, AdamConfig config) {
  AdamState s;
  s.config = config;
  s.m = params.zeros_like();
  s.v = params.zeros_like();
  return s;
}

void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state) {
  if (!(params.shape == grads.shape) || !(params.shape == state.m.shape)) {
    throw std::invalid_argument("adam_step: parameter, gradient and moment shapes differ");
  }
  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);

  std::vector<Tensor*> p, m, v;
  std::vector<const Tensor*> g;
  params.for_each([&](std::string_view, Tensor& x) { p.push_back(&x); });
  state.m.for_each([&](std::string_view, Tensor& x) { m.push_back(&x); });
  state.v.for_each([&](std::string_view, Tensor& x) { v.push_back(&x); });
  grads.for_each([&](std::string_view, const Tensor& x) { g.push_back(&x); });

  for (std::size_t k = 0; k < p.size(); ++k) {
    auto& pd = p[k]->data;
    auto& md = m[k]->data;
    auto& vd = v[k]->data;
    const auto& gd = g[k]->data;
    if (gd.size() != pd.size()) throw std::invalid_argument("adam_step: tensor size mismatch");
    for (std::size_t i = 0; i < pd.size(); ++i) {
      md[i] = c.beta1 * md[i] + (1.0 - c.beta1) * gd[i];
      vd[i] = c.beta2 * vd[i] + (1.0 - c.beta2) * gd[i] * gd[i];
      const double mhat = md[i] / correct1;
      const double vhat = vd[i] / correct2;
      pd[i] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

}  // namespace dualnav::nn
