#include "hadseg/layer.hpp"

#include <algorithm>
#include <cmath>

#include "hadseg/error.hpp"

namespace hadseg::layer {

void softmax_last_axis(std::span<double> data, std::size_t channels) {
  for (std::size_t p = 0; p < data.size(); p += channels) {
    auto px = data.subspan(p, channels);
    const double mx = *std::max_element(px.begin(), px.end());
    double sum = 0.0;
    for (double& v : px) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : px) v /= sum;
  }
}

LayerActivation hadamard_forward(const codes::Codebook& cb, const Tensor& y_c,
                                 double scale) {
  if (y_c.rank() == 0 || y_c.shape().back() != cb.n()) {
    throw ShapeError("hadamard layer expects last axis " +
                     std::to_string(cb.n()) + ", got shape " +
                     shape_string(y_c.shape()));
  }
  const std::size_t n = cb.n();
  LayerActivation act{y_c, y_c, Tensor(y_c.shape()), scale};
  auto t = act.transformed.data();
  for (std::size_t p = 0; p < t.size(); p += n) {
    auto px = t.subspan(p, n);
    codes::fwht_inplace(px);
    if (scale != 1.0) {
      for (double& v : px) v *= scale;
    }
  }
  std::copy(t.begin(), t.end(), act.output.data().begin());
  softmax_last_axis(act.output.data(), n);
  return act;
}

Tensor hadamard_backward(const LayerActivation& act, const Tensor& grad_out) {
  require_same_shape(act.output, grad_out, "hadamard_backward");
  const std::size_t n = act.output.shape().back();
  Tensor grad_in(grad_out.shape());
  auto s = act.output.data();
  auto g = grad_out.data();
  auto d = grad_in.data();
  for (std::size_t p = 0; p < d.size(); p += n) {
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += s[p + i] * g[p + i];
    for (std::size_t i = 0; i < n; ++i) d[p + i] = s[p + i] * (g[p + i] - dot);
    auto px = d.subspan(p, n);
    codes::fwht_inplace(px);
    if (act.scale != 1.0) {
      for (double& v : px) v *= act.scale;
    }
  }
  return grad_in;
}

}  // namespace hadseg::layer
