#pragma once

#include "hadseg/codes.hpp"
#include "hadseg/tensor.hpp"

namespace hadseg::layer {

/// Cached forward state of the Hadamard layer. All three tensors share the
/// caller's shape ([..., H, W, n]); the last axis is the code axis.
struct LayerActivation {
  Tensor input;        // pre-layer generator output
  Tensor transformed;  // scale * H x per pixel
  Tensor output;       // per-pixel softmax of `transformed`
  double scale = 1.0;
};

/// Numerically stable softmax over the last axis, in place.
void softmax_last_axis(std::span<double> data, std::size_t channels);

/// Per-pixel softmax(scale * H y_c). The last axis of `y_c` must equal cb.n().
/// `scale` defaults to 1, i.e. no normalisation of H.
LayerActivation hadamard_forward(const codes::Codebook& cb, const Tensor& y_c,
                                 double scale = 1.0);

/// dL/dy_c = scale * H (s * g - s (s . g)) per pixel, with s the cached output.
Tensor hadamard_backward(const LayerActivation& act, const Tensor& grad_out);

}  // namespace hadseg::layer
