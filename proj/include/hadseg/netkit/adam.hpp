#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hadseg/netkit/graph.hpp"
#include "hadseg/tensor.hpp"

namespace hadseg::netkit {

struct AdamOptions {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::size_t step = 0;
};

/// One bias-corrected Adam update. params[i] and grads[i] must share a
/// shape; state is lazily sized on the first call.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
               AdamState& state, const AdamOptions& opt);

/// Applies adam_step to every parameter of `graph` using its accumulated
/// gradients.
void adam_step(Graph& graph, AdamState& state, const AdamOptions& opt);

}  // namespace hadseg::netkit
