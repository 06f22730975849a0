#include "hadseg/netkit/adam.hpp"

#include <cmath>

#include "hadseg/error.hpp"

namespace hadseg::netkit {

void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
               AdamState& state, const AdamOptions& opt) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step: parameter and gradient counts differ");
  }
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.emplace_back(p->shape());
      state.v.emplace_back(p->shape());
    }
  }
  if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state does not match parameter list");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    require_same_shape(p, g, "adam_step");
    require_same_shape(p, state.m[i], "adam_step state");
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = opt.beta1 * m[j] + (1.0 - opt.beta1) * g[j];
      v[j] = opt.beta2 * v[j] + (1.0 - opt.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      p[j] -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.eps);
    }
  }
}

void adam_step(Graph& graph, AdamState& state, const AdamOptions& opt) {
  std::vector<Tensor*> params;
  std::vector<const Tensor*> grads;
  for (NodeId id : graph.parameters()) {
    params.push_back(&graph.mutable_value(id));
    grads.push_back(&graph.grad(id));
  }
  adam_step(params, grads, state, opt);
}

}  // namespace hadseg::netkit
