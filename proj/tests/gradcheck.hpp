#pragma once

#include <random>
#include <vector>

#include "hadseg/netkit/graph.hpp"
#include "oracles.hpp"

namespace oracle {

// Projects `out` onto a fixed random direction G so that the scalar
// f = <G, out> exercises every output entry.
struct GraphProbe {
  hadseg::netkit::Graph& graph;
  hadseg::netkit::NodeId out;
  hadseg::Tensor direction;

  double value() {
    graph.forward();
    const auto& y = graph.value(out);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += direction[i] * y[i];
    return s;
  }
};

inline GraphProbe make_probe(hadseg::netkit::Graph& g, hadseg::netkit::NodeId out,
                             std::mt19937_64& rng) {
  g.forward();
  return {g, out, random_tensor(g.value(out).shape(), rng)};
}

// Largest relative error between analytic and central-difference gradients
// over `wrt` (inputs or parameters).
inline double max_graph_grad_error(GraphProbe& probe,
                                   const std::vector<hadseg::netkit::NodeId>& wrt,
                                   double h = 1e-6) {
  auto& g = probe.graph;
  g.forward();
  g.zero_grad();
  g.backward(probe.out, probe.direction);
  double worst = 0.0;
  for (auto id : wrt) {
    const hadseg::Tensor analytic = g.grad(id);
    const hadseg::Tensor numeric =
        numeric_grad([&] { return probe.value(); }, g.mutable_value(id), h);
    worst = std::max(worst, rel_error(analytic, numeric));
  }
  g.forward();
  return worst;
}

}  // namespace oracle
