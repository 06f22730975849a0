#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hadseg/codes.hpp"
#include "hadseg/layer.hpp"
#include "hadseg/tensor.hpp"

namespace hadseg::netkit {

struct NodeId {
  std::size_t index = 0;
  bool operator==(const NodeId&) const = default;
};

enum class OpKind {
  kInput,
  kParam,
  kConv2d,
  kLeakyRelu,
  kRelu,
  kUpsample2x,
  kConcat,
  kSigmoid,
  kSoftmax,
  kHadamardHead,
};

std::string_view op_name(OpKind kind);

/// Static reverse-mode graph over NHWC tensors. Nodes are appended in
/// topological order; shapes are inferred (and checked) when an op is added
/// and again on every forward pass, so the batch and spatial sizes of the
/// inputs may change between runs as long as channel counts agree.
///
/// Parameter gradients accumulate across backward() calls until zero_grad().
class Graph {
 public:
  struct Seed {
    NodeId node;
    const Tensor* grad;
  };

  NodeId input(std::string name, Shape shape);
  NodeId param(std::string name, Tensor init);

  /// x: [N, H, W, Ci]; weight: [K, K, Ci, Co] with odd K; bias: [Co].
  /// Zero "same" padding of K/2; output spatial size ceil(H / stride).
  NodeId conv2d(NodeId x, NodeId weight, NodeId bias, int stride);
  NodeId leaky_relu(NodeId x, double slope = 0.2);
  NodeId relu(NodeId x);
  NodeId upsample2x(NodeId x);
  /// Concatenation along the channel (last) axis.
  NodeId concat(NodeId a, NodeId b);
  NodeId sigmoid(NodeId x);
  /// Softmax over the channel axis.
  NodeId softmax(NodeId x);
  /// Hadamard layer over the channel axis; delegates to hadseg::layer.
  NodeId hadamard_head(NodeId x, codes::Codebook cb, double scale = 1.0);

  void set_input(NodeId id, Tensor value);
  void forward();
  void zero_grad();
  /// Accumulates d(sum_i <seed_i, node_i>) into every node's gradient.
  void backward(std::span<const Seed> seeds);
  void backward(NodeId node, const Tensor& grad);

  const Tensor& value(NodeId id) const { return nodes_.at(id.index).value; }
  const Tensor& grad(NodeId id) const { return nodes_.at(id.index).grad; }
  Tensor& mutable_value(NodeId id);
  const Shape& shape(NodeId id) const { return nodes_.at(id.index).shape; }
  OpKind kind(NodeId id) const { return nodes_.at(id.index).kind; }
  const std::string& name(NodeId id) const { return nodes_.at(id.index).name; }

  const std::vector<NodeId>& parameters() const noexcept { return params_; }
  std::optional<NodeId> find_parameter(const std::string& name) const;
  std::size_t parameter_count() const;
  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    OpKind kind;
    std::string name;
    std::vector<NodeId> inputs;
    Shape shape;
    int stride = 1;
    double slope = 0.2;
    std::shared_ptr<const codes::Codebook> codebook;
    double scale = 1.0;
    Tensor value;
    Tensor grad;
    std::optional<layer::LayerActivation> activation;
  };

  NodeId add(Node node);
  Shape infer_shape(const Node& node, const std::vector<Shape>& in) const;
  void check_id(NodeId id) const;

  void forward_node(Node& node);
  void backward_node(Node& node);

  std::vector<Node> nodes_;
  std::vector<NodeId> params_;
};

/// Seeded fan-in scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in))
/// with fan_in = K*K*Ci. Layout [K, K, Ci, Co].
Tensor init_conv_weight(std::size_t kernel, std::size_t in_ch, std::size_t out_ch,
                        std::uint64_t seed);

}  // namespace hadseg::netkit
