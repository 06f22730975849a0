#include "hadseg/netkit/graph.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <random>

#include "hadseg/error.hpp"

namespace hadseg::netkit {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

struct ConvGeometry {
  std::size_t batch, in_h, in_w, in_c, out_h, out_w, out_c, kernel, pad, stride;

  std::size_t patch() const { return kernel * kernel * in_c; }
  std::size_t out_pixels() const { return out_h * out_w; }
};

ConvGeometry conv_geometry(const Shape& x, const Shape& w, int stride) {
  ConvGeometry g{};
  g.batch = x[0];
  g.in_h = x[1];
  g.in_w = x[2];
  g.in_c = x[3];
  g.kernel = w[0];
  g.pad = w[0] / 2;
  g.stride = static_cast<std::size_t>(stride);
  g.out_c = w[3];
  g.out_h = (g.in_h - 1) / g.stride + 1;
  g.out_w = (g.in_w - 1) / g.stride + 1;
  return g;
}

// Fills cols[out_pixel, (kh, kw, ci)] for one image; zero where padded.
void im2col(const ConvGeometry& g, const double* x, double* cols) {
  const std::size_t patch = g.patch();
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      double* dst = cols + (oy * g.out_w + ox) * patch;
      for (std::size_t ky = 0; ky < g.kernel; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                  static_cast<std::ptrdiff_t>(g.pad);
        for (std::size_t kx = 0; kx < g.kernel; ++kx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                    static_cast<std::ptrdiff_t>(g.pad);
          double* cell = dst + (ky * g.kernel + kx) * g.in_c;
          if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h) ||
              ix >= static_cast<std::ptrdiff_t>(g.in_w)) {
            std::fill(cell, cell + g.in_c, 0.0);
          } else {
            const double* src = x + (static_cast<std::size_t>(iy) * g.in_w +
                                     static_cast<std::size_t>(ix)) * g.in_c;
            std::copy(src, src + g.in_c, cell);
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeometry& g, const double* cols, double* dx) {
  const std::size_t patch = g.patch();
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      const double* src = cols + (oy * g.out_w + ox) * patch;
      for (std::size_t ky = 0; ky < g.kernel; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                  static_cast<std::ptrdiff_t>(g.pad);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
        for (std::size_t kx = 0; kx < g.kernel; ++kx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                    static_cast<std::ptrdiff_t>(g.pad);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
          const double* cell = src + (ky * g.kernel + kx) * g.in_c;
          double* d = dx + (static_cast<std::size_t>(iy) * g.in_w +
                            static_cast<std::size_t>(ix)) * g.in_c;
          for (std::size_t c = 0; c < g.in_c; ++c) d[c] += cell[c];
        }
      }
    }
  }
}

bool is_pointwise(const ConvGeometry& g) { return g.kernel == 1 && g.stride == 1; }

void require_rank4(const Shape& s, const char* op) {
  if (s.size() != 4) {
    throw ShapeError(std::string(op) + " expects an [N, H, W, C] input, got " +
                     shape_string(s));
  }
}

}  // namespace

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kInput: return "input";
    case OpKind::kParam: return "param";
    case OpKind::kConv2d: return "conv2d";
    case OpKind::kLeakyRelu: return "leaky_relu";
    case OpKind::kRelu: return "relu";
    case OpKind::kUpsample2x: return "upsample2x";
    case OpKind::kConcat: return "concat";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kHadamardHead: return "hadamard_head";
  }
  return "?";
}

void Graph::check_id(NodeId id) const {
  if (id.index >= nodes_.size()) {
    throw ShapeError("node id " + std::to_string(id.index) + " not in graph");
  }
}

Shape Graph::infer_shape(const Node& node, const std::vector<Shape>& in) const {
  const char* op = op_name(node.kind).data();
  switch (node.kind) {
    case OpKind::kInput:
    case OpKind::kParam:
      return node.shape;
    case OpKind::kConv2d: {
      const Shape& x = in[0];
      const Shape& w = in[1];
      const Shape& b = in[2];
      require_rank4(x, op);
      if (w.size() != 4 || w[0] != w[1] || w[0] % 2 == 0) {
        throw ShapeError("conv2d weight must be [K, K, Ci, Co] with odd K, got " +
                         shape_string(w));
      }
      if (w[2] != x[3]) {
        throw ShapeError("conv2d weight expects " + std::to_string(w[2]) +
                         " input channels, input has " + std::to_string(x[3]));
      }
      if (b.size() != 1 || b[0] != w[3]) {
        throw ShapeError("conv2d bias must be [" + std::to_string(w[3]) + "], got " +
                         shape_string(b));
      }
      if (node.stride != 1 && node.stride != 2) {
        throw ShapeError("conv2d stride must be 1 or 2");
      }
      const auto g = conv_geometry(x, w, node.stride);
      return {g.batch, g.out_h, g.out_w, g.out_c};
    }
    case OpKind::kUpsample2x:
      require_rank4(in[0], op);
      return {in[0][0], in[0][1] * 2, in[0][2] * 2, in[0][3]};
    case OpKind::kConcat: {
      require_rank4(in[0], op);
      require_rank4(in[1], op);
      for (int a = 0; a < 3; ++a) {
        if (in[0][a] != in[1][a]) {
          throw ShapeError("concat operands disagree: " + shape_string(in[0]) + " vs " +
                           shape_string(in[1]));
        }
      }
      return {in[0][0], in[0][1], in[0][2], in[0][3] + in[1][3]};
    }
    case OpKind::kHadamardHead:
      if (in[0].empty() || in[0].back() != node.codebook->n()) {
        throw ShapeError("hadamard_head expects " + std::to_string(node.codebook->n()) +
                         " channels, got " + shape_string(in[0]));
      }
      return in[0];
    case OpKind::kSoftmax:
      if (in[0].empty()) throw ShapeError("softmax of a scalar");
      return in[0];
    case OpKind::kLeakyRelu:
    case OpKind::kRelu:
    case OpKind::kSigmoid:
      return in[0];
  }
  return {};
}

NodeId Graph::add(Node node) {
  std::vector<Shape> in;
  for (NodeId id : node.inputs) {
    check_id(id);
    in.push_back(nodes_[id.index].shape);
  }
  node.shape = infer_shape(node, in);
  nodes_.push_back(std::move(node));
  return NodeId{nodes_.size() - 1};
}

NodeId Graph::input(std::string name, Shape shape) {
  Node n{};
  n.kind = OpKind::kInput;
  n.name = std::move(name);
  n.shape = std::move(shape);
  return add(std::move(n));
}

NodeId Graph::param(std::string name, Tensor init) {
  if (find_parameter(name)) throw ConfigError("duplicate parameter name " + name);
  Node n{};
  n.kind = OpKind::kParam;
  n.name = std::move(name);
  n.shape = init.shape();
  n.grad = Tensor(init.shape());
  n.value = std::move(init);
  const NodeId id = add(std::move(n));
  params_.push_back(id);
  return id;
}

NodeId Graph::conv2d(NodeId x, NodeId weight, NodeId bias, int stride) {
  Node n{};
  n.kind = OpKind::kConv2d;
  n.inputs = {x, weight, bias};
  n.stride = stride;
  return add(std::move(n));
}

NodeId Graph::leaky_relu(NodeId x, double slope) {
  Node n{};
  n.kind = OpKind::kLeakyRelu;
  n.inputs = {x};
  n.slope = slope;
  return add(std::move(n));
}

NodeId Graph::relu(NodeId x) {
  Node n{};
  n.kind = OpKind::kRelu;
  n.inputs = {x};
  return add(std::move(n));
}

NodeId Graph::upsample2x(NodeId x) {
  Node n{};
  n.kind = OpKind::kUpsample2x;
  n.inputs = {x};
  return add(std::move(n));
}

NodeId Graph::concat(NodeId a, NodeId b) {
  Node n{};
  n.kind = OpKind::kConcat;
  n.inputs = {a, b};
  return add(std::move(n));
}

NodeId Graph::sigmoid(NodeId x) {
  Node n{};
  n.kind = OpKind::kSigmoid;
  n.inputs = {x};
  return add(std::move(n));
}

NodeId Graph::softmax(NodeId x) {
  Node n{};
  n.kind = OpKind::kSoftmax;
  n.inputs = {x};
  return add(std::move(n));
}

NodeId Graph::hadamard_head(NodeId x, codes::Codebook cb, double scale) {
  Node n{};
  n.kind = OpKind::kHadamardHead;
  n.inputs = {x};
  n.codebook = std::make_shared<const codes::Codebook>(std::move(cb));
  n.scale = scale;
  return add(std::move(n));
}

void Graph::set_input(NodeId id, Tensor value) {
  check_id(id);
  Node& n = nodes_[id.index];
  if (n.kind != OpKind::kInput) throw ShapeError("node " + n.name + " is not an input");
  // Declared shape fixes rank and channel count; other extents may vary.
  const Shape& decl = n.shape;
  if (value.rank() != decl.size() || (!decl.empty() && value.shape().back() != decl.back())) {
    throw ShapeError("input " + n.name + " expects shape like " + shape_string(decl) +
                     ", got " + shape_string(value.shape()));
  }
  n.value = std::move(value);
}

Tensor& Graph::mutable_value(NodeId id) {
  check_id(id);
  return nodes_[id.index].value;
}

std::optional<NodeId> Graph::find_parameter(const std::string& name) const {
  for (NodeId id : params_) {
    if (nodes_[id.index].name == name) return id;
  }
  return std::nullopt;
}

std::size_t Graph::parameter_count() const {
  std::size_t total = 0;
  for (NodeId id : params_) total += nodes_[id.index].value.size();
  return total;
}

void Graph::forward() {
  for (Node& node : nodes_) {
    if (node.kind == OpKind::kParam) continue;
    if (node.kind == OpKind::kInput) {
      if (node.value.empty()) throw ShapeError("input " + node.name + " was not set");
      continue;
    }
    std::vector<Shape> in;
    for (NodeId id : node.inputs) in.push_back(nodes_[id.index].value.shape());
    node.shape = infer_shape(node, in);
    forward_node(node);
  }
}

void Graph::forward_node(Node& node) {
  const Tensor& x = nodes_[node.inputs[0].index].value;
  switch (node.kind) {
    case OpKind::kConv2d: {
      const Tensor& w = nodes_[node.inputs[1].index].value;
      const Tensor& b = nodes_[node.inputs[2].index].value;
      const auto g = conv_geometry(x.shape(), w.shape(), node.stride);
      node.value = Tensor(node.shape);
      ConstMap wm(w.data().data(), static_cast<Eigen::Index>(g.patch()),
                  static_cast<Eigen::Index>(g.out_c));
      Eigen::Map<const Eigen::RowVectorXd> bv(b.data().data(),
                                              static_cast<Eigen::Index>(g.out_c));
      AlignedBuffer cols;
      if (!is_pointwise(g)) cols.resize(g.out_pixels() * g.patch());
      for (std::size_t n = 0; n < g.batch; ++n) {
        const double* xin = x.data().data() + n * g.in_h * g.in_w * g.in_c;
        const double* src = xin;
        if (!is_pointwise(g)) {
          im2col(g, xin, cols.data());
          src = cols.data();
        }
        ConstMap cm(src, static_cast<Eigen::Index>(g.out_pixels()),
                    static_cast<Eigen::Index>(g.patch()));
        MutMap om(node.value.data().data() + n * g.out_pixels() * g.out_c,
                  static_cast<Eigen::Index>(g.out_pixels()),
                  static_cast<Eigen::Index>(g.out_c));
        om.noalias() = cm * wm;
        om.rowwise() += bv;
      }
      break;
    }
    case OpKind::kLeakyRelu:
      node.value = x;
      for (double& v : node.value.data()) v = v > 0.0 ? v : node.slope * v;
      break;
    case OpKind::kRelu:
      node.value = x;
      for (double& v : node.value.data()) v = v > 0.0 ? v : 0.0;
      break;
    case OpKind::kSigmoid:
      node.value = x;
      for (double& v : node.value.data()) {
        v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
      }
      break;
    case OpKind::kSoftmax:
      node.value = x;
      layer::softmax_last_axis(node.value.data(), node.shape.back());
      break;
    case OpKind::kHadamardHead:
      node.activation = layer::hadamard_forward(*node.codebook, x, node.scale);
      node.value = node.activation->output;
      break;
    case OpKind::kUpsample2x: {
      node.value = Tensor(node.shape);
      const std::size_t nb = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
      const double* src = x.data().data();
      double* dst = node.value.data().data();
      for (std::size_t n = 0; n < nb; ++n) {
        for (std::size_t oy = 0; oy < 2 * h; ++oy) {
          for (std::size_t ox = 0; ox < 2 * w; ++ox) {
            const double* s = src + ((n * h + oy / 2) * w + ox / 2) * c;
            std::copy(s, s + c, dst + ((n * 2 * h + oy) * 2 * w + ox) * c);
          }
        }
      }
      break;
    }
    case OpKind::kConcat: {
      const Tensor& y = nodes_[node.inputs[1].index].value;
      node.value = Tensor(node.shape);
      const std::size_t ca = x.shape().back(), cb = y.shape().back();
      const std::size_t pixels = x.size() / ca;
      double* dst = node.value.data().data();
      for (std::size_t p = 0; p < pixels; ++p) {
        std::copy_n(x.data().data() + p * ca, ca, dst + p * (ca + cb));
        std::copy_n(y.data().data() + p * cb, cb, dst + p * (ca + cb) + ca);
      }
      break;
    }
    case OpKind::kInput:
    case OpKind::kParam:
      break;
  }
}

void Graph::zero_grad() {
  for (NodeId id : params_) nodes_[id.index].grad.fill(0.0);
}

void Graph::backward(NodeId node, const Tensor& grad) {
  const Seed seed{node, &grad};
  backward(std::span<const Seed>(&seed, 1));
}

void Graph::backward(std::span<const Seed> seeds) {
  std::vector<bool> live(nodes_.size(), false);
  for (Node& n : nodes_) {
    if (n.kind != OpKind::kParam) n.grad = Tensor();
  }
  auto ensure_grad = [](Node& n) {
    if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
  };
  for (const Seed& s : seeds) {
    check_id(s.node);
    Node& n = nodes_[s.node.index];
    require_same_shape(n.value, *s.grad, "backward seed");
    ensure_grad(n);
    for (std::size_t i = 0; i < n.grad.size(); ++i) n.grad[i] += (*s.grad)[i];
    live[s.node.index] = true;
  }
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (!live[i]) continue;
    Node& node = nodes_[i];
    if (node.kind == OpKind::kInput || node.kind == OpKind::kParam) continue;
    for (NodeId in : node.inputs) {
      ensure_grad(nodes_[in.index]);
      live[in.index] = true;
    }
    backward_node(node);
  }
}

void Graph::backward_node(Node& node) {
  Node& xn = nodes_[node.inputs[0].index];
  const Tensor& g = node.grad;
  switch (node.kind) {
    case OpKind::kConv2d: {
      Node& wn = nodes_[node.inputs[1].index];
      Node& bn = nodes_[node.inputs[2].index];
      const auto geo = conv_geometry(xn.value.shape(), wn.value.shape(), node.stride);
      const auto rows = static_cast<Eigen::Index>(geo.out_pixels());
      const auto patch = static_cast<Eigen::Index>(geo.patch());
      const auto oc = static_cast<Eigen::Index>(geo.out_c);
      ConstMap wm(wn.value.data().data(), patch, oc);
      MutMap dwm(wn.grad.data().data(), patch, oc);
      Eigen::Map<Eigen::RowVectorXd> dbv(bn.grad.data().data(), oc);
      AlignedBuffer cols;
      AlignedBuffer dcols(geo.out_pixels() * geo.patch());
      if (!is_pointwise(geo)) cols.resize(geo.out_pixels() * geo.patch());
      const std::size_t in_stride = geo.in_h * geo.in_w * geo.in_c;
      for (std::size_t n = 0; n < geo.batch; ++n) {
        const double* xin = xn.value.data().data() + n * in_stride;
        const double* src = xin;
        if (!is_pointwise(geo)) {
          im2col(geo, xin, cols.data());
          src = cols.data();
        }
        ConstMap cm(src, rows, patch);
        ConstMap gm(g.data().data() + n * geo.out_pixels() * geo.out_c, rows, oc);
        dwm.noalias() += cm.transpose() * gm;
        dbv += gm.colwise().sum();
        double* dx = xn.grad.data().data() + n * in_stride;
        if (is_pointwise(geo)) {
          MutMap dxm(dx, rows, patch);
          dxm.noalias() += gm * wm.transpose();
        } else {
          MutMap dcm(dcols.data(), rows, patch);
          dcm.noalias() = gm * wm.transpose();
          col2im_add(geo, dcols.data(), dx);
        }
      }
      break;
    }
    case OpKind::kLeakyRelu:
      for (std::size_t i = 0; i < g.size(); ++i) {
        xn.grad[i] += xn.value[i] > 0.0 ? g[i] : node.slope * g[i];
      }
      break;
    case OpKind::kRelu:
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (xn.value[i] > 0.0) xn.grad[i] += g[i];
      }
      break;
    case OpKind::kSigmoid:
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = node.value[i];
        xn.grad[i] += g[i] * s * (1.0 - s);
      }
      break;
    case OpKind::kSoftmax: {
      const std::size_t c = node.shape.back();
      for (std::size_t p = 0; p < g.size(); p += c) {
        double dot = 0.0;
        for (std::size_t i = 0; i < c; ++i) dot += node.value[p + i] * g[p + i];
        for (std::size_t i = 0; i < c; ++i) {
          xn.grad[p + i] += node.value[p + i] * (g[p + i] - dot);
        }
      }
      break;
    }
    case OpKind::kHadamardHead: {
      const Tensor d = layer::hadamard_backward(*node.activation, g);
      for (std::size_t i = 0; i < d.size(); ++i) xn.grad[i] += d[i];
      break;
    }
    case OpKind::kUpsample2x: {
      const std::size_t nb = xn.value.dim(0), h = xn.value.dim(1), w = xn.value.dim(2),
                        c = xn.value.dim(3);
      for (std::size_t n = 0; n < nb; ++n) {
        for (std::size_t oy = 0; oy < 2 * h; ++oy) {
          for (std::size_t ox = 0; ox < 2 * w; ++ox) {
            const double* s = g.data().data() + ((n * 2 * h + oy) * 2 * w + ox) * c;
            double* d = xn.grad.data().data() + ((n * h + oy / 2) * w + ox / 2) * c;
            for (std::size_t k = 0; k < c; ++k) d[k] += s[k];
          }
        }
      }
      break;
    }
    case OpKind::kConcat: {
      Node& yn = nodes_[node.inputs[1].index];
      const std::size_t ca = xn.value.shape().back(), cb = yn.value.shape().back();
      const std::size_t pixels = xn.value.size() / ca;
      for (std::size_t p = 0; p < pixels; ++p) {
        const double* s = g.data().data() + p * (ca + cb);
        for (std::size_t k = 0; k < ca; ++k) xn.grad[p * ca + k] += s[k];
        for (std::size_t k = 0; k < cb; ++k) yn.grad[p * cb + k] += s[ca + k];
      }
      break;
    }
    case OpKind::kInput:
    case OpKind::kParam:
      break;
  }
}

Tensor init_conv_weight(std::size_t kernel, std::size_t in_ch, std::size_t out_ch,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(kernel * kernel * in_ch));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor w({kernel, kernel, in_ch, out_ch});
  for (double& v : w.data()) v = dist(rng);
  return w;
}

}  // namespace hadseg::netkit
