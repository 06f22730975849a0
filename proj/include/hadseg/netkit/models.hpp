#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "hadseg/netkit/graph.hpp"

namespace hadseg::netkit {

enum class Head { kOneHot, kHadamard };

std::string_view head_name(Head head);
/// Accepts "one_hot" or "hadamard"; throws ConfigError otherwise.
Head parse_head(std::string_view text);

struct GeneratorConfig {
  std::size_t input_channels = 3;
  std::size_t depth = 2;
  std::size_t base_channels = 8;
  int code_bits = 3;
  Head head = Head::kHadamard;
  double head_scale = 1.0;

  std::size_t output_channels() const { return std::size_t{1} << code_bits; }
  void validate() const;
};

/// UNet-lite: stem conv, `depth` stride-2 conv stages, mirrored
/// nearest-upsample + skip-concat + conv stages, 1x1 conv to 2^k code
/// channels, then the head. Both heads add no parameters.
struct Generator {
  GeneratorConfig config;
  Graph graph;
  NodeId image;   // [N, H, W, Ci]
  NodeId code;    // pre-head output, [N, H, W, 2^k]
  NodeId output;  // per-pixel probabilities, [N, H, W, 2^k]
};

Generator build_generator(const GeneratorConfig& cfg, std::uint64_t seed = 0);

struct DiscriminatorConfig {
  std::size_t input_channels = 11;
  std::size_t layers = 3;  // stride-2 conv stages before the 1-channel head
  std::size_t base_channels = 8;
  std::size_t kernel = 3;

  /// Side of the input window seen by one output cell:
  /// r <- r + (kernel - 1) * jump over every conv, jump doubling per stride.
  std::size_t receptive_field() const;
  /// Throws ConfigError when the config is malformed or the receptive field
  /// exceeds the input.
  void validate(std::size_t input_height, std::size_t input_width) const;
};

/// PatchGAN-lite: `layers` x (stride-2 conv + leaky_relu), then a stride-1
/// conv to one channel and a sigmoid, giving an h x w map of probabilities.
struct Discriminator {
  DiscriminatorConfig config;
  Graph graph;
  NodeId input;   // [N, H, W, Cx + Cy]
  NodeId logits;  // [N, h, w, 1]
  NodeId alpha;   // sigmoid(logits)
};

Discriminator build_discriminator(const DiscriminatorConfig& cfg,
                                  std::size_t input_height,
                                  std::size_t input_width,
                                  std::uint64_t seed = 0);

}  // namespace hadseg::netkit
