#include "hadseg/netkit/models.hpp"

#include "hadseg/error.hpp"

namespace hadseg::netkit {

namespace {

std::uint64_t param_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t x = seed * 0x9E3779B97F4A7C15ULL + index + 1;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct ConvBuilder {
  Graph& g;
  std::string prefix;
  std::uint64_t seed;
  std::uint64_t counter = 0;

  NodeId conv(const std::string& name, NodeId x, std::size_t kernel, std::size_t in_ch,
              std::size_t out_ch, int stride) {
    const NodeId w = g.param(prefix + name + ".w",
                             init_conv_weight(kernel, in_ch, out_ch, param_seed(seed, counter++)));
    const NodeId b = g.param(prefix + name + ".b", Tensor({out_ch}));
    return g.conv2d(x, w, b, stride);
  }
};

}  // namespace

std::string_view head_name(Head head) {
  return head == Head::kOneHot ? "one_hot" : "hadamard";
}

Head parse_head(std::string_view text) {
  if (text == "one_hot" || text == "onehot" || text == "one-hot") return Head::kOneHot;
  if (text == "hadamard") return Head::kHadamard;
  throw ConfigError("unknown head '" + std::string(text) + "' (one_hot | hadamard)");
}

void GeneratorConfig::validate() const {
  if (input_channels == 0) throw ConfigError("generator input_channels must be >= 1");
  if (depth < 1) throw ConfigError("generator depth must be >= 1");
  if (depth > 8) throw ConfigError("generator depth must be <= 8");
  if (base_channels == 0) throw ConfigError("generator base_channels must be >= 1");
  if (code_bits < 0 || code_bits > 10) throw ConfigError("code_bits must be in [0, 10]");
  if (!(head_scale > 0.0)) throw ConfigError("head scale must be positive");
}

Generator build_generator(const GeneratorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Generator gen{cfg, Graph{}, {}, {}, {}};
  Graph& g = gen.graph;
  ConvBuilder cb{g, "gen.", seed};
  const std::size_t side = std::size_t{1} << cfg.depth;
  gen.image = g.input("image", {1, side, side, cfg.input_channels});

  auto channels = [&](std::size_t level) { return cfg.base_channels << level; };

  std::vector<NodeId> skips;
  NodeId x = g.leaky_relu(cb.conv("stem", gen.image, 3, cfg.input_channels, channels(0), 1));
  skips.push_back(x);
  for (std::size_t d = 1; d <= cfg.depth; ++d) {
    x = g.leaky_relu(
        cb.conv("down" + std::to_string(d), x, 3, channels(d - 1), channels(d), 2));
    skips.push_back(x);
  }
  for (std::size_t d = cfg.depth; d >= 1; --d) {
    const NodeId up = g.upsample2x(x);
    const NodeId cat = g.concat(up, skips[d - 1]);
    x = g.relu(cb.conv("up" + std::to_string(d), cat, 3, channels(d) + channels(d - 1),
                       channels(d - 1), 1));
  }
  gen.code = cb.conv("out", x, 1, channels(0), cfg.output_channels(), 1);
  if (cfg.head == Head::kHadamard) {
    gen.output = g.hadamard_head(gen.code, codes::sylvester(cfg.code_bits), cfg.head_scale);
  } else {
    gen.output = g.softmax(gen.code);
  }
  return gen;
}

std::size_t DiscriminatorConfig::receptive_field() const {
  std::size_t r = 1, jump = 1;
  for (std::size_t i = 0; i < layers; ++i) {
    r += (kernel - 1) * jump;
    jump *= 2;
  }
  r += (kernel - 1) * jump;  // final stride-1 conv
  return r;
}

void DiscriminatorConfig::validate(std::size_t input_height, std::size_t input_width) const {
  if (input_channels == 0) throw ConfigError("discriminator input_channels must be >= 1");
  if (base_channels == 0) throw ConfigError("discriminator base_channels must be >= 1");
  if (kernel % 2 == 0 || kernel == 0) throw ConfigError("discriminator kernel must be odd");
  if (layers > 8) throw ConfigError("discriminator layers must be <= 8");
  const std::size_t rf = receptive_field();
  if (rf > input_height || rf > input_width) {
    throw ConfigError("discriminator receptive field " + std::to_string(rf) +
                      " exceeds input " + std::to_string(input_height) + "x" +
                      std::to_string(input_width));
  }
}

Discriminator build_discriminator(const DiscriminatorConfig& cfg, std::size_t input_height,
                                  std::size_t input_width, std::uint64_t seed) {
  cfg.validate(input_height, input_width);
  Discriminator disc{cfg, Graph{}, {}, {}, {}};
  Graph& g = disc.graph;
  ConvBuilder cb{g, "disc.", seed};
  disc.input = g.input("pair", {1, input_height, input_width, cfg.input_channels});
  NodeId x = disc.input;
  std::size_t in_ch = cfg.input_channels;
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    const std::size_t out_ch = cfg.base_channels << i;
    x = g.leaky_relu(cb.conv("l" + std::to_string(i), x, cfg.kernel, in_ch, out_ch, 2));
    in_ch = out_ch;
  }
  disc.logits = cb.conv("head", x, cfg.kernel, in_ch, 1, 1);
  disc.alpha = g.sigmoid(disc.logits);
  return disc;
}

}  // namespace hadseg::netkit
