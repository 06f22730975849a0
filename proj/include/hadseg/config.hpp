#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "hadseg/loss.hpp"
#include "hadseg/netkit/models.hpp"
#include "hadseg/netkit/train.hpp"

namespace hadseg {

/// Where training and test samples come from.
struct DataSource {
  enum class Kind { kSynthetic, kDirectory };
  Kind kind = Kind::kSynthetic;
  // synthetic
  std::uint64_t seed = 1;
  std::size_t train_count = 200;
  std::size_t test_count = 50;
  std::size_t size = 64;
  // directory
  std::filesystem::path train_dir;
  std::filesystem::path test_dir;
};

/// Every knob of one experiment. Text grammar (one document):
///
///   # comment                 blank lines ignored
///   [section]                 codebook | generator | discriminator | loss
///                             | train | data
///   key = value
///
///   [codebook]       k, classes
///   [generator]      depth, base_channels, head_scale, head
///   [discriminator]  layers, base_channels, kernel
///   [loss]           lambda1, lambda2, lambda3
///   [train]          steps, batch_size, seed, lr, beta1, beta2, eps,
///                    disc_lr, metrics_every
///   [data]           source (synthetic | directory), seed, train_count,
///                    test_count, size, train_dir, test_dir
///
/// Unknown sections or keys are rejected.
struct ExperimentConfig {
  netkit::GeneratorConfig generator;
  netkit::DiscriminatorConfig discriminator;
  netkit::TrainOptions train;
  DataSource data;

  int code_bits() const { return generator.code_bits; }
  std::size_t num_classes() const { return train.num_classes; }

  /// Cross-field checks: K vs 2^k, image size vs depth and receptive field.
  /// Throws ConfigError.
  void validate() const;
};

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& cfg);

}  // namespace hadseg
