#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "hadseg/data.hpp"
#include "hadseg/loss.hpp"
#include "hadseg/metrics.hpp"
#include "hadseg/netkit/adam.hpp"
#include "hadseg/netkit/models.hpp"

namespace hadseg::netkit {

/// Thread count used by every kernel; recorded in history headers.
inline constexpr int kKernelThreads = 1;

struct TrainOptions {
  std::size_t steps = 1000;
  std::size_t batch_size = 4;
  std::size_t num_classes = 8;  // K, active classes
  std::uint64_t seed = 0;
  AdamOptions gen_adam;
  AdamOptions disc_adam;
  loss::LossWeights weights;
  std::size_t metrics_every = 50;  // 0 disables periodic metrics
};

struct HistoryRow {
  std::size_t step = 0;
  double d_loss = 0.0;
  loss::GeneratorLossTerms g;
};

/// Pixel accuracy / mean IoU on the batch seen at `step`, before the update.
struct MetricsRow {
  std::size_t step = 0;
  double pixel_accuracy = 0.0;
  double mean_iou = 0.0;
};

struct TrainHistory {
  std::vector<HistoryRow> losses;
  std::vector<MetricsRow> metrics;
};

struct TrainResult {
  Generator generator;
  Discriminator discriminator;
  TrainHistory history;
};

using ProgressFn = std::function<void(const HistoryRow&)>;

/// Alternating cGAN training: per step one discriminator update on the real
/// pair (x, y) and the fake pair (x, y_hat), then one generator update on the
/// four-term objective. The code term compares the pre-head output with
/// Hadamard codewords and is disabled for the one-hot head.
/// The discriminator's input channel count is derived from the generator.
/// Throws NumericError on a non-finite loss.
TrainResult train_cgan(const GeneratorConfig& gen_cfg, DiscriminatorConfig disc_cfg,
                       const std::vector<data::Sample>& dataset, const TrainOptions& opt,
                       const ProgressFn& progress = {});

/// Generator probabilities for a [N, H, W, C] image batch.
Tensor predict(Generator& gen, const Tensor& images);

/// Global confusion matrix of argmax predictions over `samples`.
metrics::ConfusionMatrix evaluate(Generator& gen, const std::vector<data::Sample>& samples,
                                  std::size_t num_classes, std::size_t batch_size = 8);

/// "step,L_D,S_adv,S_ce,MAE_y,MAE_yc,L_G_total" preceded by one '#' line
/// recording head, seed and kernel thread count.
void write_history_csv(std::ostream& os, const TrainHistory& h, Head head,
                       std::uint64_t seed);
void write_metrics_csv(std::ostream& os, const TrainHistory& h);

}  // namespace hadseg::netkit
