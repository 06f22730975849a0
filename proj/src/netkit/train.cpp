#include "hadseg/netkit/train.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

#include "hadseg/error.hpp"

namespace hadseg::netkit {

namespace {

struct Batch {
  Tensor images;   // [N, H, W, Ci]
  Tensor one_hot;  // [N, H, W, n]
  Tensor code;     // [N, H, W, n]
  std::vector<const data::Sample*> samples;
};

Batch make_batch(const std::vector<const data::Sample*>& samples, const codes::Codebook& cb) {
  Batch b;
  b.samples = samples;
  b.images = data::stack_images(samples);
  std::vector<Tensor> oh, code;
  for (const auto* s : samples) {
    auto t = data::encode_targets(s->labels, cb);
    oh.push_back(std::move(t.one_hot));
    code.push_back(std::move(t.hadamard));
  }
  b.one_hot = stack(oh);
  b.code = stack(code);
  return b;
}

void require_finite(double v, std::size_t step, const char* term) {
  if (!std::isfinite(v)) {
    throw NumericError("training diverged at step " + std::to_string(step) + ": " + term +
                       " is not finite");
  }
}

metrics::ConfusionMatrix batch_confusion(const Tensor& y_hat,
                                         const std::vector<const data::Sample*>& samples,
                                         std::size_t num_classes) {
  metrics::ConfusionMatrix cm(num_classes);
  const auto maps = metrics::argmax_maps(y_hat, num_classes);
  for (std::size_t i = 0; i < maps.size(); ++i) {
    cm += metrics::confusion(maps[i], samples[i]->labels, num_classes);
  }
  return cm;
}

}  // namespace

TrainResult train_cgan(const GeneratorConfig& gen_cfg, DiscriminatorConfig disc_cfg,
                       const std::vector<data::Sample>& dataset, const TrainOptions& opt,
                       const ProgressFn& progress) {
  if (dataset.empty()) throw DataError("training dataset is empty");
  if (opt.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  opt.weights.validate();
  gen_cfg.validate();
  const codes::Codebook cb = codes::sylvester(gen_cfg.code_bits, opt.num_classes);
  const std::size_t height = dataset.front().image.dim(0);
  const std::size_t width = dataset.front().image.dim(1);
  const std::size_t step_div = std::size_t{1} << gen_cfg.depth;
  if (height % step_div || width % step_div) {
    throw ConfigError("image size " + std::to_string(height) + "x" + std::to_string(width) +
                      " not divisible by 2^depth = " + std::to_string(step_div));
  }
  disc_cfg.input_channels = gen_cfg.input_channels + gen_cfg.output_channels();

  std::mt19937_64 rng(opt.seed);
  TrainResult r{build_generator(gen_cfg, rng()),
                build_discriminator(disc_cfg, height, width, rng()), {}};
  Generator& gen = r.generator;
  Discriminator& disc = r.discriminator;
  const bool code_term = gen_cfg.head == Head::kHadamard;

  AdamState gen_state, disc_state;
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  for (std::size_t step = 0; step < opt.steps; ++step) {
    std::vector<const data::Sample*> picked;
    for (std::size_t i = 0; i < std::min(opt.batch_size, dataset.size()); ++i) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      picked.push_back(&dataset[order[cursor++]]);
    }
    const Batch batch = make_batch(picked, cb);

    gen.graph.set_input(gen.image, batch.images);
    gen.graph.forward();
    const Tensor y_hat = gen.graph.value(gen.output);
    const Tensor y_c_hat = gen.graph.value(gen.code);

    if (opt.metrics_every && step % opt.metrics_every == 0) {
      const auto cm = batch_confusion(y_hat, batch.samples, opt.num_classes);
      r.history.metrics.push_back(
          {step, metrics::pixel_accuracy(cm), metrics::class_iou(cm).mean});
    }

    // Discriminator update on the real and the detached fake pair.
    disc.graph.zero_grad();
    disc.graph.set_input(disc.input, concat_last_axis(batch.images, batch.one_hot));
    disc.graph.forward();
    const Tensor alpha_real = disc.graph.value(disc.alpha);
    disc.graph.backward(disc.alpha, loss::real_target_grad(alpha_real));

    const Tensor fake_pair = concat_last_axis(batch.images, y_hat);
    disc.graph.set_input(disc.input, fake_pair);
    disc.graph.forward();
    const Tensor alpha_fake = disc.graph.value(disc.alpha);
    disc.graph.backward(disc.alpha, loss::fake_target_grad(alpha_fake));

    HistoryRow row;
    row.step = step;
    row.d_loss = loss::discriminator_loss(loss::DiscriminatorOutput(alpha_real),
                                          loss::DiscriminatorOutput(alpha_fake));
    require_finite(row.d_loss, step, "L_D");
    adam_step(disc.graph, disc_state, opt.disc_adam);

    // Generator update against the refreshed discriminator.
    disc.graph.set_input(disc.input, fake_pair);
    disc.graph.forward();
    const loss::DiscriminatorOutput alpha_g(disc.graph.value(disc.alpha));
    loss::GeneratorLossGrads grads;
    if (code_term) {
      row.g = loss::generator_loss(alpha_g, y_hat, batch.one_hot, y_c_hat, batch.code,
                                   opt.weights);
      grads = loss::generator_loss_grads(alpha_g, y_hat, batch.one_hot, y_c_hat, batch.code,
                                         opt.weights);
    } else {
      row.g = loss::generator_loss(alpha_g, y_hat, batch.one_hot, opt.weights);
      grads = loss::generator_loss_grads(alpha_g, y_hat, batch.one_hot, opt.weights);
    }
    require_finite(row.g.adversarial, step, "S_adv");
    require_finite(row.g.cross_entropy, step, "S_ce");
    require_finite(row.g.mae_y, step, "MAE_y");
    require_finite(row.g.mae_code, step, "MAE_yc");
    require_finite(row.g.total, step, "L_G_total");

    disc.graph.backward(disc.alpha, grads.d_alpha_fake);
    const Tensor adv = slice_last_axis(disc.graph.grad(disc.input), gen_cfg.input_channels,
                                       disc_cfg.input_channels);
    Tensor d_y_hat = grads.d_y_hat;
    for (std::size_t i = 0; i < d_y_hat.size(); ++i) d_y_hat[i] += adv[i];

    gen.graph.zero_grad();
    std::vector<Graph::Seed> seeds{{gen.output, &d_y_hat}};
    if (code_term) seeds.push_back({gen.code, &grads.d_y_c_hat});
    gen.graph.backward(seeds);
    adam_step(gen.graph, gen_state, opt.gen_adam);

    r.history.losses.push_back(row);
    if (progress) progress(row);
  }
  return r;
}

Tensor predict(Generator& gen, const Tensor& images) {
  gen.graph.set_input(gen.image, images);
  gen.graph.forward();
  return gen.graph.value(gen.output);
}

metrics::ConfusionMatrix evaluate(Generator& gen, const std::vector<data::Sample>& samples,
                                  std::size_t num_classes, std::size_t batch_size) {
  metrics::ConfusionMatrix cm(num_classes);
  if (batch_size == 0) batch_size = 1;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    std::vector<const data::Sample*> chunk;
    for (std::size_t i = start; i < std::min(samples.size(), start + batch_size); ++i) {
      chunk.push_back(&samples[i]);
    }
    const Tensor y_hat = predict(gen, data::stack_images(chunk));
    cm += batch_confusion(y_hat, chunk, num_classes);
  }
  return cm;
}

void write_history_csv(std::ostream& os, const TrainHistory& h, Head head,
                       std::uint64_t seed) {
  os << "# hadseg-history head=" << head_name(head) << " seed=" << seed
     << " threads=" << kKernelThreads << "\n";
  os << "step,L_D,S_adv,S_ce,MAE_y,MAE_yc,L_G_total\n";
  os << std::setprecision(17);
  for (const auto& r : h.losses) {
    os << r.step << ',' << r.d_loss << ',' << r.g.adversarial << ',' << r.g.cross_entropy
       << ',' << r.g.mae_y << ',' << r.g.mae_code << ',' << r.g.total << '\n';
  }
}

void write_metrics_csv(std::ostream& os, const TrainHistory& h) {
  os << "step,pixel_accuracy,mean_iou\n";
  os << std::setprecision(17);
  for (const auto& m : h.metrics) {
    os << m.step << ',' << m.pixel_accuracy << ',' << m.mean_iou << '\n';
  }
}

}  // namespace hadseg::netkit
