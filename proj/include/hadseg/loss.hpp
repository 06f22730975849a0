#pragma once

#include "hadseg/tensor.hpp"

namespace hadseg::loss {

/// Floor applied to probabilities before taking logs.
inline constexpr double kLogClamp = 1e-12;

/// Weights of the supervised generator terms: cross-entropy, MAE on the
/// probability map, MAE on the pre-layer code output.
struct LossWeights {
  double lambda1 = 1000.0;
  double lambda2 = 100.0;
  double lambda3 = 250.0;

  /// Throws ConfigError unless every weight is finite and non-negative.
  void validate() const;
};

/// PatchGAN output map. Entries are probabilities that the support region
/// is real; saturated 0/1 values are tolerated and clamped in the losses.
struct DiscriminatorOutput {
  Tensor alpha;

  explicit DiscriminatorOutput(Tensor a);
};

/// -(1/N) sum z log max(z_hat, clamp), N = element count.
double cross_entropy(const Tensor& z_hat, const Tensor& z);
Tensor cross_entropy_grad(const Tensor& z_hat, const Tensor& z);

/// (1/N) sum |z_hat - z|.
double mae(const Tensor& z_hat, const Tensor& z);
/// Subgradient sign(z_hat - z) / N, zero at ties.
Tensor mae_grad(const Tensor& z_hat, const Tensor& z);

/// S(1 | alpha) = -(1/N) sum log alpha.
double real_target_loss(const Tensor& alpha);
Tensor real_target_grad(const Tensor& alpha);
/// S(0 | alpha) = -(1/N) sum log(1 - alpha).
double fake_target_loss(const Tensor& alpha);
Tensor fake_target_grad(const Tensor& alpha);

/// S(1 | alpha_real) + S(0 | alpha_fake).
double discriminator_loss(const DiscriminatorOutput& alpha_real,
                          const DiscriminatorOutput& alpha_fake);

struct GeneratorLossTerms {
  double adversarial = 0.0;    // S(1 | alpha_fake)
  double cross_entropy = 0.0;  // S(y_hat | y)
  double mae_y = 0.0;          // MAE(y_hat, y)
  double mae_code = 0.0;       // MAE(y_c_hat, y_c), 0 when disabled
  double total = 0.0;
};

struct GeneratorLossGrads {
  Tensor d_alpha_fake;
  Tensor d_y_hat;
  Tensor d_y_c_hat;  // empty when the code term is disabled
};

/// Four-term generator objective.
GeneratorLossTerms generator_loss(const DiscriminatorOutput& alpha_fake,
                                  const Tensor& y_hat, const Tensor& y,
                                  const Tensor& y_c_hat, const Tensor& y_c,
                                  const LossWeights& w);

/// Same objective with the code term switched off (one-hot head).
GeneratorLossTerms generator_loss(const DiscriminatorOutput& alpha_fake,
                                  const Tensor& y_hat, const Tensor& y,
                                  const LossWeights& w);

GeneratorLossGrads generator_loss_grads(const DiscriminatorOutput& alpha_fake,
                                        const Tensor& y_hat, const Tensor& y,
                                        const Tensor& y_c_hat,
                                        const Tensor& y_c,
                                        const LossWeights& w);

GeneratorLossGrads generator_loss_grads(const DiscriminatorOutput& alpha_fake,
                                        const Tensor& y_hat, const Tensor& y,
                                        const LossWeights& w);

}  // namespace hadseg::loss
