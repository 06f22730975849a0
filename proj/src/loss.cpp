#include "hadseg/loss.hpp"

#include <algorithm>
#include <cmath>

#include "hadseg/error.hpp"

namespace hadseg::loss {

namespace {

double safe_log(double p) { return std::log(std::max(p, kLogClamp)); }

// d/dp log(max(p, clamp)); zero inside the clamped region.
double safe_log_deriv(double p) { return p > kLogClamp ? 1.0 / p : 0.0; }

void require_nonempty(const Tensor& t, const char* what) {
  if (t.empty()) throw ShapeError(std::string(what) + ": empty tensor");
}

}  // namespace

void LossWeights::validate() const {
  for (double v : {lambda1, lambda2, lambda3}) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ConfigError("loss weights must be finite and non-negative");
    }
  }
}

DiscriminatorOutput::DiscriminatorOutput(Tensor a) : alpha(std::move(a)) {
  for (double v : alpha.data()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw NumericError("discriminator output outside [0, 1]: " +
                         std::to_string(v));
    }
  }
}

double cross_entropy(const Tensor& z_hat, const Tensor& z) {
  require_same_shape(z_hat, z, "cross_entropy");
  require_nonempty(z, "cross_entropy");
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] != 0.0) acc += z[i] * safe_log(z_hat[i]);
  }
  return -acc / static_cast<double>(z.size());
}

Tensor cross_entropy_grad(const Tensor& z_hat, const Tensor& z) {
  require_same_shape(z_hat, z, "cross_entropy_grad");
  require_nonempty(z, "cross_entropy_grad");
  Tensor g(z.shape());
  const double inv_n = 1.0 / static_cast<double>(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    g[i] = -z[i] * safe_log_deriv(z_hat[i]) * inv_n;
  }
  return g;
}

double mae(const Tensor& z_hat, const Tensor& z) {
  require_same_shape(z_hat, z, "mae");
  require_nonempty(z, "mae");
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) acc += std::abs(z_hat[i] - z[i]);
  return acc / static_cast<double>(z.size());
}

Tensor mae_grad(const Tensor& z_hat, const Tensor& z) {
  require_same_shape(z_hat, z, "mae_grad");
  require_nonempty(z, "mae_grad");
  Tensor g(z.shape());
  const double inv_n = 1.0 / static_cast<double>(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d = z_hat[i] - z[i];
    g[i] = d > 0.0 ? inv_n : (d < 0.0 ? -inv_n : 0.0);
  }
  return g;
}

double real_target_loss(const Tensor& alpha) {
  require_nonempty(alpha, "real_target_loss");
  double acc = 0.0;
  for (double a : alpha.data()) acc += safe_log(a);
  return -acc / static_cast<double>(alpha.size());
}

Tensor real_target_grad(const Tensor& alpha) {
  require_nonempty(alpha, "real_target_grad");
  Tensor g(alpha.shape());
  const double inv_n = 1.0 / static_cast<double>(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    g[i] = -safe_log_deriv(alpha[i]) * inv_n;
  }
  return g;
}

double fake_target_loss(const Tensor& alpha) {
  require_nonempty(alpha, "fake_target_loss");
  double acc = 0.0;
  for (double a : alpha.data()) acc += safe_log(1.0 - a);
  return -acc / static_cast<double>(alpha.size());
}

Tensor fake_target_grad(const Tensor& alpha) {
  require_nonempty(alpha, "fake_target_grad");
  Tensor g(alpha.shape());
  const double inv_n = 1.0 / static_cast<double>(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    g[i] = safe_log_deriv(1.0 - alpha[i]) * inv_n;
  }
  return g;
}

double discriminator_loss(const DiscriminatorOutput& alpha_real,
                          const DiscriminatorOutput& alpha_fake) {
  return real_target_loss(alpha_real.alpha) + fake_target_loss(alpha_fake.alpha);
}

GeneratorLossTerms generator_loss(const DiscriminatorOutput& alpha_fake,
                                  const Tensor& y_hat, const Tensor& y,
                                  const Tensor& y_c_hat, const Tensor& y_c,
                                  const LossWeights& w) {
  GeneratorLossTerms t = generator_loss(alpha_fake, y_hat, y, w);
  t.mae_code = mae(y_c_hat, y_c);
  t.total += w.lambda3 * t.mae_code;
  return t;
}

GeneratorLossTerms generator_loss(const DiscriminatorOutput& alpha_fake,
                                  const Tensor& y_hat, const Tensor& y,
                                  const LossWeights& w) {
  w.validate();
  GeneratorLossTerms t;
  t.adversarial = real_target_loss(alpha_fake.alpha);
  t.cross_entropy = cross_entropy(y_hat, y);
  t.mae_y = mae(y_hat, y);
  t.total = t.adversarial + w.lambda1 * t.cross_entropy + w.lambda2 * t.mae_y;
  return t;
}

GeneratorLossGrads generator_loss_grads(const DiscriminatorOutput& alpha_fake,
                                        const Tensor& y_hat, const Tensor& y,
                                        const Tensor& y_c_hat,
                                        const Tensor& y_c,
                                        const LossWeights& w) {
  GeneratorLossGrads g = generator_loss_grads(alpha_fake, y_hat, y, w);
  g.d_y_c_hat = mae_grad(y_c_hat, y_c);
  for (double& v : g.d_y_c_hat.data()) v *= w.lambda3;
  return g;
}

GeneratorLossGrads generator_loss_grads(const DiscriminatorOutput& alpha_fake,
                                        const Tensor& y_hat, const Tensor& y,
                                        const LossWeights& w) {
  w.validate();
  GeneratorLossGrads g;
  g.d_alpha_fake = real_target_grad(alpha_fake.alpha);
  g.d_y_hat = cross_entropy_grad(y_hat, y);
  const Tensor m = mae_grad(y_hat, y);
  for (std::size_t i = 0; i < m.size(); ++i) {
    g.d_y_hat[i] = w.lambda1 * g.d_y_hat[i] + w.lambda2 * m[i];
  }
  return g;
}

}  // namespace hadseg::loss
