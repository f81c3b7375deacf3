#include "chronocl/model.hpp"

#include <cmath>
#include <stdexcept>

namespace chronocl {

namespace {

void check_arch(const ModelArch& arch) {
  if (arch.input_dim < 1 || arch.hidden_dim < 1)
    throw std::invalid_argument("model: dimensions must be positive");
  if (arch.activation != "tanh")
    throw std::invalid_argument("model: unsupported activation '" +
                                arch.activation + "'");
}

// Pointers into the flat parameter vector.
struct Layout {
  const double* w1;
  const double* b1;
  const double* w2;
  const double* b2;
};

Layout layout(const ModelState& m) {
  const int d = m.arch.input_dim;
  const int h = m.arch.hidden_dim;
  const double* base = m.params.data();
  return Layout{base, base + d * h, base + d * h + h, base + d * h + 2 * h};
}

// Logit plus hidden activations (act must hold hidden_dim doubles).
double forward_hidden(const ModelState& m, const double* x, double* act) {
  const int d = m.arch.input_dim;
  const int h = m.arch.hidden_dim;
  const Layout p = layout(m);
  double z = *p.b2;
  for (int k = 0; k < h; ++k) {
    const double* row = p.w1 + static_cast<std::size_t>(k) * d;
    double s = p.b1[k];
    for (int j = 0; j < d; ++j) s += row[j] * x[j];
    const double a = std::tanh(s);
    act[k] = a;
    z += p.w2[k] * a;
  }
  return z;
}

// Adds dz * dlogit/dparams for one sample into grad.
void accumulate_grad(const ModelState& m, const double* x, const double* act,
                     double dz, double* grad) {
  const int d = m.arch.input_dim;
  const int h = m.arch.hidden_dim;
  const Layout p = layout(m);
  double* g_w1 = grad;
  double* g_b1 = grad + static_cast<std::size_t>(d) * h;
  double* g_w2 = g_b1 + h;
  double* g_b2 = g_w2 + h;
  *g_b2 += dz;
  for (int k = 0; k < h; ++k) {
    const double a = act[k];
    g_w2[k] += dz * a;
    const double dh = dz * p.w2[k] * (1.0 - a * a);
    g_b1[k] += dh;
    double* row = g_w1 + static_cast<std::size_t>(k) * d;
    for (int j = 0; j < d; ++j) row[j] += dh * x[j];
  }
}

void check_features(const ModelState& m, const LabeledSample& s) {
  if (static_cast<int>(s.features.size()) != m.arch.input_dim)
    throw std::invalid_argument("model: feature dimension mismatch");
}

}  // namespace

ModelState ModelState::zeros(const ModelArch& arch) {
  check_arch(arch);
  ModelState m;
  m.arch = arch;
  m.params.assign(arch.param_count(), 0.0);
  return m;
}

ModelState ModelState::random_init(const ModelArch& arch, Rng& rng) {
  ModelState m = zeros(arch);
  const int d = arch.input_dim;
  const int h = arch.hidden_dim;
  const double w1_scale = 1.0 / std::sqrt(static_cast<double>(d));
  const double w2_scale = 1.0 / std::sqrt(static_cast<double>(h));
  for (int i = 0; i < d * h; ++i) m.params[i] = rng.normal() * w1_scale;
  for (int k = 0; k < h; ++k)
    m.params[static_cast<std::size_t>(d) * h + h + k] = rng.normal() * w2_scale;
  return m;
}

OptimizerState OptimizerState::make(int n_params, double lr,
                                    double weight_decay) {
  OptimizerState opt;
  opt.first_moment.assign(n_params, 0.0);
  opt.second_moment.assign(n_params, 0.0);
  opt.lr = lr;
  opt.weight_decay = weight_decay;
  return opt;
}

double sigmoid(double logit) {
  if (logit >= 0.0) return 1.0 / (1.0 + std::exp(-logit));
  const double e = std::exp(logit);
  return e / (1.0 + e);
}

double bce_from_logit(double logit, int label) {
  // softplus(logit) - label * logit, stable for large |logit|.
  const double softplus = logit > 0.0 ? logit + std::log1p(std::exp(-logit))
                                      : std::log1p(std::exp(logit));
  return softplus - label * logit;
}

double forward(const ModelState& model, std::span<const double> features) {
  check_arch(model.arch);
  if (static_cast<int>(features.size()) != model.arch.input_dim)
    throw std::invalid_argument("forward: feature dimension mismatch");
  std::vector<double> act(model.arch.hidden_dim);
  return forward_hidden(model, features.data(), act.data());
}

LossGrad loss_and_grad(const ModelState& model, const Batch& batch) {
  if (batch.samples.empty())
    throw std::invalid_argument("loss_and_grad: empty batch");
  return bce_loss_grad(model, batch.samples);
}

LossGrad bce_loss_grad(const ModelState& model,
                       std::span<const LabeledSample> samples) {
  return bce_loss_grad_weighted(model, samples, {});
}

LossGrad bce_loss_grad_weighted(const ModelState& model,
                                std::span<const LabeledSample> samples,
                                std::span<const double> weights) {
  check_arch(model.arch);
  if (!weights.empty() && weights.size() != samples.size())
    throw std::invalid_argument("bce_loss_grad_weighted: weight count mismatch");

  LossGrad out;
  out.grad.assign(model.params.size(), 0.0);
  out.logits.resize(samples.size());

  double weight_total = 0.0;
  if (weights.empty()) {
    weight_total = static_cast<double>(samples.size());
  } else {
    for (double w : weights) weight_total += w;
  }

  std::vector<double> act(model.arch.hidden_dim);
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const LabeledSample& s = samples[i];
    check_features(model, s);
    const double w = weights.empty() ? 1.0 : weights[i];
    const double z = forward_hidden(model, s.features.data(), act.data());
    out.logits[i] = z;
    if (w == 0.0) continue;
    loss_sum += w * bce_from_logit(z, s.label);
    const double dz = w * (sigmoid(z) - s.label);
    accumulate_grad(model, s.features.data(), act.data(), dz, out.grad.data());
  }
  if (weight_total > 0.0) {
    out.loss = loss_sum / weight_total;
    for (double& g : out.grad) g /= weight_total;
  }
  return out;
}

LossGrad logit_mse_grad(const ModelState& model,
                        std::span<const LabeledSample> samples,
                        std::span<const double> target_logits) {
  check_arch(model.arch);
  if (samples.size() != target_logits.size())
    throw std::invalid_argument("logit_mse_grad: target count mismatch");
  LossGrad out;
  out.grad.assign(model.params.size(), 0.0);
  out.logits.resize(samples.size());
  if (samples.empty()) return out;

  std::vector<double> act(model.arch.hidden_dim);
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const LabeledSample& s = samples[i];
    check_features(model, s);
    const double z = forward_hidden(model, s.features.data(), act.data());
    out.logits[i] = z;
    const double diff = z - target_logits[i];
    loss_sum += diff * diff;
    accumulate_grad(model, s.features.data(), act.data(), 2.0 * diff * inv_n,
                    out.grad.data());
  }
  out.loss = loss_sum * inv_n;
  return out;
}

std::vector<double> per_sample_losses(const ModelState& model,
                                      std::span<const LabeledSample> samples) {
  std::vector<double> losses(samples.size());
  std::vector<double> act(model.arch.hidden_dim);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    check_features(model, samples[i]);
    const double z = forward_hidden(model, samples[i].features.data(), act.data());
    losses[i] = bce_from_logit(z, samples[i].label);
  }
  return losses;
}

std::vector<double> per_sample_grad(const ModelState& model,
                                    const LabeledSample& sample) {
  const LabeledSample* ptr = &sample;
  return bce_loss_grad_weighted(model, {ptr, 1}, {}).grad;
}

void adamw_step(ModelState& model, OptimizerState& opt,
                std::span<const double> grad) {
  const std::size_t n = model.params.size();
  if (grad.size() != n || opt.first_moment.size() != n ||
      opt.second_moment.size() != n)
    throw std::invalid_argument("adamw_step: gradient length mismatch");
  for (double g : grad)
    if (!std::isfinite(g))
      throw std::invalid_argument("adamw_step: non-finite gradient");

  opt.step_count += 1;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step_count));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step_count));
  for (std::size_t i = 0; i < n; ++i) {
    double& p = model.params[i];
    p -= opt.lr * opt.weight_decay * p;
    const double m = opt.first_moment[i] =
        opt.beta1 * opt.first_moment[i] + (1.0 - opt.beta1) * grad[i];
    const double v = opt.second_moment[i] =
        opt.beta2 * opt.second_moment[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    p -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.eps);
  }
}

double cosine_lr(long step, double base_lr, long t_max) {
  if (t_max < 1) throw std::invalid_argument("cosine_lr: t_max must be >= 1");
  if (step < 0 || step > t_max)
    throw std::invalid_argument("cosine_lr: step outside [0, t_max]");
  const double frac = static_cast<double>(step) / static_cast<double>(t_max);
  return base_lr * 0.5 * (1.0 + std::cos(M_PI * frac));
}

void ema_update(EmaState& ema, const ModelState& model) {
  if (ema.shadow.size() != model.params.size())
    throw std::invalid_argument("ema_update: length mismatch");
  if (ema.decay < 0.0 || ema.decay > 1.0)
    throw std::invalid_argument("ema_update: decay outside [0, 1]");
  for (std::size_t i = 0; i < ema.shadow.size(); ++i)
    ema.shadow[i] = ema.decay * ema.shadow[i] + (1.0 - ema.decay) * model.params[i];
}

}  // namespace chronocl
