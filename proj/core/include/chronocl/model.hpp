#pragma once

#include <span>
#include <string>
#include <vector>

#include "chronocl/rng.hpp"
#include "chronocl/stream.hpp"

namespace chronocl {

/// Single-hidden-layer binary classifier, input_dim -> hidden_dim -> 1.
/// Flat parameter layout: [W1 row-major (hidden x input) | b1 | w2 | b2].
struct ModelArch {
  int input_dim = 32;
  int hidden_dim = 32;
  std::string activation = "tanh";

  int param_count() const {
    return input_dim * hidden_dim + hidden_dim + hidden_dim + 1;
  }
};

struct ModelState {
  ModelArch arch;
  std::vector<double> params;

  static ModelState zeros(const ModelArch& arch);
  /// W1, w2 ~ N(0, 1/fan_in); biases zero.
  static ModelState random_init(const ModelArch& arch, Rng& rng);
};

/// Decoupled-weight-decay Adam with bias correction.
struct OptimizerState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  long step_count = 0;
  double lr = 5e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptimizerState make(int n_params, double lr, double weight_decay = 0.01);
};

struct EmaState {
  std::vector<double> shadow;
  double decay = 0.99;
};

double sigmoid(double logit);
/// Numerically stable binary cross-entropy of a raw logit.
double bce_from_logit(double logit, int label);

/// Raw logit of a single sample; probability = sigmoid(logit).
double forward(const ModelState& model, std::span<const double> features);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
  std::vector<double> logits;  // one per input sample, in order
};

/// Mean binary cross-entropy over the batch plus its gradient.
LossGrad loss_and_grad(const ModelState& model, const Batch& batch);

LossGrad bce_loss_grad(const ModelState& model,
                       std::span<const LabeledSample> samples);

/// Weighted mean over samples with nonzero weight: sum w_i l_i / sum w_i.
/// An empty weight span means all ones. A zero weight drops the sample from
/// both loss and gradient.
LossGrad bce_loss_grad_weighted(const ModelState& model,
                                std::span<const LabeledSample> samples,
                                std::span<const double> weights);

/// Mean squared error between current logits and fixed targets (distillation).
LossGrad logit_mse_grad(const ModelState& model,
                        std::span<const LabeledSample> samples,
                        std::span<const double> target_logits);

std::vector<double> per_sample_losses(const ModelState& model,
                                      std::span<const LabeledSample> samples);

/// Gradient of one sample's own loss; the Fisher estimator squares these.
std::vector<double> per_sample_grad(const ModelState& model,
                                    const LabeledSample& sample);

void adamw_step(ModelState& model, OptimizerState& opt,
                std::span<const double> grad);

/// base_lr * 0.5 * (1 + cos(pi * step / t_max)), 0 <= step <= t_max.
double cosine_lr(long step, double base_lr, long t_max);

/// shadow <- decay * shadow + (1 - decay) * params.
void ema_update(EmaState& ema, const ModelState& model);

}  // namespace chronocl
