#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "chronocl/model.hpp"
#include "test_util.hpp"

using namespace chronocl;

namespace {

// Independent straight-line forward pass over the documented layout.
double forward_reference(const ModelState& m, const std::vector<double>& x) {
  const int d = m.arch.input_dim;
  const int h = m.arch.hidden_dim;
  double z = m.params[d * h + 2 * h];
  for (int k = 0; k < h; ++k) {
    double s = m.params[d * h + k];
    for (int j = 0; j < d; ++j) s += m.params[k * d + j] * x[j];
    z += m.params[d * h + h + k] * std::tanh(s);
  }
  return z;
}

ModelArch small_arch(int d = 6, int h = 4) {
  ModelArch arch;
  arch.input_dim = d;
  arch.hidden_dim = h;
  return arch;
}

}  // namespace

TEST_CASE("parameter count matches the layout") {
  CHECK(small_arch(6, 4).param_count() == 6 * 4 + 4 + 4 + 1);
  CHECK(ModelArch{}.param_count() == 32 * 32 + 32 + 32 + 1);
}

TEST_CASE("zero model maps everything to logit 0") {
  const ModelState m = ModelState::zeros(small_arch());
  Rng rng(1);
  const LabeledSample s = sample_real(6, rng);
  CHECK(forward(m, s.features) == 0.0);
  CHECK(sigmoid(forward(m, s.features)) == 0.5);
}

TEST_CASE("output bias passes straight through a silent hidden layer") {
  ModelState m = ModelState::zeros(small_arch());
  m.params.back() = 1.75;  // b2; w2 stays zero
  Rng rng(2);
  const LabeledSample s = sample_real(6, rng);
  CHECK(forward(m, s.features) == 1.75);
}

TEST_CASE("forward matches an independent reimplementation") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    ModelState m = ModelState::random_init(small_arch(8, 5), rng);
    const LabeledSample s = sample_real(8, rng);
    CHECK(forward(m, s.features) ==
          doctest::Approx(forward_reference(m, s.features)).epsilon(1e-12));
  }
}

TEST_CASE("forward rejects dimension mismatch") {
  const ModelState m = ModelState::zeros(small_arch());
  std::vector<double> wrong(5, 0.0);
  CHECK_THROWS_AS((void)forward(m, wrong), std::invalid_argument);
}

TEST_CASE("balanced batch through a zero model costs ln 2") {
  const ModelState m = ModelState::zeros(small_arch());
  Rng rng(4);
  const Batch batch = testutil::random_batch(6, 8, rng);
  const LossGrad lg = loss_and_grad(m, batch);
  CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(lg.loss >= 0.0);
}

TEST_CASE("loss_and_grad rejects an empty batch") {
  const ModelState m = ModelState::zeros(small_arch());
  CHECK_THROWS_AS(loss_and_grad(m, Batch{}), std::invalid_argument);
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    ModelState m = ModelState::random_init(small_arch(5, 3), rng);
    const Batch batch = testutil::random_batch(5, 6, rng);
    const LossGrad lg = loss_and_grad(m, batch);
    const auto fd = testutil::finite_difference_grad(m, batch);
    CHECK(testutil::gradient_rel_error(lg.grad, fd) < 1e-5);
  }
}

TEST_CASE("output-layer gradient has the logistic closed form") {
  Rng rng(6);
  ModelState m = ModelState::random_init(small_arch(4, 3), rng);
  LabeledSample s = sample_real(4, rng);
  s.label = 1;
  const LabeledSample* ptr = &s;
  const LossGrad lg = bce_loss_grad(m, {ptr, 1});
  const double z = forward(m, s.features);
  const double residual = sigmoid(z) - 1.0;
  // Hidden activations feed the output layer exactly like inputs feed a
  // logistic regression.
  const int d = 4, h = 3;
  for (int k = 0; k < h; ++k) {
    double pre = m.params[d * h + k];
    for (int j = 0; j < d; ++j) pre += m.params[k * d + j] * s.features[j];
    CHECK(lg.grad[d * h + h + k] ==
          doctest::Approx(residual * std::tanh(pre)).epsilon(1e-12));
  }
  CHECK(lg.grad[d * h + 2 * h] == doctest::Approx(residual).epsilon(1e-12));
}

TEST_CASE("weighted loss drops zero-weight samples") {
  Rng rng(7);
  ModelState m = ModelState::random_init(small_arch(4, 3), rng);
  const Batch batch = testutil::random_batch(4, 4, rng);
  const std::vector<double> weights{1.0, 0.0, 1.0, 1.0};
  const LossGrad gated = bce_loss_grad_weighted(m, batch.samples, weights);
  Batch reduced;
  reduced.samples = {batch.samples[0], batch.samples[2], batch.samples[3]};
  const LossGrad plain = loss_and_grad(m, reduced);
  CHECK(gated.loss == doctest::Approx(plain.loss).epsilon(1e-15));
  for (std::size_t i = 0; i < plain.grad.size(); ++i)
    CHECK(gated.grad[i] == doctest::Approx(plain.grad[i]).epsilon(1e-12));
}

TEST_CASE("logit MSE gradient matches finite differences") {
  Rng rng(8);
  ModelState m = ModelState::random_init(small_arch(3, 2), rng);
  std::vector<LabeledSample> samples;
  for (int i = 0; i < 4; ++i) samples.push_back(sample_real(3, rng));
  const std::vector<double> targets{0.3, -0.5, 1.2, 0.0};
  const LossGrad lg = logit_mse_grad(m, samples, targets);

  ModelState probe = m;
  const double h = 1e-6;
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    probe.params[i] = m.params[i] + h;
    const double up = logit_mse_grad(probe, samples, targets).loss;
    probe.params[i] = m.params[i] - h;
    const double down = logit_mse_grad(probe, samples, targets).loss;
    probe.params[i] = m.params[i];
    const double fd = (up - down) / (2.0 * h);
    CHECK(std::abs(lg.grad[i] - fd) <=
          1e-5 * std::max({std::abs(fd), std::abs(lg.grad[i]), 1e-4}));
  }
}

TEST_CASE("adamw leaves parameters alone on zero gradient") {
  ModelState m;
  m.params = {1.0, -2.0, 3.0};
  OptimizerState opt = OptimizerState::make(3, 0.1, 0.0);
  const std::vector<double> zero(3, 0.0);
  adamw_step(m, opt, zero);
  CHECK(m.params == std::vector<double>{1.0, -2.0, 3.0});
  CHECK(opt.step_count == 1);
}

TEST_CASE("decoupled weight decay shrinks by (1 - lr*wd)") {
  ModelState m;
  m.params = {2.0, -4.0};
  OptimizerState opt = OptimizerState::make(2, 0.5, 0.01);
  const std::vector<double> zero(2, 0.0);
  adamw_step(m, opt, zero);
  CHECK(m.params[0] == doctest::Approx(2.0 * (1.0 - 0.5 * 0.01)).epsilon(1e-15));
  CHECK(m.params[1] == doctest::Approx(-4.0 * (1.0 - 0.5 * 0.01)).epsilon(1e-15));
}

TEST_CASE("first adamw step matches the hand-evaluated recurrences") {
  ModelState m;
  m.params = {1.0, 2.0};
  OptimizerState opt = OptimizerState::make(2, 0.1, 0.0);
  const std::vector<double> grad{0.5, -1.0};
  adamw_step(m, opt, grad);

  // One step from zero moments: m1 = (1-b1)g, v1 = (1-b2)g^2, bias-corrected
  // back to g and g^2, so the update is -lr * g / (|g| + eps).
  const double expected0 = 1.0 - 0.1 * (0.5 / (0.5 + 1e-8));
  const double expected1 = 2.0 - 0.1 * (-1.0 / (1.0 + 1e-8));
  CHECK(m.params[0] == doctest::Approx(expected0).epsilon(1e-14));
  CHECK(m.params[1] == doctest::Approx(expected1).epsilon(1e-14));
  CHECK(opt.first_moment[0] == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(opt.second_moment[1] == doctest::Approx(0.001).epsilon(1e-14));
}

TEST_CASE("adamw is deterministic and validates its input") {
  Rng rng(9);
  ModelState a = ModelState::random_init(small_arch(), rng);
  ModelState b = a;
  OptimizerState oa = OptimizerState::make(a.arch.param_count(), 0.01);
  OptimizerState ob = oa;
  std::vector<double> grad(a.arch.param_count());
  for (double& g : grad) g = rng.normal();
  adamw_step(a, oa, grad);
  adamw_step(b, ob, grad);
  CHECK(testutil::bitwise_equal(a.params, b.params));
  CHECK(testutil::bitwise_equal(oa.first_moment, ob.first_moment));

  grad.pop_back();
  CHECK_THROWS_AS(adamw_step(a, oa, grad), std::invalid_argument);
  grad.push_back(std::nan(""));
  CHECK_THROWS_AS(adamw_step(a, oa, grad), std::invalid_argument);
}

TEST_CASE("cosine schedule hits its anchor points") {
  CHECK(cosine_lr(0, 0.02, 1000) == 0.02);
  CHECK(cosine_lr(1000, 0.02, 1000) == 0.0);
  CHECK(cosine_lr(500, 0.02, 1000) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK_THROWS_AS(cosine_lr(1001, 0.02, 1000), std::invalid_argument);
  CHECK_THROWS_AS(cosine_lr(-1, 0.02, 1000), std::invalid_argument);
}

TEST_CASE("ema follows the convex recurrence") {
  ModelState m;
  m.params = {1.0};
  EmaState ema{{0.0}, 0.99};
  ema_update(ema, m);
  CHECK(ema.shadow[0] == doctest::Approx(0.01).epsilon(1e-15));

  EmaState frozen{{0.25}, 1.0};
  ema_update(frozen, m);
  CHECK(frozen.shadow[0] == 0.25);

  EmaState copy{{0.25}, 0.0};
  ema_update(copy, m);
  CHECK(copy.shadow[0] == 1.0);

  EmaState wrong{{0.0, 0.0}, 0.5};
  CHECK_THROWS_AS(ema_update(wrong, m), std::invalid_argument);
}

TEST_CASE("ema shadow stays inside the parameter envelope") {
  Rng rng(10);
  ModelState m;
  m.params = {0.0};
  EmaState ema{{0.5}, 0.9};
  double lo = 0.0, hi = 0.5;
  for (int i = 0; i < 200; ++i) {
    m.params[0] = rng.uniform() * 2.0 - 1.0;
    lo = std::min(lo, m.params[0]);
    hi = std::max(hi, m.params[0]);
    ema_update(ema, m);
    CHECK(ema.shadow[0] >= lo);
    CHECK(ema.shadow[0] <= hi);
  }
}
