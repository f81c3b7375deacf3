#include "chronocl/strategies.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace chronocl {

namespace {

void add_scaled(std::vector<double>& dst, const std::vector<double>& src,
                double scale) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

LabeledSample slot_to_sample(const BufferSlot& slot) {
  LabeledSample s;
  s.features = slot.features;
  s.label = slot.label;
  s.origin = kBufferOrigin;
  return s;
}

void insert_batch(MemoryBuffer& buffer, const Batch& batch,
                  const std::vector<double>& logits, Rng& rng) {
  for (std::size_t i = 0; i < batch.samples.size(); ++i)
    buffer_insert(buffer, batch.samples[i], logits[i], rng);
}

ModelState shadow_model(const ModelState& model, const EmaState& ema) {
  ModelState m;
  m.arch = model.arch;
  m.params = ema.shadow;
  return m;
}

}  // namespace

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Naive: return "Naive";
    case StrategyKind::Replay: return "Replay";
    case StrategyKind::EWC: return "EWC";
    case StrategyKind::ReplayEWC: return "ReplayEWC";
    case StrategyKind::CLSER: return "CLSER";
    case StrategyKind::CLSEREWC: return "CLSEREWC";
    case StrategyKind::ESMER: return "ESMER";
    case StrategyKind::DERPP: return "DERPP";
  }
  throw std::logic_error("to_string: bad StrategyKind");
}

StrategyKind strategy_from_string(const std::string& name) {
  for (StrategyKind kind : kAllStrategies)
    if (to_string(kind) == name) return kind;
  throw std::invalid_argument("unknown strategy kind '" + name + "'");
}

bool uses_buffer(StrategyKind kind) {
  return kind != StrategyKind::Naive && kind != StrategyKind::EWC;
}

bool uses_ewc(StrategyKind kind) {
  return kind == StrategyKind::EWC || kind == StrategyKind::ReplayEWC ||
         kind == StrategyKind::CLSEREWC;
}

bool uses_dual(StrategyKind kind) {
  return kind == StrategyKind::CLSER || kind == StrategyKind::CLSEREWC ||
         kind == StrategyKind::ESMER;
}

bool eval_uses_stable(StrategyKind kind) {
  // The EWC variants also keep a stable copy (update decay 0.99) and serve
  // inference from it.
  return uses_dual(kind) || kind == StrategyKind::EWC ||
         kind == StrategyKind::ReplayEWC;
}

void buffer_insert(MemoryBuffer& buffer, const LabeledSample& sample,
                   double logit, Rng& rng) {
  if (buffer.capacity <= 0) {
    buffer.seen_count += 1;
    return;
  }
  if (static_cast<int>(buffer.slots.size()) < buffer.capacity) {
    buffer.slots.push_back(
        BufferSlot{sample.features, sample.label, logit, buffer.seen_count});
  } else {
    const long bound = buffer.seen_count + 1;
    const int u = bound <= static_cast<long>(std::numeric_limits<int>::max())
                      ? rng.uniform_int(static_cast<int>(bound))
                      : static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(bound));
    if (u < buffer.capacity)
      buffer.slots[u] =
          BufferSlot{sample.features, sample.label, logit, buffer.seen_count};
  }
  buffer.seen_count += 1;
}

ReplayDraw buffer_sample(const MemoryBuffer& buffer, int n, Rng& rng) {
  ReplayDraw draw;
  if (buffer.slots.empty() || n <= 0) return draw;
  draw.samples.reserve(n);
  draw.stored_logits.reserve(n);
  const int size = static_cast<int>(buffer.slots.size());
  for (int i = 0; i < n; ++i) {
    const BufferSlot& slot = buffer.slots[rng.uniform_int(size)];
    draw.samples.push_back(slot_to_sample(slot));
    draw.stored_logits.push_back(slot.stored_logit);
  }
  return draw;
}

EwcPenalty ewc_penalty(const ModelState& model, const FisherAnchor& anchor) {
  const std::size_t n = model.params.size();
  if (anchor.anchor_params.size() != n || anchor.fisher_diag.size() != n)
    throw std::invalid_argument("ewc_penalty: anchor length mismatch");
  EwcPenalty out;
  out.grad.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double delta = model.params[i] - anchor.anchor_params[i];
    out.penalty += anchor.fisher_diag[i] * delta * delta;
    out.grad[i] = 2.0 * anchor.fisher_diag[i] * delta;
  }
  return out;
}

FisherAnchor estimate_fisher(const ModelState& model,
                             std::span<const Batch> batches) {
  long total = 0;
  for (const Batch& b : batches) total += static_cast<long>(b.samples.size());
  if (batches.empty() || total == 0)
    throw std::invalid_argument("estimate_fisher: need at least one sample");

  FisherAnchor anchor;
  anchor.anchor_params = model.params;
  anchor.fisher_diag.assign(model.params.size(), 0.0);
  for (const Batch& b : batches) {
    for (const LabeledSample& s : b.samples) {
      const std::vector<double> g = per_sample_grad(model, s);
      for (std::size_t i = 0; i < g.size(); ++i)
        anchor.fisher_diag[i] += g[i] * g[i];
    }
  }
  for (double& f : anchor.fisher_diag) f /= static_cast<double>(total);
  return anchor;
}

double step_naive(ModelState& model, OptimizerState& opt, const Batch& batch) {
  const LossGrad lg = loss_and_grad(model, batch);
  adamw_step(model, opt, lg.grad);
  return lg.loss;
}

double step_replay(ModelState& model, OptimizerState& opt, const Batch& batch,
                   MemoryBuffer& buffer, Rng& rng) {
  const int n = static_cast<int>(batch.samples.size());
  LossGrad lg;
  if (buffer.slots.empty()) {
    lg = loss_and_grad(model, batch);
  } else {
    ReplayDraw draw = buffer_sample(buffer, n, rng);
    std::vector<LabeledSample> combined = batch.samples;
    combined.insert(combined.end(), draw.samples.begin(), draw.samples.end());
    lg = bce_loss_grad(model, combined);
  }
  adamw_step(model, opt, lg.grad);
  insert_batch(buffer, batch, {lg.logits.begin(), lg.logits.begin() + n}, rng);
  return lg.loss;
}

double step_ewc(ModelState& model, OptimizerState& opt, const Batch& batch,
                const FisherAnchor& anchor, double lambda) {
  LossGrad lg = loss_and_grad(model, batch);
  if (lambda != 0.0) {
    const EwcPenalty pen = ewc_penalty(model, anchor);
    add_scaled(lg.grad, pen.grad, lambda);
    lg.loss += lambda * pen.penalty;
  }
  adamw_step(model, opt, lg.grad);
  return lg.loss;
}

double step_derpp(ModelState& model, OptimizerState& opt, const Batch& batch,
                  MemoryBuffer& buffer, const StrategyConfig& cfg, Rng& rng) {
  const int n = static_cast<int>(batch.samples.size());
  LossGrad lg = loss_and_grad(model, batch);
  if (!buffer.slots.empty() && cfg.derpp_alpha != 0.0) {
    const ReplayDraw draw = buffer_sample(buffer, n, rng);
    const LossGrad mse = logit_mse_grad(model, draw.samples, draw.stored_logits);
    add_scaled(lg.grad, mse.grad, cfg.derpp_alpha);
    lg.loss += cfg.derpp_alpha * mse.loss;
  }
  if (!buffer.slots.empty() && cfg.lambda_reg != 0.0) {
    const ReplayDraw draw = buffer_sample(buffer, n, rng);
    const LossGrad ce = bce_loss_grad(model, draw.samples);
    add_scaled(lg.grad, ce.grad, cfg.lambda_reg);
    lg.loss += cfg.lambda_reg * ce.loss;
  }
  adamw_step(model, opt, lg.grad);
  insert_batch(buffer, batch, {lg.logits.begin(), lg.logits.begin() + n}, rng);
  return lg.loss;
}

namespace {

// Shared CLS-ER core so the composite variant can add its anchor term before
// the optimizer step.
double clser_core(ModelState& model, OptimizerState& opt, const Batch& batch,
                  MemoryBuffer& buffer, DualMemoryState& dual,
                  const StrategyConfig& cfg, Rng& rng,
                  const FisherAnchor* anchor, double ewc_lambda) {
  const int n = static_cast<int>(batch.samples.size());
  LossGrad lg = loss_and_grad(model, batch);
  if (!buffer.slots.empty() && cfg.lambda_reg != 0.0) {
    const ReplayDraw draw = buffer_sample(buffer, n, rng);
    const ModelState stable = shadow_model(model, dual.stable);
    std::vector<double> targets(draw.samples.size());
    for (std::size_t i = 0; i < draw.samples.size(); ++i)
      targets[i] = forward(stable, draw.samples[i].features);
    const LossGrad mse = logit_mse_grad(model, draw.samples, targets);
    add_scaled(lg.grad, mse.grad, cfg.lambda_reg);
    lg.loss += cfg.lambda_reg * mse.loss;
  }
  if (anchor != nullptr && ewc_lambda != 0.0) {
    const EwcPenalty pen = ewc_penalty(model, *anchor);
    add_scaled(lg.grad, pen.grad, ewc_lambda);
    lg.loss += ewc_lambda * pen.penalty;
  }
  adamw_step(model, opt, lg.grad);
  ema_update(dual.plastic, model);
  ema_update(dual.stable, model);
  insert_batch(buffer, batch, {lg.logits.begin(), lg.logits.begin() + n}, rng);
  return lg.loss;
}

}  // namespace

double step_clser(ModelState& model, OptimizerState& opt, const Batch& batch,
                  MemoryBuffer& buffer, DualMemoryState& dual,
                  const StrategyConfig& cfg, Rng& rng) {
  return clser_core(model, opt, batch, buffer, dual, cfg, rng, nullptr, 0.0);
}

double step_esmer(ModelState& model, OptimizerState& opt, const Batch& batch,
                  MemoryBuffer& buffer, DualMemoryState& dual,
                  const StrategyConfig& cfg, Rng& rng) {
  const int n = static_cast<int>(batch.samples.size());
  const std::vector<double> losses = per_sample_losses(model, batch.samples);
  double incoming_mean = 0.0;
  for (double l : losses) incoming_mean += l;
  incoming_mean /= static_cast<double>(n);

  const double threshold =
      dual.loss_ema > 0.0 ? cfg.esmer_beta * dual.loss_ema
                          : std::numeric_limits<double>::infinity();

  std::vector<LabeledSample> combined = batch.samples;
  std::vector<double> weights(n);
  for (int i = 0; i < n; ++i) weights[i] = losses[i] > threshold ? 0.0 : 1.0;
  if (!buffer.slots.empty()) {
    ReplayDraw draw = buffer_sample(buffer, n, rng);
    combined.insert(combined.end(), draw.samples.begin(), draw.samples.end());
    weights.insert(weights.end(), draw.samples.size(), 1.0);
  }

  const LossGrad lg = bce_loss_grad_weighted(model, combined, weights);
  double active = 0.0;
  for (double w : weights) active += w;
  if (active > 0.0) adamw_step(model, opt, lg.grad);

  dual.loss_ema = dual.loss_ema > 0.0
                      ? cfg.esmer_alpha * dual.loss_ema +
                            (1.0 - cfg.esmer_alpha) * incoming_mean
                      : incoming_mean;
  ema_update(dual.stable, model);

  // Only low-loss incoming samples enter the buffer.
  for (int i = 0; i < n; ++i)
    if (weights[i] != 0.0)
      buffer_insert(buffer, batch.samples[i], lg.logits[i], rng);
  return lg.loss;
}

double step_replay_ewc(ModelState& model, OptimizerState& opt,
                       const Batch& batch, MemoryBuffer& buffer,
                       const FisherAnchor& anchor, const StrategyConfig& cfg,
                       Rng& rng) {
  const int n = static_cast<int>(batch.samples.size());
  LossGrad lg;
  if (buffer.slots.empty()) {
    lg = loss_and_grad(model, batch);
  } else {
    ReplayDraw draw = buffer_sample(buffer, n, rng);
    std::vector<LabeledSample> combined = batch.samples;
    combined.insert(combined.end(), draw.samples.begin(), draw.samples.end());
    lg = bce_loss_grad(model, combined);
  }
  if (cfg.lambda_reg != 0.0) {
    const EwcPenalty pen = ewc_penalty(model, anchor);
    add_scaled(lg.grad, pen.grad, cfg.lambda_reg);
    lg.loss += cfg.lambda_reg * pen.penalty;
  }
  adamw_step(model, opt, lg.grad);
  insert_batch(buffer, batch, {lg.logits.begin(), lg.logits.begin() + n}, rng);
  return lg.loss;
}

double step_clser_ewc(ModelState& model, OptimizerState& opt,
                      const Batch& batch, MemoryBuffer& buffer,
                      DualMemoryState& dual, const FisherAnchor& anchor,
                      const StrategyConfig& cfg, Rng& rng) {
  return clser_core(model, opt, batch, buffer, dual, cfg, rng, &anchor,
                    cfg.lambda_reg);
}

StrategyState make_strategy_state(const StrategyConfig& cfg,
                                  const ModelArch& arch, int batch_size,
                                  Rng& init_rng) {
  if (cfg.buffer_capacity < 0)
    throw std::invalid_argument("strategy: buffer_capacity must be >= 0");
  if (cfg.lambda_reg < 0.0)
    throw std::invalid_argument("strategy: lambda_reg must be >= 0");
  if (cfg.plastic_decay < 0.0 || cfg.plastic_decay > 1.0 ||
      cfg.stable_decay < 0.0 || cfg.stable_decay > 1.0)
    throw std::invalid_argument("strategy: decays must lie in [0, 1]");

  StrategyState state;
  state.cfg = cfg;
  state.batch_size = batch_size;
  state.model = ModelState::random_init(arch, init_rng);
  state.opt = OptimizerState::make(arch.param_count(), cfg.lr);
  state.buffer.capacity =
      uses_buffer(cfg.kind) ? cfg.buffer_capacity * batch_size : 0;
  state.anchor.anchor_params = state.model.params;
  state.anchor.fisher_diag.assign(state.model.params.size(), 0.0);
  state.dual.plastic = EmaState{state.model.params, cfg.plastic_decay};
  state.dual.stable = EmaState{state.model.params, cfg.stable_decay};
  return state;
}

double strategy_step(StrategyState& state, const Batch& batch, Rng& rng) {
  double loss = 0.0;
  switch (state.cfg.kind) {
    case StrategyKind::Naive:
      loss = step_naive(state.model, state.opt, batch);
      break;
    case StrategyKind::Replay:
      loss = step_replay(state.model, state.opt, batch, state.buffer, rng);
      break;
    case StrategyKind::EWC:
      loss = step_ewc(state.model, state.opt, batch, state.anchor,
                      state.cfg.lambda_reg);
      break;
    case StrategyKind::ReplayEWC:
      loss = step_replay_ewc(state.model, state.opt, batch, state.buffer,
                             state.anchor, state.cfg, rng);
      break;
    case StrategyKind::CLSER:
      loss = step_clser(state.model, state.opt, batch, state.buffer, state.dual,
                        state.cfg, rng);
      break;
    case StrategyKind::CLSEREWC:
      loss = step_clser_ewc(state.model, state.opt, batch, state.buffer,
                            state.dual, state.anchor, state.cfg, rng);
      break;
    case StrategyKind::ESMER:
      loss = step_esmer(state.model, state.opt, batch, state.buffer, state.dual,
                        state.cfg, rng);
      break;
    case StrategyKind::DERPP:
      loss = step_derpp(state.model, state.opt, batch, state.buffer, state.cfg,
                        rng);
      break;
  }
  if (uses_ewc(state.cfg.kind)) {
    state.recent_batches.push_back(batch);
    if (static_cast<int>(state.recent_batches.size()) > kFisherWindowBatches)
      state.recent_batches.pop_front();
  }
  // EWC variants track their stable copy here; dual-memory kinds already
  // updated theirs inside the step.
  if (state.cfg.kind == StrategyKind::EWC ||
      state.cfg.kind == StrategyKind::ReplayEWC)
    ema_update(state.dual.stable, state.model);
  state.steps_taken += 1;
  return loss;
}

void consolidate_anchor(StrategyState& state) {
  if (state.recent_batches.empty()) return;
  const std::vector<Batch> window(state.recent_batches.begin(),
                                  state.recent_batches.end());
  state.anchor = estimate_fisher(state.model, window);
}

const std::vector<double>& inference_params(const StrategyState& state) {
  if (eval_uses_stable(state.cfg.kind)) return state.dual.stable.shadow;
  return state.model.params;
}

}  // namespace chronocl
