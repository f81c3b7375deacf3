#pragma once

#include <deque>
#include <span>
#include <string>
#include <vector>

#include "chronocl/model.hpp"
#include "chronocl/rng.hpp"
#include "chronocl/stream.hpp"

namespace chronocl {

enum class StrategyKind {
  Naive,
  Replay,
  EWC,
  ReplayEWC,
  CLSER,
  CLSEREWC,
  ESMER,
  DERPP,
};

inline constexpr StrategyKind kAllStrategies[] = {
    StrategyKind::Naive,  StrategyKind::Replay,   StrategyKind::EWC,
    StrategyKind::ReplayEWC, StrategyKind::CLSER, StrategyKind::CLSEREWC,
    StrategyKind::ESMER,  StrategyKind::DERPP,
};

std::string to_string(StrategyKind kind);
StrategyKind strategy_from_string(const std::string& name);

bool uses_buffer(StrategyKind kind);
bool uses_ewc(StrategyKind kind);
bool uses_dual(StrategyKind kind);
/// Kinds that maintain a stable EMA copy and evaluate through it.
bool eval_uses_stable(StrategyKind kind);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::Naive;
  double lr = 5e-3;
  double lambda_reg = 0.0;   // weight of the strategy's regularizer term(s)
  int buffer_capacity = 0;   // in batches; sample capacity = batches * batch_size
  double plastic_decay = 0.99;
  double stable_decay = 0.99;
  double esmer_beta = 1.0;
  double esmer_alpha = 0.9;
  double derpp_alpha = 0.5;  // weight of the logit-distillation term
};

struct BufferSlot {
  std::vector<double> features;
  int label = 0;
  double stored_logit = 0.0;
  long insertion_index = 0;
};

/// Fixed-capacity reservoir over the sample stream.
struct MemoryBuffer {
  int capacity = 0;
  std::vector<BufferSlot> slots;
  long seen_count = 0;
};

/// Reservoir insertion: append while below capacity, otherwise replace slot
/// u ~ Uniform[0, seen_count] when u < capacity.
void buffer_insert(MemoryBuffer& buffer, const LabeledSample& sample,
                   double logit, Rng& rng);

struct ReplayDraw {
  std::vector<LabeledSample> samples;
  std::vector<double> stored_logits;
};

/// n slots uniform with replacement; empty draw when the buffer is empty.
ReplayDraw buffer_sample(const MemoryBuffer& buffer, int n, Rng& rng);

/// Quadratic anchor for EWC: penalty = sum_i fisher_i * (theta_i - anchor_i)^2.
struct FisherAnchor {
  std::vector<double> anchor_params;
  std::vector<double> fisher_diag;
};

struct EwcPenalty {
  double penalty = 0.0;
  std::vector<double> grad;
};

EwcPenalty ewc_penalty(const ModelState& model, const FisherAnchor& anchor);

/// Diagonal empirical Fisher: mean over samples of the squared per-sample
/// loss gradient, anchored at the current parameters.
FisherAnchor estimate_fisher(const ModelState& model,
                             std::span<const Batch> batches);

/// Fast/slow EMA copies of the working model plus the ESMER loss tracker.
/// loss_ema == 0 means "unset": the first batch seeds it and is never gated.
struct DualMemoryState {
  EmaState plastic;
  EmaState stable;
  double loss_ema = 0.0;
};

// ---------------------------------------------------------------------------
// Per-strategy update rules. Each consumes one incoming batch and performs
// exactly one optimizer step; all randomness comes from the provided Rng.
// Returned value is the step's training loss (diagnostics only).

double step_naive(ModelState& model, OptimizerState& opt, const Batch& batch);

/// CE over the incoming batch concatenated with one buffer batch, then the
/// incoming samples are inserted.
double step_replay(ModelState& model, OptimizerState& opt, const Batch& batch,
                   MemoryBuffer& buffer, Rng& rng);

/// CE + lambda * quadratic anchor penalty.
double step_ewc(ModelState& model, OptimizerState& opt, const Batch& batch,
                const FisherAnchor& anchor, double lambda);

/// CE + derpp_alpha * logit-MSE on buffer draw A + lambda_reg * CE on buffer
/// draw B; incoming samples stored with their pre-update logits.
double step_derpp(ModelState& model, OptimizerState& opt, const Batch& batch,
                  MemoryBuffer& buffer, const StrategyConfig& cfg, Rng& rng);

/// CE + lambda_reg * consistency MSE against the stable model's logits on a
/// buffer draw; plastic/stable EMAs updated after the step.
double step_clser(ModelState& model, OptimizerState& opt, const Batch& batch,
                  MemoryBuffer& buffer, DualMemoryState& dual,
                  const StrategyConfig& cfg, Rng& rng);

/// Replay-style step where incoming samples whose loss exceeds
/// esmer_beta * loss_ema are dropped from the gradient and from buffer
/// insertion; loss_ema and the stable EMA are updated every step.
double step_esmer(ModelState& model, OptimizerState& opt, const Batch& batch,
                  MemoryBuffer& buffer, DualMemoryState& dual,
                  const StrategyConfig& cfg, Rng& rng);

double step_replay_ewc(ModelState& model, OptimizerState& opt,
                       const Batch& batch, MemoryBuffer& buffer,
                       const FisherAnchor& anchor, const StrategyConfig& cfg,
                       Rng& rng);

double step_clser_ewc(ModelState& model, OptimizerState& opt,
                      const Batch& batch, MemoryBuffer& buffer,
                      DualMemoryState& dual, const FisherAnchor& anchor,
                      const StrategyConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------

/// Batches kept for Fisher estimation at consolidation points.
inline constexpr int kFisherWindowBatches = 10;

struct StrategyState {
  StrategyConfig cfg;
  int batch_size = 16;
  ModelState model;
  OptimizerState opt;
  MemoryBuffer buffer;
  FisherAnchor anchor;  // zero Fisher until the first consolidation
  DualMemoryState dual;
  std::deque<Batch> recent_batches;  // EWC kinds only
  long steps_taken = 0;
};

StrategyState make_strategy_state(const StrategyConfig& cfg,
                                  const ModelArch& arch, int batch_size,
                                  Rng& init_rng);

/// Dispatches to the configured step rule and maintains the Fisher window.
double strategy_step(StrategyState& state, const Batch& batch, Rng& rng);

/// Re-anchors EWC at the current parameters using the recent-batch window.
/// No-op while the window is empty (keeps the zero-Fisher anchor).
void consolidate_anchor(StrategyState& state);

/// Parameters used for evaluation: the stable EMA for dual-memory kinds,
/// the working model otherwise.
const std::vector<double>& inference_params(const StrategyState& state);

}  // namespace chronocl
