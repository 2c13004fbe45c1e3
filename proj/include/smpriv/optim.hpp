#pragma once

#include "smpriv/lstm.hpp"

namespace smpriv {

struct RmspropConfig {
  double learning_rate = 1e-3;
  double decay = 0.9;     // rho
  double epsilon = 1e-8;  // added to sqrt(accumulator)
};

// Per-parameter running mean of squared gradients, shaped like the model.
struct RmspropState {
  RmspropConfig config;
  LayerStackParams accumulators;

  static RmspropState for_params(const LayerStackParams& params, const RmspropConfig& config);
};

// Clamps every component into [-clip, clip].
void clip_gradients(LayerStackParams& grads, double clip);

// grads.K += 2 * beta * params.K for every recurrent matrix K; nothing else changes.
void add_recurrent_l2(LayerStackParams& grads, const LayerStackParams& params, double beta);

// a <- rho a + (1 - rho) g^2; theta <- theta - lr g / (sqrt(a) + eps).
void rmsprop_step(LayerStackParams& params, const LayerStackParams& grads, RmspropState& state);

}  // namespace smpriv
