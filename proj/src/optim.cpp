#include "smpriv/optim.hpp"

#include <algorithm>
#include <cmath>

#include "smpriv/errors.hpp"

namespace smpriv {

RmspropState RmspropState::for_params(const LayerStackParams& params, const RmspropConfig& config) {
  require(config.learning_rate > 0.0 && config.decay > 0.0 && config.decay < 1.0 && config.epsilon > 0.0,
          ErrorKind::Config, "rmsprop needs learning_rate > 0, decay in (0,1), epsilon > 0");
  return {config, params.zeros_like()};
}

void clip_gradients(LayerStackParams& grads, double clip) {
  require(clip > 0.0, ErrorKind::Config, "clip value must be positive");
  for (auto& t : tensor_views(grads))
    for (double& g : t.values) g = std::clamp(g, -clip, clip);
}

void add_recurrent_l2(LayerStackParams& grads, const LayerStackParams& params, double beta) {
  require(beta >= 0.0, ErrorKind::Config, "recurrent regularization beta must be >= 0");
  require(grads.layers.size() == params.layers.size(), ErrorKind::Usage,
          "add_recurrent_l2: gradient and parameter stacks differ in depth");
  if (beta == 0.0) return;
  for (std::size_t l = 0; l < grads.layers.size(); ++l)
    grads.layers[l].recurrent_weights += 2.0 * beta * params.layers[l].recurrent_weights;
}

void rmsprop_step(LayerStackParams& params, const LayerStackParams& grads, RmspropState& state) {
  auto p = tensor_views(params);
  const auto g = tensor_views(grads);
  auto a = tensor_views(state.accumulators);
  require(p.size() == g.size() && p.size() == a.size(), ErrorKind::Usage,
          "rmsprop_step: state does not match parameters");
  const auto& cfg = state.config;
  for (std::size_t i = 0; i < p.size(); ++i) {
    require(p[i].values.size() == g[i].values.size() && p[i].values.size() == a[i].values.size(),
            ErrorKind::Usage, "rmsprop_step: shape mismatch in " + p[i].name);
    for (std::size_t j = 0; j < p[i].values.size(); ++j) {
      const double gj = g[i].values[j];
      double& acc = a[i].values[j];
      acc = cfg.decay * acc + (1.0 - cfg.decay) * gj * gj;
      const double step = cfg.learning_rate * gj / (std::sqrt(acc) + cfg.epsilon);
      if (!std::isfinite(step)) fail(ErrorKind::Numeric, "rmsprop_step: non-finite update in " + p[i].name);
      p[i].values[j] -= step;
    }
  }
}

}  // namespace smpriv
