#include "smpriv/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

#include "smpriv/analytics.hpp"
#include "smpriv/errors.hpp"
#include "smpriv/objectives.hpp"

namespace smpriv {

std::string_view entropy_term_name(EntropyTerm e) {
  return e == EntropyTerm::Predictive ? "predictive" : "adversarial_xent";
}

EntropyTerm parse_entropy_term(std::string_view name) {
  if (name == "predictive") return EntropyTerm::Predictive;
  if (name == "adversarial_xent") return EntropyTerm::AdversarialXent;
  fail(ErrorKind::Config, "train.entropy_term: unknown value '" + std::string(name) + "'");
}

std::string_view checkpoint_policy_name(CheckpointPolicy c) {
  return c == CheckpointPolicy::Final ? "final" : "best_validation";
}

CheckpointPolicy parse_checkpoint_policy(std::string_view name) {
  if (name == "final") return CheckpointPolicy::Final;
  if (name == "best_validation") return CheckpointPolicy::BestValidation;
  fail(ErrorKind::Config, "train.checkpoint: unknown value '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  auto check = [](bool ok, const char* field, const char* rule) {
    require(ok, ErrorKind::Config, std::string("train.") + field + ": " + rule);
  };
  check(batch_size >= 1, "batch_size", "must be >= 1");
  check(attacker_steps >= 1, "attacker_steps", "must be >= 1");
  check(noise_dim >= 0, "noise_dim", "must be >= 0");
  check(clip > 0.0, "clip", "must be > 0");
  check(beta >= 0.0, "beta", "must be >= 0");
  check(lambda >= 0.0, "lambda", "must be >= 0");
  check(order >= 2.0, "order", "must be >= 2");
  check(iterations >= 0, "iterations", "must be >= 0");
  check(validate_every >= 1, "validate_every", "must be >= 1");
  check(test_attacker_epochs >= 1, "test_attacker_epochs", "must be >= 1");
  for (const auto* arch : {&releaser_hidden, &attacker_hidden, &test_attacker_hidden}) {
    check(!arch->empty(), "architecture", "needs at least one LSTM layer");
    for (int h : *arch) check(h >= 1, "architecture", "hidden sizes must be >= 1");
  }
  if (attacker_steps == 1)
    std::cerr << "warning: train.attacker_steps = 1; the attacker should take more than one step per round\n";
}

Sequence draw_noise(Rng& rng, int noise_dim, int steps, int batch) {
  Sequence u(steps);
  for (int t = 0; t < steps; ++t) {
    u[t].resize(noise_dim, batch);
    for (int b = 0; b < batch; ++b)
      for (int i = 0; i < noise_dim; ++i) u[t](i, b) = rng.uniform();
  }
  return u;
}

ReleaseForward release_forward(const ReleaseModel& model, const SeqBatch& y, const Sequence& noise,
                               const LabelBatch* labels) {
  const auto batch = y.rows();
  const auto steps = y.cols();
  require(static_cast<Eigen::Index>(noise.size()) == steps, ErrorKind::Usage,
          "make_release: noise has " + std::to_string(noise.size()) + " steps, y has " + std::to_string(steps));
  require(!model.observe_labels || labels != nullptr, ErrorKind::Usage,
          "make_release: model observes labels but none were given");
  Sequence in(steps);
  for (Eigen::Index t = 0; t < steps; ++t) {
    require(noise[t].rows() == model.noise_dim && noise[t].cols() == batch, ErrorKind::Usage,
            "make_release: noise dimension does not match the model");
    Matrix& m = in[t];
    m.setZero(model.input_size(), batch);
    m.row(0) = ((y.col(t).array() - model.y_mean) / model.y_std).matrix().transpose();
    if (model.noise_dim > 0) m.middleRows(1, model.noise_dim) = noise[t];
    if (model.observe_labels)
      for (Eigen::Index b = 0; b < batch; ++b) m(1 + model.noise_dim + (*labels)(b, t), b) = 1.0;
  }
  ReleaseForward r;
  r.net = stack_forward(model.net, in);
  r.scaled = r.net.outputs;
  r.z.resize(batch, steps);
  for (Eigen::Index t = 0; t < steps; ++t)
    r.z.col(t) = (model.y_mean + model.y_std * r.scaled[t].row(0).array()).matrix().transpose();
  return r;
}

SeqBatch make_release(const ReleaseModel& model, const SeqBatch& y, const Sequence& noise, const LabelBatch* labels) {
  return release_forward(model, y, noise, labels).z;
}

Sequence attacker_probs(const LayerStackParams& attacker, const Sequence& scaled_release) {
  return stack_forward(attacker, scaled_release).outputs;
}

LabelBatch attacker_decisions(const Sequence& probs) {
  const auto steps = static_cast<Eigen::Index>(probs.size());
  const auto batch = probs.front().cols();
  LabelBatch d(batch, steps);
  for (Eigen::Index t = 0; t < steps; ++t)
    for (Eigen::Index b = 0; b < batch; ++b) {
      Eigen::Index arg = 0;
      probs[t].col(b).maxCoeff(&arg);
      d(b, t) = static_cast<int>(arg);
    }
  return d;
}

MinibatchSampler::MinibatchSampler(std::size_t n, std::size_t batch) : order_(n), batch_(std::min(batch, n)), pos_(n) {
  require(n > 0, ErrorKind::Usage, "minibatch sampler over an empty dataset");
  std::iota(order_.begin(), order_.end(), 0);
}

std::vector<std::size_t> MinibatchSampler::next(Rng& rng) {
  if (pos_ + batch_ > order_.size()) {
    rng.shuffle(order_);
    pos_ = 0;
  }
  std::vector<std::size_t> rows(order_.begin() + pos_, order_.begin() + pos_ + batch_);
  pos_ += batch_;
  return rows;
}

void RunHistory::write_csv(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::Io, "cannot write " + path);
  os << "iteration,attacker_loss,releaser_loss,distortion,entropy_term\n";
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g\n", r.iteration, r.attacker_loss, r.releaser_loss,
                  r.distortion, r.entropy_term);
    os << buf;
  }
}

namespace {

Sequence to_sequence(const SeqBatch& m) {
  Sequence s(m.cols());
  for (Eigen::Index t = 0; t < m.cols(); ++t) s[t] = m.col(t).transpose();
  return s;
}

LayerStackParams new_attacker(const std::vector<int>& hidden, int classes, std::uint64_t seed) {
  return init_params({1, hidden, classes, HeadActivation::Softmax}, seed);
}

void attacker_update(LayerStackParams& attacker, RmspropState& opt, const Sequence& scaled, const LabelBatch& x,
                     double clip, double* loss) {
  const auto fwd = stack_forward(attacker, scaled);
  *loss = attacker_xent(fwd.outputs, x);
  auto g = stack_backward(attacker, fwd.tape, attacker_xent_grad(fwd.outputs, x));
  clip_gradients(g.params, clip);
  rmsprop_step(attacker, g.params, opt);
}

struct Batch {
  SeqBatch y;
  LabelBatch x;
  Sequence noise;
};

Batch sample_batch(const Dataset& data, MinibatchSampler& sampler, Rng& rng, int noise_dim) {
  const auto rows = sampler.next(rng);
  Batch b{consumption_batch(data, rows), label_batch(data, rows), {}};
  b.noise = draw_noise(rng, noise_dim, data.steps, static_cast<int>(rows.size()));
  return b;
}

}  // namespace

TrainState init_train_state(const TrainConfig& cfg, const Dataset& train) {
  cfg.validate();
  require(!train.empty(), ErrorKind::Usage, "train: empty training split");
  TrainState s;
  const SeqBatch y = consumption_batch(train);
  s.releaser.y_mean = y.mean();
  const double var = (y.array() - s.releaser.y_mean).square().mean();
  s.releaser.y_std = var > 0.0 ? std::sqrt(var) : 1.0;
  s.releaser.noise_dim = cfg.noise_dim;
  s.releaser.observe_labels = cfg.observe_labels;
  s.releaser.alphabet_size = train.alphabet_size;
  s.releaser.net =
      init_params({s.releaser.input_size(), cfg.releaser_hidden, 1, HeadActivation::Linear}, mix_seed(cfg.seed, 1));
  s.attacker = new_attacker(cfg.attacker_hidden, train.alphabet_size, mix_seed(cfg.seed, 2));
  s.releaser_opt = RmspropState::for_params(s.releaser.net, cfg.optimizer);
  s.attacker_opt = RmspropState::for_params(s.attacker, cfg.optimizer);
  return s;
}

AttackerStepStats attacker_round(LayerStackParams& attacker, RmspropState& opt, const ReleaseModel& releaser,
                                 const Dataset& data, MinibatchSampler& sampler, Rng& rng, const TrainConfig& cfg) {
  require(cfg.attacker_steps >= 1, ErrorKind::Config, "train.attacker_steps: must be >= 1");
  AttackerStepStats stats;
  for (int k = 0; k < cfg.attacker_steps; ++k) {
    auto b = sample_batch(data, sampler, rng, releaser.noise_dim);
    const auto rel = release_forward(releaser, b.y, b.noise, releaser.observe_labels ? &b.x : nullptr);
    double loss = 0.0;
    attacker_update(attacker, opt, rel.scaled, b.x, cfg.clip, &loss);
    stats.loss += loss / cfg.attacker_steps;
  }
  return stats;
}

ReleaserGradient releaser_gradient(const ReleaseModel& releaser, const LayerStackParams& attacker, const SeqBatch& y,
                                   const LabelBatch& x, const Sequence& noise, const TrainConfig& cfg) {
  const auto rel = release_forward(releaser, y, noise, releaser.observe_labels ? &x : nullptr);
  ReleaserGradient out;
  auto& st = out.stats;
  st.distortion = normalized_distortion(rel.z, y, cfg.order);

  // dL/d(scaled output) = y_std * dD/dz
  Sequence out_grad = to_sequence(normalized_distortion_grad(rel.z, y, cfg.order) * releaser.y_std);

  if (cfg.lambda > 0.0) {
    const auto att = stack_forward(attacker, rel.scaled);
    Sequence dprobs;
    if (cfg.entropy_term == EntropyTerm::Predictive) {
      st.entropy_term = predictive_entropy_rate(att.outputs);
      dprobs = predictive_entropy_rate_grad(att.outputs);
    } else {
      st.entropy_term = attacker_xent(att.outputs, x);
      dprobs = attacker_xent_grad(att.outputs, x);
    }
    for (auto& g : dprobs) g *= -cfg.lambda;
    const auto back = stack_backward(attacker, att.tape, dprobs);
    for (std::size_t t = 0; t < out_grad.size(); ++t) out_grad[t] += back.inputs[t];
  }
  st.loss = releaser_loss(st.distortion, st.entropy_term, cfg.lambda);
  out.grads = stack_backward(releaser.net, rel.net.tape, out_grad).params;
  return out;
}

double releaser_objective(const ReleaseModel& releaser, const LayerStackParams& attacker, const SeqBatch& y,
                          const LabelBatch& x, const Sequence& noise, const TrainConfig& cfg) {
  const auto rel = release_forward(releaser, y, noise, releaser.observe_labels ? &x : nullptr);
  const double d = normalized_distortion(rel.z, y, cfg.order);
  if (cfg.lambda == 0.0) return d;
  const auto probs = attacker_probs(attacker, rel.scaled);
  const double h =
      cfg.entropy_term == EntropyTerm::Predictive ? predictive_entropy_rate(probs) : attacker_xent(probs, x);
  return releaser_loss(d, h, cfg.lambda);
}

ReleaserStepStats releaser_round(ReleaseModel& releaser, RmspropState& opt, const LayerStackParams& attacker,
                                 const Dataset& data, MinibatchSampler& sampler, Rng& rng, const TrainConfig& cfg) {
  auto b = sample_batch(data, sampler, rng, releaser.noise_dim);
  auto g = releaser_gradient(releaser, attacker, b.y, b.x, b.noise, cfg);
  clip_gradients(g.grads, cfg.clip);
  add_recurrent_l2(g.grads, releaser.net, cfg.beta);
  rmsprop_step(releaser.net, g.grads, opt);
  return g.stats;
}

TrainResult train(const TrainConfig& cfg, const DataSplit& data) {
  auto state = init_train_state(cfg, data.train);
  Rng rng(mix_seed(cfg.seed, 3));
  MinibatchSampler sampler(data.train.size(), static_cast<std::size_t>(cfg.batch_size));

  // Fixed validation noise so validation losses are comparable across iterations.
  const bool use_validation = cfg.checkpoint == CheckpointPolicy::BestValidation && !data.validation.empty();
  SeqBatch val_y;
  LabelBatch val_x;
  Sequence val_noise;
  if (use_validation) {
    Rng vrng(mix_seed(cfg.seed, 4));
    val_y = consumption_batch(data.validation);
    val_x = label_batch(data.validation);
    val_noise = draw_noise(vrng, cfg.noise_dim, data.validation.steps, static_cast<int>(data.validation.size()));
  }
  double best_val = INFINITY;
  ReleaseModel best = state.releaser;
  LayerStackParams best_attacker = state.attacker;

  TrainResult result;
  const auto t0 = std::chrono::steady_clock::now();
  for (int it = 1; it <= cfg.iterations; ++it) {
    IterationRecord rec;
    rec.iteration = it;
    const auto a = attacker_round(state.attacker, state.attacker_opt, state.releaser, data.train, sampler, rng, cfg);
    rec.attacker_updates = cfg.attacker_steps;
    const auto r = releaser_round(state.releaser, state.releaser_opt, state.attacker, data.train, sampler, rng, cfg);
    rec.releaser_updates = 1;
    rec.attacker_loss = a.loss;
    rec.releaser_loss = r.loss;
    rec.distortion = r.distortion;
    rec.entropy_term = r.entropy_term;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!std::isfinite(rec.attacker_loss) || !std::isfinite(rec.releaser_loss))
      fail(ErrorKind::Numeric, "train: non-finite loss at iteration " + std::to_string(it));
    result.history.records.push_back(rec);

    if (use_validation && (it % cfg.validate_every == 0 || it == cfg.iterations)) {
      const double v = releaser_objective(state.releaser, state.attacker, val_y, val_x, val_noise, cfg);
      if (v < best_val) {
        best_val = v;
        best = state.releaser;
        best_attacker = state.attacker;
      }
    }
  }
  if (use_validation && cfg.iterations > 0) {
    result.releaser = std::move(best);
    result.attacker = std::move(best_attacker);
  } else {
    result.releaser = std::move(state.releaser);
    result.attacker = std::move(state.attacker);
  }
  return result;
}

TestAttackerResult train_test_attacker(const ReleaseModel& releaser, const Dataset& train, const Dataset& validation,
                                       const TrainConfig& cfg) {
  cfg.validate();
  require(!train.empty() && !validation.empty(), ErrorKind::Usage,
          "train_test_attacker: needs nonempty train and validation splits");
  TestAttackerResult res;
  LayerStackParams attacker = new_attacker(cfg.test_attacker_hidden, train.alphabet_size, mix_seed(cfg.seed, 5));
  RmspropState opt = RmspropState::for_params(attacker, cfg.optimizer);
  Rng rng(mix_seed(cfg.seed, 6));

  Rng vrng(mix_seed(cfg.seed, 7));
  const SeqBatch val_y = consumption_batch(validation);
  const LabelBatch val_x = label_batch(validation);
  const auto val_rel = release_forward(releaser, val_y,
                                       draw_noise(vrng, releaser.noise_dim, validation.steps,
                                                  static_cast<int>(validation.size())),
                                       releaser.observe_labels ? &val_x : nullptr);

  res.attacker = attacker;
  res.best_validation_accuracy = -1.0;
  MinibatchSampler sampler(train.size(), static_cast<std::size_t>(cfg.batch_size));
  const std::size_t per_epoch = std::max<std::size_t>(1, train.size() / std::min<std::size_t>(cfg.batch_size, train.size()));
  for (int epoch = 1; epoch <= cfg.test_attacker_epochs; ++epoch) {
    for (std::size_t s = 0; s < per_epoch; ++s) {
      auto b = sample_batch(train, sampler, rng, releaser.noise_dim);
      const auto rel = release_forward(releaser, b.y, b.noise, releaser.observe_labels ? &b.x : nullptr);
      double loss = 0.0;
      attacker_update(attacker, opt, rel.scaled, b.x, cfg.clip, &loss);
    }
    const auto probs = attacker_probs(attacker, val_rel.scaled);
    const double acc = balanced_accuracy(attacker_decisions(probs), val_x, train.alphabet_size).value;
    if (acc > res.best_validation_accuracy) {
      res.best_validation_accuracy = acc;
      res.best_epoch = epoch;
      res.attacker = attacker;
    }
  }
  return res;
}

Evaluation evaluate(const ReleaseModel& releaser, const LayerStackParams& test_attacker, const Dataset& test,
                    std::uint64_t noise_seed) {
  require(!test.empty(), ErrorKind::Usage, "evaluate: empty test split");
  Rng rng(noise_seed);
  Evaluation e;
  e.y = consumption_batch(test);
  e.labels = label_batch(test);
  const auto rel = release_forward(releaser, e.y,
                                   draw_noise(rng, releaser.noise_dim, test.steps, static_cast<int>(test.size())),
                                   releaser.observe_labels ? &e.labels : nullptr);
  e.z = rel.z;
  e.ne2 = ne_p(e.z, e.y, 2.0);
  e.ne4 = ne_p(e.z, e.y, 4.0);
  e.decisions = attacker_decisions(attacker_probs(test_attacker, rel.scaled));
  e.accuracy = balanced_accuracy(e.decisions, e.labels, test.alphabet_size).value;
  return e;
}

}  // namespace smpriv
