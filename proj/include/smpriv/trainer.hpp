#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smpriv/data.hpp"
#include "smpriv/lstm.hpp"
#include "smpriv/optim.hpp"
#include "smpriv/rng.hpp"

namespace smpriv {

// How the privacy term of the releaser loss is computed from the attacker.
enum class EntropyTerm {
  Predictive,       // mean Shannon entropy of the attacker's per-step outputs
  AdversarialXent,  // attacker cross-entropy on the true labels
};

enum class CheckpointPolicy { Final, BestValidation };

std::string_view entropy_term_name(EntropyTerm e);
EntropyTerm parse_entropy_term(std::string_view name);
std::string_view checkpoint_policy_name(CheckpointPolicy c);
CheckpointPolicy parse_checkpoint_policy(std::string_view name);

struct TrainConfig {
  int batch_size = 128;      // B
  int attacker_steps = 4;    // k
  int noise_dim = 8;         // m
  double clip = 1.0;         // C
  double beta = 1.5;         // recurrent ridge weight
  double lambda = 0.0;       // privacy/utility trade-off
  double order = 2.0;        // p of the lp distortion
  std::vector<int> releaser_hidden{64, 64, 64, 64};
  std::vector<int> attacker_hidden{32, 32};
  std::vector<int> test_attacker_hidden{32, 32, 32};
  int iterations = 1000;
  std::uint64_t seed = 1;
  RmspropConfig optimizer;
  EntropyTerm entropy_term = EntropyTerm::Predictive;
  bool observe_labels = false;  // append one-hot x to the releaser input
  CheckpointPolicy checkpoint = CheckpointPolicy::Final;
  int validate_every = 50;
  int test_attacker_epochs = 30;

  // Throws Config naming the field; warns on stderr when k = 1.
  void validate() const;
};

// Releaser network plus the train-split standardization of y.
struct ReleaseModel {
  LayerStackParams net;
  double y_mean = 0.0;
  double y_std = 1.0;
  int noise_dim = 0;
  bool observe_labels = false;
  int alphabet_size = 2;

  int input_size() const { return 1 + noise_dim + (observe_labels ? alphabet_size : 0); }
};

// i.i.d. U[0,1]^m per step and sequence: T entries of m x B.
Sequence draw_noise(Rng& rng, int noise_dim, int steps, int batch);

struct ReleaseForward {
  SeqBatch z;       // released power, kW, B x T
  Sequence scaled;  // network output (standardized release), T entries of 1 x B
  StackForward net;
};

// Releaser input at step t is [standardized y_t ; u_t (; onehot x_t)].
ReleaseForward release_forward(const ReleaseModel& model, const SeqBatch& y, const Sequence& noise,
                               const LabelBatch* labels = nullptr);
SeqBatch make_release(const ReleaseModel& model, const SeqBatch& y, const Sequence& noise,
                      const LabelBatch* labels = nullptr);

// Per-step class probabilities of an attacker reading a standardized release.
Sequence attacker_probs(const LayerStackParams& attacker, const Sequence& scaled_release);
// Per-step argmax decisions, B x T.
LabelBatch attacker_decisions(const Sequence& probs);

// Minibatches without replacement; reshuffles at each epoch boundary.
class MinibatchSampler {
 public:
  MinibatchSampler(std::size_t n, std::size_t batch);
  std::vector<std::size_t> next(Rng& rng);

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t pos_;
};

struct IterationRecord {
  int iteration = 0;
  int attacker_updates = 0;
  int releaser_updates = 0;
  double attacker_loss = 0;  // mean over the k attacker steps
  double releaser_loss = 0;
  double distortion = 0;
  double entropy_term = 0;   // 0 when lambda = 0 (attacker not evaluated)
  double wall_seconds = 0;   // excluded from CSV output
};

struct RunHistory {
  std::vector<IterationRecord> records;
  void write_csv(const std::string& path) const;
};

struct AttackerStepStats {
  double loss = 0;
};

struct ReleaserStepStats {
  double loss = 0;
  double distortion = 0;
  double entropy_term = 0;
};

// Everything one training run mutates.
struct TrainState {
  ReleaseModel releaser;
  LayerStackParams attacker;
  RmspropState releaser_opt;
  RmspropState attacker_opt;
};

TrainState init_train_state(const TrainConfig& cfg, const Dataset& train);

// k RMSprop steps on the attacker cross-entropy; the releaser is read only.
AttackerStepStats attacker_round(LayerStackParams& attacker, RmspropState& opt, const ReleaseModel& releaser,
                                 const Dataset& data, MinibatchSampler& sampler, Rng& rng, const TrainConfig& cfg);

// Gradient of the releaser loss w.r.t. the releaser parameters on one minibatch.
struct ReleaserGradient {
  LayerStackParams grads;
  ReleaserStepStats stats;
};
ReleaserGradient releaser_gradient(const ReleaseModel& releaser, const LayerStackParams& attacker,
                                   const SeqBatch& y, const LabelBatch& x, const Sequence& noise,
                                   const TrainConfig& cfg);
double releaser_objective(const ReleaseModel& releaser, const LayerStackParams& attacker, const SeqBatch& y,
                          const LabelBatch& x, const Sequence& noise, const TrainConfig& cfg);

// One RMSprop step on the releaser loss: clip, add ridge, update. Attacker read only.
ReleaserStepStats releaser_round(ReleaseModel& releaser, RmspropState& opt, const LayerStackParams& attacker,
                                 const Dataset& data, MinibatchSampler& sampler, Rng& rng, const TrainConfig& cfg);

struct TrainResult {
  ReleaseModel releaser;
  LayerStackParams attacker;
  RunHistory history;
};

// Alternates attacker and releaser rounds for cfg.iterations iterations.
TrainResult train(const TrainConfig& cfg, const DataSplit& data);

struct TestAttackerResult {
  LayerStackParams attacker;
  double best_validation_accuracy = 0;
  int best_epoch = 0;
};

// Fresh attacker trained on releases of `train` only, selected by validation balanced accuracy.
TestAttackerResult train_test_attacker(const ReleaseModel& releaser, const Dataset& train, const Dataset& validation,
                                       const TrainConfig& cfg);

struct Evaluation {
  double ne2 = 0;
  double ne4 = 0;
  double accuracy = 0;  // balanced, test attacker on the test split
  SeqBatch y;
  SeqBatch z;
  LabelBatch labels;
  LabelBatch decisions;
};

// Releases the test split with noise from `noise_seed` and scores it.
Evaluation evaluate(const ReleaseModel& releaser, const LayerStackParams& test_attacker, const Dataset& test,
                    std::uint64_t noise_seed);

}  // namespace smpriv
