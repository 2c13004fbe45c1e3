#pragma once

#include <span>

#include "smpriv/lstm.hpp"

namespace smpriv {

// Batch of real sequences, one row per sequence (B x T).
using SeqBatch = Eigen::MatrixXd;
// Batch of label sequences (B x T).
using LabelBatch = Eigen::MatrixXi;

// Probabilities are floored at this value inside every logarithm.
inline constexpr double kProbFloor = 1e-12;

struct DistortionSpec {
  double order = 2.0;   // p >= 2
  double weight = 0.0;  // lambda >= 0
  int steps = 1;        // T

  void validate() const;
};

double lp_distance(std::span<const double> z, std::span<const double> y, double p);

// E[d(Z, Y)] / T with the expectation replaced by the batch mean.
double normalized_distortion(const SeqBatch& z, const SeqBatch& y, double p);
// d/dZ of normalized_distortion; rows with d = 0 get a zero subgradient.
SeqBatch normalized_distortion_grad(const SeqBatch& z, const SeqBatch& y, double p);

// E[||Y - Z||_p] / E[||Y||_p].
double ne_p(const SeqBatch& z, const SeqBatch& y, double p);

// Mean over batch and steps of -ln probs[label]. probs: T entries of |X| x B.
double attacker_xent(const Sequence& probs, const LabelBatch& labels);
Sequence attacker_xent_grad(const Sequence& probs, const LabelBatch& labels);

// Mean over batch and steps of the Shannon entropy of each output row (nats).
double predictive_entropy_rate(const Sequence& probs);
Sequence predictive_entropy_rate_grad(const Sequence& probs);

// D - lambda * entropy_rate.
double releaser_loss(double distortion, double entropy_rate, double lambda);

}  // namespace smpriv
