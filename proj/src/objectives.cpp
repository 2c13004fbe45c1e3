#include "smpriv/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "smpriv/errors.hpp"

namespace smpriv {

namespace {

void check_pair(const SeqBatch& z, const SeqBatch& y, const char* what) {
  require(z.rows() == y.rows() && z.cols() == y.cols(), ErrorKind::Usage,
          std::string(what) + ": release and reference batches differ in shape");
  require(z.rows() >= 1 && z.cols() >= 1, ErrorKind::Usage, std::string(what) + ": empty batch");
}

void check_order(double p) { require(p >= 1.0 && std::isfinite(p), ErrorKind::Usage, "lp order must be finite and >= 1"); }

double row_norm(const SeqBatch& m, Eigen::Index row, double p) {
  double s = 0.0;
  for (Eigen::Index t = 0; t < m.cols(); ++t) s += std::pow(std::abs(m(row, t)), p);
  return std::pow(s, 1.0 / p);
}

void check_probs(const Sequence& probs, Eigen::Index batch) {
  require(!probs.empty(), ErrorKind::Usage, "probability sequence is empty");
  for (const auto& p : probs)
    require(p.cols() == batch && p.rows() == probs.front().rows(), ErrorKind::Usage,
            "probability sequence has inconsistent shapes");
}

}  // namespace

void DistortionSpec::validate() const {
  require(order >= 2.0, ErrorKind::Config, "distortion order p must be >= 2");
  require(weight >= 0.0, ErrorKind::Config, "trade-off weight lambda must be >= 0");
  require(steps >= 1, ErrorKind::Config, "sequence length T must be >= 1");
}

double lp_distance(std::span<const double> z, std::span<const double> y, double p) {
  require(z.size() == y.size(), ErrorKind::Usage, "lp_distance: sequences differ in length");
  check_order(p);
  double s = 0.0;
  for (std::size_t t = 0; t < z.size(); ++t) s += std::pow(std::abs(z[t] - y[t]), p);
  return std::pow(s, 1.0 / p);
}

double normalized_distortion(const SeqBatch& z, const SeqBatch& y, double p) {
  check_pair(z, y, "normalized_distortion");
  check_order(p);
  const SeqBatch e = z - y;
  double total = 0.0;
  for (Eigen::Index b = 0; b < e.rows(); ++b) total += row_norm(e, b, p);
  return total / static_cast<double>(e.rows()) / static_cast<double>(e.cols());
}

SeqBatch normalized_distortion_grad(const SeqBatch& z, const SeqBatch& y, double p) {
  check_pair(z, y, "normalized_distortion_grad");
  check_order(p);
  const SeqBatch e = z - y;
  SeqBatch g = SeqBatch::Zero(e.rows(), e.cols());
  const double scale = 1.0 / (static_cast<double>(e.rows()) * static_cast<double>(e.cols()));
  for (Eigen::Index b = 0; b < e.rows(); ++b) {
    const double d = row_norm(e, b, p);
    if (d == 0.0) continue;
    const double denom = std::pow(d, p - 1.0);
    for (Eigen::Index t = 0; t < e.cols(); ++t) {
      const double v = e(b, t);
      const double sign = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
      g(b, t) = scale * sign * std::pow(std::abs(v), p - 1.0) / denom;
    }
  }
  return g;
}

double ne_p(const SeqBatch& z, const SeqBatch& y, double p) {
  check_pair(z, y, "ne_p");
  check_order(p);
  const SeqBatch e = y - z;
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index b = 0; b < e.rows(); ++b) {
    num += row_norm(e, b, p);
    den += row_norm(y, b, p);
  }
  require(den > 0.0, ErrorKind::Degenerate, "ne_p: reference batch is identically zero");
  return num / den;
}

double attacker_xent(const Sequence& probs, const LabelBatch& labels) {
  require(static_cast<Eigen::Index>(probs.size()) == labels.cols(), ErrorKind::Usage,
          "attacker_xent: probability and label sequences differ in length");
  check_probs(probs, labels.rows());
  const auto classes = probs.front().rows();
  double total = 0.0;
  for (std::size_t t = 0; t < probs.size(); ++t)
    for (Eigen::Index b = 0; b < labels.rows(); ++b) {
      const int x = labels(b, static_cast<Eigen::Index>(t));
      require(x >= 0 && x < classes, ErrorKind::Usage,
              "attacker_xent: label " + std::to_string(x) + " outside alphabet of size " + std::to_string(classes));
      total -= std::log(std::max(probs[t](x, b), kProbFloor));
    }
  return total / static_cast<double>(labels.size());
}

Sequence attacker_xent_grad(const Sequence& probs, const LabelBatch& labels) {
  require(static_cast<Eigen::Index>(probs.size()) == labels.cols(), ErrorKind::Usage,
          "attacker_xent_grad: probability and label sequences differ in length");
  check_probs(probs, labels.rows());
  const double scale = 1.0 / static_cast<double>(labels.size());
  Sequence g(probs.size());
  for (std::size_t t = 0; t < probs.size(); ++t) {
    g[t] = Matrix::Zero(probs[t].rows(), probs[t].cols());
    for (Eigen::Index b = 0; b < labels.rows(); ++b) {
      const int x = labels(b, static_cast<Eigen::Index>(t));
      require(x >= 0 && x < probs[t].rows(), ErrorKind::Usage, "attacker_xent_grad: label outside alphabet");
      const double q = probs[t](x, b);
      if (q > kProbFloor) g[t](x, b) = -scale / q;
    }
  }
  return g;
}

double predictive_entropy_rate(const Sequence& probs) {
  require(!probs.empty(), ErrorKind::Usage, "predictive_entropy_rate: empty sequence");
  const auto batch = probs.front().cols();
  check_probs(probs, batch);
  double total = 0.0;
  for (const auto& p : probs)
    for (Eigen::Index b = 0; b < batch; ++b)
      for (Eigen::Index x = 0; x < p.rows(); ++x) total -= p(x, b) * std::log(std::max(p(x, b), kProbFloor));
  return total / (static_cast<double>(batch) * static_cast<double>(probs.size()));
}

Sequence predictive_entropy_rate_grad(const Sequence& probs) {
  require(!probs.empty(), ErrorKind::Usage, "predictive_entropy_rate_grad: empty sequence");
  const auto batch = probs.front().cols();
  check_probs(probs, batch);
  const double scale = 1.0 / (static_cast<double>(batch) * static_cast<double>(probs.size()));
  Sequence g(probs.size());
  for (std::size_t t = 0; t < probs.size(); ++t)
    g[t] = probs[t].unaryExpr([scale](double q) {
      return q > kProbFloor ? -scale * (std::log(q) + 1.0) : -scale * std::log(kProbFloor);
    });
  return g;
}

double releaser_loss(double distortion, double entropy_rate, double lambda) {
  require(lambda >= 0.0, ErrorKind::Usage, "releaser_loss: lambda must be >= 0");
  if (lambda == 0.0) return distortion;
  return distortion - lambda * entropy_rate;
}

}  // namespace smpriv
