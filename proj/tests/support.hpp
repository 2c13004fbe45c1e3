#pragma once

// Shared oracles for the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "smpriv/lstm.hpp"
#include "smpriv/rng.hpp"

namespace smpriv::testing {

inline Sequence random_sequence(Rng& rng, int features, int batch, int steps, double scale = 1.0) {
  Sequence s(steps);
  for (auto& m : s) {
    m.resize(features, batch);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  }
  return s;
}

// sum_t <w_t, out_t>; its output gradient is w itself.
inline double weighted_loss(const LayerStackParams& p, const Sequence& inputs, const Sequence& w) {
  const auto out = stack_forward(p, inputs).outputs;
  double s = 0;
  for (std::size_t t = 0; t < out.size(); ++t) s += out[t].cwiseProduct(w[t]).sum();
  return s;
}

struct FdReport {
  double max_rel = 0;
  std::size_t checked = 0;
  std::string worst;
};

// Relative error with a 1e-6 floor on the denominator, so gradients that are
// zero up to rounding compare in absolute terms.
inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// Central differences over every parameter of the stack against stack_backward.
inline FdReport check_parameter_gradients(const LayerStackParams& stack, const Sequence& inputs, const Sequence& w,
                                          double h = 1e-5) {
  const auto fwd = stack_forward(stack, inputs);
  const auto grads = stack_backward(stack, fwd.tape, w).params;
  LayerStackParams probe = stack;
  auto pv = tensor_views(probe);
  const auto gv = tensor_views(grads);
  FdReport r;
  for (std::size_t k = 0; k < pv.size(); ++k) {
    for (std::size_t i = 0; i < pv[k].values.size(); ++i) {
      const double orig = pv[k].values[i];
      pv[k].values[i] = orig + h;
      const double up = weighted_loss(probe, inputs, w);
      pv[k].values[i] = orig - h;
      const double down = weighted_loss(probe, inputs, w);
      pv[k].values[i] = orig;
      const double e = rel_error(gv[k].values[i], (up - down) / (2 * h));
      ++r.checked;
      if (e > r.max_rel) {
        r.max_rel = e;
        r.worst = pv[k].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return r;
}

// Direct O(N^2) DFT.
inline std::vector<std::complex<double>> direct_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> s = 0;
    for (std::size_t j = 0; j < n; ++j)
      s += x[j] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * j % n) / static_cast<double>(n));
    out[k] = s;
  }
  return out;
}

// One-sided periodogram of a rectangular-window segment, density per unit of fs.
inline std::vector<double> direct_periodogram(const std::vector<double>& x, double fs) {
  const auto X = direct_dft(x);
  const std::size_t n = x.size();
  std::vector<double> p(n / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double twice = (k == 0 || (n % 2 == 0 && k == n / 2)) ? 1.0 : 2.0;
    p[k] = twice * std::norm(X[k]) / (fs * static_cast<double>(n));
  }
  return p;
}

}  // namespace smpriv::testing
