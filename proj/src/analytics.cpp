#include "smpriv/analytics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <numeric>

#include "smpriv/errors.hpp"

namespace smpriv {

BalancedAccuracy balanced_accuracy(const LabelBatch& predictions, const LabelBatch& labels, int classes) {
  require(predictions.rows() == labels.rows() && predictions.cols() == labels.cols(), ErrorKind::Usage,
          "balanced_accuracy: predictions and labels differ in shape");
  require(classes >= 1, ErrorKind::Usage, "balanced_accuracy: need at least one class");
  std::vector<long> hits(classes, 0), totals(classes, 0);
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const int y = labels.data()[i];
    require(y >= 0 && y < classes, ErrorKind::Usage, "balanced_accuracy: label outside alphabet");
    ++totals[y];
    if (predictions.data()[i] == y) ++hits[y];
  }
  BalancedAccuracy r;
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < classes; ++c) {
    if (totals[c] == 0) {
      r.absent_classes.push_back(c);
      continue;
    }
    sum += static_cast<double>(hits[c]) / static_cast<double>(totals[c]);
    ++present;
  }
  if (!r.absent_classes.empty())
    std::cerr << "warning: balanced_accuracy: " << r.absent_classes.size()
              << " class(es) absent from labels, excluded from the mean\n";
  require(present > 0, ErrorKind::Degenerate, "balanced_accuracy: no labels");
  r.value = sum / present;
  return r;
}

std::string_view window_name(Window w) { return w == Window::Hann ? "hann" : "rectangular"; }

Window parse_window(std::string_view name) {
  if (name == "hann") return Window::Hann;
  if (name == "rectangular") return Window::Rectangular;
  fail(ErrorKind::Config, "unknown window '" + std::string(name) + "'");
}

PsdEstimate welch_psd(std::span<const std::vector<double>> signals, const WelchOptions& opt) {
  const int L = opt.segment_length;
  require(L >= 1, ErrorKind::Usage, "welch_psd: segment length must be >= 1");
  require(opt.overlap >= 0.0 && opt.overlap < 1.0, ErrorKind::Usage, "welch_psd: overlap must lie in [0, 1)");
  require(opt.sample_rate > 0.0, ErrorKind::Usage, "welch_psd: sample rate must be positive");
  require(!signals.empty(), ErrorKind::Usage, "welch_psd: no signals");
  for (const auto& s : signals)
    require(static_cast<int>(s.size()) >= L, ErrorKind::Usage,
            "welch_psd: segment length " + std::to_string(L) + " exceeds signal length " + std::to_string(s.size()));

  const int step = std::max(1, L - static_cast<int>(std::lround(L * opt.overlap)));
  const int bins = L / 2 + 1;

  std::vector<double> window(L, 1.0);
  if (opt.window == Window::Hann)
    for (int n = 0; n < L; ++n) window[n] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * n / L));
  const double win_power = std::inner_product(window.begin(), window.end(), window.begin(), 0.0);
  const double scale = 1.0 / (opt.sample_rate * win_power);

  std::vector<double> buf(L);
  std::vector<fftw_complex> spec(bins);
  fftw_plan plan = fftw_plan_dft_r2c_1d(L, buf.data(), spec.data(), FFTW_ESTIMATE);

  PsdEstimate out;
  out.segment_length = L;
  out.overlap = opt.overlap;
  out.window = opt.window;
  out.density.assign(bins, 0.0);
  for (int k = 0; k < bins; ++k) out.frequencies.push_back(k * opt.sample_rate / L);

  std::vector<double> per_signal(bins);
  for (const auto& s : signals) {
    std::fill(per_signal.begin(), per_signal.end(), 0.0);
    int segments = 0;
    for (std::size_t start = 0; start + L <= s.size(); start += step) {
      double mean = 0.0;
      if (opt.detrend == Detrend::Mean) mean = std::accumulate(s.begin() + start, s.begin() + start + L, 0.0) / L;
      for (int n = 0; n < L; ++n) buf[n] = (s[start + n] - mean) * window[n];
      fftw_execute(plan);
      for (int k = 0; k < bins; ++k) {
        double p = (spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1]) * scale;
        const bool nyquist = (L % 2 == 0) && k == L / 2;
        if (k != 0 && !nyquist) p *= 2.0;
        per_signal[k] += p;
      }
      ++segments;
    }
    for (int k = 0; k < bins; ++k) out.density[k] += per_signal[k] / segments;
  }
  fftw_destroy_plan(plan);
  for (double& d : out.density) d /= static_cast<double>(signals.size());
  return out;
}

std::array<double, 5> indicators(std::span<const double> v) {
  require(!v.empty(), ErrorKind::Degenerate, "indicators: no values");
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  require(mean != 0.0, ErrorKind::Degenerate, "indicators: zero mean");
  require(m2 > 0.0, ErrorKind::Degenerate, "indicators: zero variance");
  const double sd = std::sqrt(m2);
  const double mx = *std::max_element(v.begin(), v.end());
  return {mean, m3 / (m2 * sd), m4 / (m2 * m2), sd / mean, mx / mean};
}

QualityIndicators quality_indicators(std::span<const double> y, std::span<const double> z) {
  QualityIndicators q;
  q.reference = indicators(y);
  q.release = indicators(z);
  for (int i = 0; i < 5; ++i) {
    const double diff = std::abs(q.release[i] - q.reference[i]);
    if (q.reference[i] != 0.0)
      q.error_percent[i] = 100.0 * diff / std::abs(q.reference[i]);
    else
      q.error_percent[i] = diff == 0.0 ? 0.0 : INFINITY;
  }
  return q;
}

double peak_preservation(const SeqBatch& y, const SeqBatch& z, double magnitude_tolerance, int location_tolerance) {
  require(y.rows() == z.rows() && y.cols() == z.cols(), ErrorKind::Usage,
          "peak_preservation: release and reference differ in shape");
  require(magnitude_tolerance > 0.0 && location_tolerance >= 0, ErrorKind::Usage,
          "peak_preservation: tolerances must be positive");
  if (y.rows() == 0) return 0.0;
  int kept = 0;
  for (Eigen::Index b = 0; b < y.rows(); ++b) {
    Eigen::Index ty = 0, tz = 0;
    const double my = y.row(b).maxCoeff(&ty);
    const double mz = z.row(b).maxCoeff(&tz);
    const bool located = std::abs(static_cast<long>(ty) - static_cast<long>(tz)) <= location_tolerance;
    const bool sized = std::abs(mz - my) <= magnitude_tolerance * std::abs(my);
    if (located && sized) ++kept;
  }
  return static_cast<double>(kept) / static_cast<double>(y.rows());
}

namespace {
std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}
}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && a.size() >= 2, ErrorKind::Usage, "spearman: need two equal-length samples");
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  require(saa > 0 && sbb > 0, ErrorKind::Degenerate, "spearman: constant sample");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace smpriv
