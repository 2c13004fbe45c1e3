#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "smpriv/analytics.hpp"
#include "smpriv/errors.hpp"
#include "smpriv/rng.hpp"
#include "support.hpp"

using namespace smpriv;

namespace {

LabelBatch row(std::vector<int> v) {
  LabelBatch m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = v[i];
  return m;
}

double variance(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("balanced accuracy examples") {
  const auto labels = row({0, 1, 1, 1, 0, 1, 1, 1});
  CHECK(balanced_accuracy(labels, labels, 2).value == 1.0);
  CHECK(balanced_accuracy(row({1, 1, 1, 1, 1, 1, 1, 1}), labels, 2).value == 0.5);
  CHECK(balanced_accuracy(row({0, 0, 0, 0, 0, 0, 0, 0}), labels, 2).value == 0.5);
  // Swapping two of three classes on a perfect predictor leaves only class 2's recall.
  const auto three = row({0, 1, 2, 2, 1, 0});
  CHECK(balanced_accuracy(row({1, 0, 2, 2, 0, 1}), three, 3).value == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("uniform random predictor over five classes scores about 0.2") {
  Rng rng(1);
  LabelBatch pred(1, 100000), lab(1, 100000);
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    pred(0, i) = static_cast<int>(rng.below(5));
    lab(0, i) = static_cast<int>(rng.below(5));
  }
  CHECK(std::abs(balanced_accuracy(pred, lab, 5).value - 0.2) < 0.01);
}

TEST_CASE("absent classes are excluded and reported") {
  const auto r = balanced_accuracy(row({0, 0, 1}), row({0, 0, 0}), 3);
  CHECK(r.value == doctest::Approx(2.0 / 3.0));
  CHECK(r.absent_classes == std::vector<int>{1, 2});
  CHECK_THROWS_AS(balanced_accuracy(row({0, 1}), row({0}), 2), Error);
}

TEST_CASE("Welch: constant signal puts all power at DC") {
  const std::vector<std::vector<double>> sig{std::vector<double>(96, 2.0)};
  WelchOptions o;
  o.window = Window::Rectangular;
  const auto p = welch_psd(sig, o);
  CHECK(p.density[0] > 0.0);
  for (std::size_t k = 1; k < p.density.size(); ++k) CHECK(p.density[k] < 1e-20);
  CHECK(p.frequencies.size() == 13);
  CHECK(p.frequencies[1] == doctest::Approx(1.0));
}

TEST_CASE("Welch: sinusoid at an exact bin matches the direct periodogram") {
  const int n = 48;
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = 1.3 * std::sin(2.0 * std::numbers::pi * 5.0 * i / n + 0.4);
  WelchOptions o;
  o.segment_length = n;
  o.overlap = 0;
  o.window = Window::Rectangular;
  const auto p = welch_psd(std::vector<std::vector<double>>{x}, o);
  const auto ref = smpriv::testing::direct_periodogram(x, o.sample_rate);
  const auto peak = std::max_element(p.density.begin(), p.density.end()) - p.density.begin();
  CHECK(peak == 5);
  CHECK(std::abs(p.density[5] - ref[5]) / ref[5] < 1e-6);
  for (std::size_t k = 0; k < ref.size(); ++k) CHECK(p.density[k] == doctest::Approx(ref[k]).epsilon(1e-9).scale(1e-12));
}

TEST_CASE("Welch: Parseval for a full-length rectangular segment") {
  Rng rng(2);
  for (int n : {24, 25, 64}) {
    std::vector<double> x(n);
    for (double& v : x) v = rng.normal() + 0.3;
    WelchOptions o;
    o.segment_length = n;
    o.overlap = 0;
    o.window = Window::Rectangular;
    const auto p = welch_psd(std::vector<std::vector<double>>{x}, o);
    const double df = o.sample_rate / n;
    const double total = std::accumulate(p.density.begin(), p.density.end(), 0.0) * df;
    const double ms = std::inner_product(x.begin(), x.end(), x.begin(), 0.0) / n;
    CHECK(std::abs(total - ms) / ms < 1e-9);
  }
}

TEST_CASE("Welch: Hann segments with overlap match a hand-rolled average") {
  Rng rng(3);
  std::vector<double> x(60);
  for (double& v : x) v = rng.normal();
  WelchOptions o;  // L = 24, 50% overlap, Hann
  const auto p = welch_psd(std::vector<std::vector<double>>{x}, o);
  std::vector<double> acc(13, 0.0);
  double wp = 0;
  std::vector<double> w(24);
  for (int i = 0; i < 24; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / 24);
    wp += w[i] * w[i];
  }
  int segs = 0;
  for (int s = 0; s + 24 <= 60; s += 12, ++segs) {
    std::vector<double> seg(24);
    for (int i = 0; i < 24; ++i) seg[i] = x[s + i] * w[i];
    const auto X = smpriv::testing::direct_dft(seg);
    for (int k = 0; k < 13; ++k) acc[k] += (k == 0 || k == 12 ? 1.0 : 2.0) * std::norm(X[k]) / (24.0 * wp);
  }
  CHECK(segs == 4);
  for (int k = 0; k < 13; ++k) CHECK(p.density[k] == doctest::Approx(acc[k] / segs).epsilon(1e-10));
}

TEST_CASE("Welch: averaging ten white-noise signals lowers the spread across bins") {
  Rng rng(4);
  auto noise = [&rng] {
    std::vector<double> v(240);
    for (double& x : v) x = rng.normal();
    return v;
  };
  double one = 0, ten = 0;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::vector<double>> many;
    for (int i = 0; i < 10; ++i) many.push_back(noise());
    auto d1 = welch_psd(std::vector<std::vector<double>>{many[0]}, {}).density;
    auto d10 = welch_psd(many, {}).density;
    // Interior bins only: DC and Nyquist have a different scale.
    one += variance({d1.begin() + 1, d1.end() - 1});
    ten += variance({d10.begin() + 1, d10.end() - 1});
  }
  CHECK(ten < 0.3 * one);
}

TEST_CASE("Welch: argument checks") {
  const std::vector<std::vector<double>> shortsig{std::vector<double>(10, 1.0)};
  CHECK_THROWS_AS(welch_psd(shortsig, {}), Error);
  WelchOptions o;
  o.overlap = 1.0;
  CHECK_THROWS_AS(welch_psd(std::vector<std::vector<double>>{std::vector<double>(48, 1.0)}, o), Error);
  CHECK(parse_window(window_name(Window::Rectangular)) == Window::Rectangular);
  CHECK_THROWS_AS(parse_window("kaiser"), Error);
}

TEST_CASE("quality indicators") {
  Rng rng(5);
  std::vector<double> y(500);
  for (double& v : y) v = 0.5 + std::abs(rng.normal());
  const auto same = quality_indicators(y, y);
  for (double e : same.error_percent) CHECK(e == 0.0);

  std::vector<double> twice(y.size()), shifted(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    twice[i] = 2 * y[i];
    shifted[i] = y[i] + mean;
  }
  const auto q = quality_indicators(y, twice);
  CHECK(q.error_percent[0] == doctest::Approx(100.0).epsilon(1e-12));
  for (int i = 1; i < 5; ++i) CHECK(q.error_percent[i] < 1e-10);
  CHECK(quality_indicators(y, shifted).error_percent[0] == doctest::Approx(100.0).epsilon(1e-12));

  const auto ind = indicators(std::vector<double>{1, 2, 3, 6});
  CHECK(ind[0] == 3.0);
  CHECK(ind[4] == 2.0);
  CHECK(ind[2] == doctest::Approx((16 + 1 + 0 + 81) / 4.0 / (3.5 * 3.5)));
  CHECK_THROWS_AS(indicators(std::vector<double>{0, 0}), Error);
  CHECK_THROWS_AS(indicators(std::vector<double>{2, 2}), Error);
  CHECK_THROWS_AS(indicators(std::vector<double>{-1, 1}), Error);
}

TEST_CASE("peak preservation") {
  SeqBatch y(2, 6);
  y << 0.1, 0.2, 1.0, 0.3, 0.2, 0.1,  //
      0.5, 0.4, 0.3, 0.2, 0.1, 2.0;
  CHECK(peak_preservation(y, y) == 1.0);
  CHECK(peak_preservation(y, SeqBatch::Zero(2, 6)) == 0.0);
  SeqBatch shifted = y;
  shifted(0, 2) = 0.2;
  shifted(0, 3) = 0.9;  // moved one step, 10% lower
  shifted(1, 11 - 6) = 1.0;  // second day's peak halved
  CHECK(peak_preservation(y, shifted) == 0.5);
  CHECK(peak_preservation(y, shifted, 0.2, 0) == 0.0);
  CHECK_THROWS_AS(peak_preservation(y, y, 0.0, 1), Error);
}

TEST_CASE("spearman") {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{10, 20, 30, 40, 50}, c{5, 4, 3, 2, 1};
  CHECK(spearman(a, b) == doctest::Approx(1.0));
  CHECK(spearman(a, c) == doctest::Approx(-1.0));
  const std::vector<double> tied{1, 1, 0, 0, 0, 0};
  const std::vector<double> x{0, 1, 2, 3, 4, 5};
  // Average ranks: (5.5, 5.5, 2.5, 2.5, 2.5, 2.5).
  CHECK(spearman(x, tied) == doctest::Approx(-12.0 / std::sqrt(17.5 * 12.0)));
  CHECK_THROWS_AS(spearman(std::vector<double>{1, 1}, std::vector<double>{1, 2}), Error);
}
