#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "smpriv/objectives.hpp"

namespace smpriv {

struct BalancedAccuracy {
  double value = 0;
  std::vector<int> absent_classes;  // excluded from the mean
};

// Mean per-class recall over the classes present in `labels`.
BalancedAccuracy balanced_accuracy(const LabelBatch& predictions, const LabelBatch& labels, int classes);

enum class Window { Rectangular, Hann };
enum class Detrend { None, Mean };

std::string_view window_name(Window w);
Window parse_window(std::string_view name);

struct WelchOptions {
  int segment_length = 24;
  double overlap = 0.5;
  Window window = Window::Hann;
  Detrend detrend = Detrend::None;
  double sample_rate = 24.0;  // samples per day, so bins are in cycles/day
};

struct PsdEstimate {
  std::vector<double> frequencies;  // ascending, cycles/day
  std::vector<double> density;      // one-sided power per (cycle/day)
  int segment_length = 0;
  double overlap = 0;
  Window window = Window::Hann;
};

// Welch estimate per signal (averaged windowed periodograms), then averaged across signals.
PsdEstimate welch_psd(std::span<const std::vector<double>> signals, const WelchOptions& options);

inline constexpr std::array<std::string_view, 5> kIndicatorNames{"mean", "skewness", "kurtosis", "std_to_mean",
                                                                  "max_to_mean"};

struct QualityIndicators {
  std::array<double, 5> reference{};  // mean, skewness, kurtosis, std/mean, max/mean of y
  std::array<double, 5> release{};
  std::array<double, 5> error_percent{};  // |ind(z) - ind(y)| / |ind(y)| * 100
};

// Population moments over the pooled values; kurtosis is m4 / m2^2.
std::array<double, 5> indicators(std::span<const double> values);
QualityIndicators quality_indicators(std::span<const double> y, std::span<const double> z);

// Fraction of days whose release maximum sits within `location_tolerance` steps of the
// true argmax and within `magnitude_tolerance` (relative) of the true maximum.
double peak_preservation(const SeqBatch& y, const SeqBatch& z, double magnitude_tolerance = 0.2,
                         int location_tolerance = 1);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace smpriv
