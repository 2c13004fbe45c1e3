#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "smpriv/analytics.hpp"
#include "smpriv/data.hpp"
#include "smpriv/trainer.hpp"

namespace smpriv {

struct PeakTolerance {
  double magnitude = 0.2;
  int location = 1;
};

// One operating point of a privacy-utility sweep.
struct TradeoffPoint {
  double lambda = 0;
  double ne2 = 0;
  double ne4 = 0;
  double accuracy = 0;  // test attacker, balanced, test split
  std::array<double, 5> indicator_errors{};
  double peak_preservation = 0;
  std::uint64_t seed = 0;  // training seed of this point
  std::string checkpoint;  // releaser checkpoint file, empty when not saved
};

// Seed of the point trained at `lambda`; depends on the value, not on the grid position.
std::uint64_t point_seed(std::uint64_t master_seed, double lambda);

struct SweepOptions {
  std::vector<double> lambdas;
  PeakTolerance peaks;
  std::optional<std::filesystem::path> checkpoint_dir;  // releaser + test attacker per point
  bool verbose = false;                                 // progress lines on stderr
};

// Checks the grid (nonempty, finite, >= 0, contains 0) and returns it ascending.
std::vector<double> sorted_grid(std::vector<double> lambdas);

// Trains a releaser, trains a fresh test attacker on releases of the training days,
// and scores it on `eval`. Releaser seed = test attacker seed = point_seed(cfg.seed, lambda).
TradeoffPoint run_point(const TrainConfig& base, double lambda, const DataSplit& releaser_data,
                        const DataSplit& attacker_data, const Dataset& eval, const SweepOptions& opts,
                        const std::string& tag = "");

// One point per lambda, ascending.
std::vector<TradeoffPoint> tradeoff_sweep(const TrainConfig& base, const DataSplit& data, const SweepOptions& opts);

enum class MismatchEval { ReleaserHouses, AttackerHouses };
std::string_view mismatch_eval_name(MismatchEval m);
MismatchEval parse_mismatch_eval(std::string_view name);

struct MismatchScenario {
  std::string name;
  std::vector<int> releaser_houses;
  std::vector<int> attacker_houses;
};

// matched (all/all), partial (all/{1,3}), disjoint ({1,2,4,5}/{3}) for houses 1..5.
std::vector<MismatchScenario> default_mismatch_scenarios();

struct MismatchResult {
  MismatchScenario scenario;
  std::vector<TradeoffPoint> points;
};

// The split is by day over all houses; each split is then partitioned by house.
// Evaluation uses the test days of the houses selected by `eval_on`.
std::vector<MismatchResult> mismatch_experiment(const TrainConfig& base, const DataSplit& data,
                                                const std::vector<MismatchScenario>& scenarios,
                                                const SweepOptions& opts,
                                                MismatchEval eval_on = MismatchEval::ReleaserHouses);

// `count` independent releases of the test split, each flattened day after day into one
// error signal z - y.
std::vector<std::vector<double>> release_error_signals(const ReleaseModel& releaser, const Dataset& test, int count,
                                                       std::uint64_t seed);

struct PsdSeries {
  std::string label;
  PsdEstimate psd;
};

// CSV writers; numbers use 9 significant digits.
void write_tradeoff_csv(const std::vector<TradeoffPoint>& points, const std::filesystem::path& path);
void write_mismatch_csv(const std::vector<MismatchResult>& results, const std::filesystem::path& path);
void write_psd_csv(const std::vector<PsdSeries>& series, const std::filesystem::path& path);
void write_indicators_csv(const QualityIndicators& q, const std::filesystem::path& path);

std::string format_number(double v);

}  // namespace smpriv
