#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "smpriv/objectives.hpp"

namespace smpriv {

// One day of one house: private labels x and consumption y (kW), both length T.
struct DaySequence {
  int house = 0;
  int day = 0;
  std::vector<int> x;
  std::vector<double> y;

  bool operator==(const DaySequence&) const = default;
};

struct Dataset {
  int steps = 24;
  int alphabet_size = 2;
  std::vector<DaySequence> days;

  std::size_t size() const { return days.size(); }
  bool empty() const { return days.empty(); }
  // Sorted distinct house ids.
  std::vector<int> houses() const;
  // Throws Usage if shapes or labels are inconsistent.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

// What the private label x encodes.
enum class LabelMode { Occupancy, House, Acorn };

std::string_view label_mode_name(LabelMode m);
LabelMode parse_label_mode(std::string_view name);

struct Harmonic {
  double amplitude = 0.0;       // kW
  double cycles_per_day = 1.0;
  double phase = 0.0;           // radians
};

struct SyntheticConfig {
  int steps = 24;
  double p_arrive = 0.2;  // P(absent -> present)
  double p_leave = 0.1;   // P(present -> absent)
  double base_load = 0.3;
  double occupancy_boost = 0.8;
  std::vector<Harmonic> harmonics{{0.2, 1.0, 0.0}, {0.1, 2.0, 0.0}};
  double noise_std = 0.1;
  int houses = 5;
  int days_per_house = 300;
  double jitter = 0.1;  // per-house multiplicative spread on base, boost, amplitudes
  LabelMode labels = LabelMode::Occupancy;
  std::uint64_t seed = 7;

  // Throws Config naming the offending field.
  void validate() const;
};

// Houses are numbered 1..houses. The occupancy chain runs continuously across a
// house's days and starts from its stationary distribution.
Dataset generate(const SyntheticConfig& config);

// CSV schema: header `house_id,day_index,step,x,y`, one row per step.
void write_csv(const Dataset& data, const std::filesystem::path& path);
Dataset load_csv(const std::filesystem::path& path);
// `data.csv` -> `data.meta.json`.
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

struct DataSplit {
  Dataset train;
  Dataset validation;
  Dataset test;
};

// 85:15 pool/test by whole days, then 10% of the pool as validation.
DataSplit split(const Dataset& data, std::uint64_t seed);

// One sub-dataset per requested house set.
std::vector<Dataset> partition_by_house(const Dataset& data, const std::vector<std::vector<int>>& house_sets);

Dataset concat(const Dataset& a, const Dataset& b);

// Gathers rows of the dataset into B x T batches.
SeqBatch consumption_batch(const Dataset& data, std::span<const std::size_t> rows);
LabelBatch label_batch(const Dataset& data, std::span<const std::size_t> rows);
SeqBatch consumption_batch(const Dataset& data);
LabelBatch label_batch(const Dataset& data);

}  // namespace smpriv
