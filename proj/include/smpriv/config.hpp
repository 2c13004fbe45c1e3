#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "smpriv/analytics.hpp"
#include "smpriv/data.hpp"
#include "smpriv/experiments.hpp"
#include "smpriv/trainer.hpp"

namespace smpriv {

// Where the dataset comes from: the synthetic generator, or a CSV (with its sidecar).
struct DataSection {
  std::optional<std::filesystem::path> csv;
  SyntheticConfig synthetic;
  std::uint64_t split_seed = 11;
};

struct EvalSection {
  WelchOptions welch;
  int psd_signals = 10;
  PeakTolerance peaks;
  bool indicators = true;
};

struct MismatchSection {
  std::vector<MismatchScenario> scenarios = default_mismatch_scenarios();
  MismatchEval evaluate_on = MismatchEval::ReleaserHouses;
};

// Whole run configuration. Sections: data, model, train, eval, mismatch.
// Unknown keys are rejected; missing keys keep their defaults.
struct RunConfig {
  DataSection data;
  TrainConfig train;  // model section maps onto the *_hidden fields
  std::vector<double> lambda_grid{0.0, 0.05, 0.1, 0.15, 0.25, 0.5};
  EvalSection eval;
  MismatchSection mismatch;

  void validate() const;
};

RunConfig run_config_from_json(const nlohmann::json& j);
// Every field, defaults included.
nlohmann::json run_config_to_json(const RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);

// Loads or generates the dataset named by the data section.
Dataset load_dataset(const DataSection& d);

std::vector<double> parse_lambda_list(const std::string& text);

}  // namespace smpriv
