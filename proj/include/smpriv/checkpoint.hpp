#pragma once

#include <filesystem>

#include <json.hpp>

#include "smpriv/lstm.hpp"
#include "smpriv/trainer.hpp"

namespace smpriv {

// Checkpoint layout, version 1 (JSON):
//   {"format": "smpriv-stack", "version": 1,
//    "layers": [{"inputs": D, "hidden": H}, ...],
//    "head": {"inputs": H, "outputs": O, "activation": "linear"|"softmax"|"sigmoid"},
//    "tensors": {"layer0.bias": [4H], "layer0.input_weights": [4H*D], "layer0.recurrent_weights": [4H*H],
//                ..., "head.weights": [O*H], "head.bias": [O]}}
// Matrices are row-major; gate blocks are stacked forget, input, candidate, output.
// Doubles are written in shortest round-trip form, so load(save(p)) == p bit for bit.
inline constexpr int kCheckpointVersion = 1;

nlohmann::json stack_to_json(const LayerStackParams& p);
LayerStackParams stack_from_json(const nlohmann::json& j);

// {"format": "smpriv-releaser", "version": 1, "y_mean", "y_std", "noise_dim",
//  "observe_labels", "alphabet_size", "network": <stack>}
nlohmann::json release_model_to_json(const ReleaseModel& m);
ReleaseModel release_model_from_json(const nlohmann::json& j);

void save_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json load_json(const std::filesystem::path& path);

void save_stack(const LayerStackParams& p, const std::filesystem::path& path);
LayerStackParams load_stack(const std::filesystem::path& path);
void save_release_model(const ReleaseModel& m, const std::filesystem::path& path);
ReleaseModel load_release_model(const std::filesystem::path& path);

}  // namespace smpriv
