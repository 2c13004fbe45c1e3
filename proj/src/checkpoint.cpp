#include "smpriv/checkpoint.hpp"

#include <fstream>

#include "smpriv/errors.hpp"

namespace smpriv {

namespace {

nlohmann::json row_major(const Matrix& m) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
  return a;
}

Matrix read_matrix(const nlohmann::json& tensors, const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  require(tensors.contains(name), ErrorKind::Parse, "checkpoint: missing tensor " + name);
  const auto& a = tensors.at(name);
  require(a.is_array() && static_cast<Eigen::Index>(a.size()) == rows * cols, ErrorKind::Parse,
          "checkpoint: tensor " + name + " has " + std::to_string(a.size()) + " values, expected " +
              std::to_string(rows * cols));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = a[static_cast<std::size_t>(i * cols + j)].get<double>();
  return m;
}

}  // namespace

nlohmann::json stack_to_json(const LayerStackParams& p) {
  p.validate();
  nlohmann::json j;
  j["format"] = "smpriv-stack";
  j["version"] = kCheckpointVersion;
  j["layers"] = nlohmann::json::array();
  nlohmann::json tensors = nlohmann::json::object();
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& c = p.layers[l];
    j["layers"].push_back({{"inputs", c.inputs()}, {"hidden", c.hidden()}});
    const std::string pre = "layer" + std::to_string(l) + ".";
    tensors[pre + "bias"] = row_major(c.bias);
    tensors[pre + "input_weights"] = row_major(c.input_weights);
    tensors[pre + "recurrent_weights"] = row_major(c.recurrent_weights);
  }
  j["head"] = {{"inputs", p.head.weights.cols()},
               {"outputs", p.head.weights.rows()},
               {"activation", activation_name(p.head.activation)}};
  tensors["head.weights"] = row_major(p.head.weights);
  tensors["head.bias"] = row_major(p.head.bias);
  j["tensors"] = std::move(tensors);
  return j;
}

LayerStackParams stack_from_json(const nlohmann::json& j) {
  try {
    require(j.value("format", "") == "smpriv-stack", ErrorKind::Parse, "checkpoint: not an smpriv-stack document");
    require(j.at("version").get<int>() == kCheckpointVersion, ErrorKind::Parse,
            "checkpoint: unsupported version " + j.at("version").dump());
    const auto& tensors = j.at("tensors");
    LayerStackParams p;
    for (std::size_t l = 0; l < j.at("layers").size(); ++l) {
      const auto& lj = j.at("layers")[l];
      const int in = lj.at("inputs").get<int>(), h = lj.at("hidden").get<int>();
      require(in >= 1 && h >= 1, ErrorKind::Parse, "checkpoint: layer sizes must be >= 1");
      const std::string pre = "layer" + std::to_string(l) + ".";
      LstmCellParams c;
      c.bias = read_matrix(tensors, pre + "bias", 4 * h, 1);
      c.input_weights = read_matrix(tensors, pre + "input_weights", 4 * h, in);
      c.recurrent_weights = read_matrix(tensors, pre + "recurrent_weights", 4 * h, h);
      p.layers.push_back(std::move(c));
    }
    const auto& hj = j.at("head");
    const int hin = hj.at("inputs").get<int>(), hout = hj.at("outputs").get<int>();
    p.head.weights = read_matrix(tensors, "head.weights", hout, hin);
    p.head.bias = read_matrix(tensors, "head.bias", hout, 1);
    p.head.activation = parse_activation(hj.at("activation").get<std::string>());
    try {
      p.validate();
    } catch (const Error& e) {
      fail(ErrorKind::Parse, std::string("checkpoint: ") + e.what());
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("checkpoint: ") + e.what());
  }
}

nlohmann::json release_model_to_json(const ReleaseModel& m) {
  return {{"format", "smpriv-releaser"},  {"version", kCheckpointVersion},   {"y_mean", m.y_mean},
          {"y_std", m.y_std},             {"noise_dim", m.noise_dim},        {"observe_labels", m.observe_labels},
          {"alphabet_size", m.alphabet_size}, {"network", stack_to_json(m.net)}};
}

ReleaseModel release_model_from_json(const nlohmann::json& j) {
  try {
    require(j.value("format", "") == "smpriv-releaser", ErrorKind::Parse,
            "checkpoint: not an smpriv-releaser document");
    ReleaseModel m;
    m.y_mean = j.at("y_mean").get<double>();
    m.y_std = j.at("y_std").get<double>();
    m.noise_dim = j.at("noise_dim").get<int>();
    m.observe_labels = j.at("observe_labels").get<bool>();
    m.alphabet_size = j.at("alphabet_size").get<int>();
    m.net = stack_from_json(j.at("network"));
    require(m.net.input_size() == m.input_size(), ErrorKind::Parse,
            "checkpoint: releaser network input size does not match noise/label layout");
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("checkpoint: ") + e.what());
  }
}

void save_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::Io, "cannot write " + path.string());
  os << j.dump(1) << '\n';
}

nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::Io, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

void save_stack(const LayerStackParams& p, const std::filesystem::path& path) { save_json(stack_to_json(p), path); }
LayerStackParams load_stack(const std::filesystem::path& path) { return stack_from_json(load_json(path)); }
void save_release_model(const ReleaseModel& m, const std::filesystem::path& path) {
  save_json(release_model_to_json(m), path);
}
ReleaseModel load_release_model(const std::filesystem::path& path) {
  return release_model_from_json(load_json(path));
}

}  // namespace smpriv
