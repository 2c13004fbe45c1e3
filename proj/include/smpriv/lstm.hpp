#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace smpriv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// One time step of a batch is a (features x batch) matrix; a sequence is T of them.
using Sequence = std::vector<Matrix>;

// Gate blocks are stacked in this order inside every 4H-row weight matrix.
enum class Gate : int { Forget = 0, Input = 1, Candidate = 2, Output = 3 };

enum class HeadActivation { Linear, Softmax, Sigmoid };

std::string_view activation_name(HeadActivation a);
HeadActivation parse_activation(std::string_view name);

struct LstmCellParams {
  Matrix input_weights;      // V: 4H x D_in
  Matrix recurrent_weights;  // K: 4H x H
  Vector bias;               // b: 4H

  static LstmCellParams zeros(int inputs, int hidden);

  int hidden() const { return static_cast<int>(recurrent_weights.cols()); }
  int inputs() const { return static_cast<int>(input_weights.cols()); }

  auto input_block(Gate g) { return input_weights.middleRows(static_cast<int>(g) * hidden(), hidden()); }
  auto recurrent_block(Gate g) {
    return recurrent_weights.middleRows(static_cast<int>(g) * hidden(), hidden());
  }
  auto bias_block(Gate g) { return bias.segment(static_cast<int>(g) * hidden(), hidden()); }
  auto input_block(Gate g) const {
    return input_weights.middleRows(static_cast<int>(g) * hidden(), hidden());
  }
  auto recurrent_block(Gate g) const {
    return recurrent_weights.middleRows(static_cast<int>(g) * hidden(), hidden());
  }
  auto bias_block(Gate g) const { return bias.segment(static_cast<int>(g) * hidden(), hidden()); }
};

// Hidden and cell state for a batch: both H x B.
struct LstmState {
  Matrix h;
  Matrix c;

  static LstmState zeros(int hidden, int batch) {
    return {Matrix::Zero(hidden, batch), Matrix::Zero(hidden, batch)};
  }
};

struct DenseHead {
  Matrix weights;  // D_out x H
  Vector bias;     // D_out
  HeadActivation activation = HeadActivation::Linear;
};

struct LayerStackParams {
  std::vector<LstmCellParams> layers;
  DenseHead head;

  int input_size() const { return layers.front().inputs(); }
  int output_size() const { return static_cast<int>(head.weights.rows()); }

  // Throws ErrorKind::Config on inconsistent shapes or empty stacks.
  void validate() const;
  LayerStackParams zeros_like() const;
};

struct ArchSpec {
  int input_size = 1;
  std::vector<int> hidden_sizes{32, 32};
  int output_size = 1;
  HeadActivation head = HeadActivation::Linear;
};

// Glorot-uniform weights, forget-gate bias 1, all other biases 0.
LayerStackParams init_params(const ArchSpec& arch, std::uint64_t seed);

// Role of a parameter tensor; the optimizer's ridge term only touches Recurrent.
enum class TensorRole { Bias, Input, Recurrent, HeadWeight, HeadBias };

struct TensorView {
  std::string name;
  TensorRole role;
  std::span<double> values;
};

struct ConstTensorView {
  std::string name;
  TensorRole role;
  std::span<const double> values;
};

// Every parameter tensor of the stack, in a fixed order.
std::vector<TensorView> tensor_views(LayerStackParams& p);
std::vector<ConstTensorView> tensor_views(const LayerStackParams& p);

std::size_t parameter_count(const LayerStackParams& p);

// FNV-1a over the raw bytes of every tensor, shapes included.
std::uint64_t fingerprint(const LayerStackParams& p);

// Post-activation gate values for one step, 4H x B in Gate order.
struct StepResult {
  LstmState state;
  Matrix gates;
};

StepResult lstm_step(const LstmCellParams& params, const LstmState& state, const Matrix& input);

struct LayerTape {
  Sequence inputs;      // D_in x B
  Sequence gates;       // 4H x B, post-activation
  Sequence cells;       // H x B
  Sequence tanh_cells;  // H x B
  Sequence hidden;      // H x B
};

struct ForwardTape {
  std::uint64_t params_fingerprint = 0;
  int batch = 0;
  std::vector<LayerTape> layers;
  Sequence head_outputs;  // post-activation, D_out x B

  int steps() const { return static_cast<int>(head_outputs.size()); }
};

struct StackForward {
  Sequence outputs;
  ForwardTape tape;
};

// Runs the stack over the whole sequence from zero initial states.
StackForward stack_forward(const LayerStackParams& stack, const Sequence& inputs);

struct StackGradients {
  LayerStackParams params;
  Sequence inputs;
};

// Exact BPTT. output_grads holds dL/d(output) per step (post-activation).
StackGradients stack_backward(const LayerStackParams& stack, const ForwardTape& tape,
                              const Sequence& output_grads);

}  // namespace smpriv
