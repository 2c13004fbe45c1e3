#include "smpriv/lstm.hpp"

#include <cmath>
#include <cstring>

#include "smpriv/errors.hpp"
#include "smpriv/rng.hpp"

namespace smpriv {

std::string_view activation_name(HeadActivation a) {
  switch (a) {
    case HeadActivation::Linear: return "linear";
    case HeadActivation::Softmax: return "softmax";
    case HeadActivation::Sigmoid: return "sigmoid";
  }
  return "linear";
}

HeadActivation parse_activation(std::string_view name) {
  if (name == "linear") return HeadActivation::Linear;
  if (name == "softmax") return HeadActivation::Softmax;
  if (name == "sigmoid") return HeadActivation::Sigmoid;
  fail(ErrorKind::Config, "unknown head activation '" + std::string(name) + "'");
}

namespace {

void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) fail(ErrorKind::Numeric, "non-finite values in " + what);
}

// Vectorized through Eigen's packet exp; exp overflow saturates to the right limit.
template <class Block>
void sigmoid_inplace(Block&& x) {
  x = (1.0 + (-x.array()).exp()).inverse().matrix();
}

template <class Block>
void tanh_inplace(Block&& x) {
  x = (1.0 - 2.0 / ((2.0 * x.array()).exp() + 1.0)).matrix();
}

// Writes activated gates into `gates` (4H x B) given pre-activations.
void activate_gates(Matrix& gates, int hidden) {
  sigmoid_inplace(gates.topRows(2 * hidden));
  tanh_inplace(gates.middleRows(2 * hidden, hidden));
  sigmoid_inplace(gates.bottomRows(hidden));
}

void apply_head(const DenseHead& head, const Matrix& hidden, Matrix& out) {
  out.noalias() = head.weights * hidden;
  out.colwise() += head.bias;
  switch (head.activation) {
    case HeadActivation::Linear: break;
    case HeadActivation::Sigmoid: sigmoid_inplace(out); break;
    case HeadActivation::Softmax:
      for (Eigen::Index b = 0; b < out.cols(); ++b) {
        auto col = out.col(b);
        const double mx = col.maxCoeff();
        col = (col.array() - mx).exp();
        col /= col.sum();
      }
      break;
  }
}

void check_cell_shapes(const LstmCellParams& p, const std::string& where) {
  const auto h = p.recurrent_weights.cols();
  require(h >= 1 && p.input_weights.cols() >= 1, ErrorKind::Config, where + ": empty cell");
  require(p.recurrent_weights.rows() == 4 * h && p.input_weights.rows() == 4 * h &&
              p.bias.size() == 4 * h,
          ErrorKind::Config, where + ": gate blocks must have 4H rows");
}

template <class Bytes>
void fnv_mix(std::uint64_t& h, const Bytes* data, std::size_t n) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n * sizeof(Bytes); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

LstmCellParams LstmCellParams::zeros(int inputs, int hidden) {
  return {Matrix::Zero(4 * hidden, inputs), Matrix::Zero(4 * hidden, hidden), Vector::Zero(4 * hidden)};
}

void LayerStackParams::validate() const {
  require(!layers.empty(), ErrorKind::Config, "layer stack has no LSTM layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string where = "layer " + std::to_string(l);
    check_cell_shapes(layers[l], where);
    if (l + 1 < layers.size())
      require(layers[l + 1].inputs() == layers[l].hidden(), ErrorKind::Config,
              where + ": hidden size does not match the next layer's input size");
  }
  require(head.weights.cols() == layers.back().hidden(), ErrorKind::Config,
          "head input size does not match the last layer's hidden size");
  require(head.weights.rows() >= 1 && head.bias.size() == head.weights.rows(), ErrorKind::Config,
          "head bias size does not match head output size");
}

LayerStackParams LayerStackParams::zeros_like() const {
  LayerStackParams z;
  z.layers.reserve(layers.size());
  for (const auto& l : layers) z.layers.push_back(LstmCellParams::zeros(l.inputs(), l.hidden()));
  z.head.weights = Matrix::Zero(head.weights.rows(), head.weights.cols());
  z.head.bias = Vector::Zero(head.bias.size());
  z.head.activation = head.activation;
  return z;
}

LayerStackParams init_params(const ArchSpec& arch, std::uint64_t seed) {
  require(arch.input_size >= 1 && arch.output_size >= 1 && !arch.hidden_sizes.empty(),
          ErrorKind::Config, "architecture needs input/output sizes >= 1 and at least one layer");
  Rng rng(seed);
  auto fill = [&rng](auto&& block, int fan_in, int fan_out) {
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    for (Eigen::Index j = 0; j < block.cols(); ++j)
      for (Eigen::Index i = 0; i < block.rows(); ++i) block(i, j) = rng.uniform(-s, s);
  };

  LayerStackParams p;
  int in = arch.input_size;
  for (int hidden : arch.hidden_sizes) {
    require(hidden >= 1, ErrorKind::Config, "hidden size must be >= 1");
    auto cell = LstmCellParams::zeros(in, hidden);
    for (int g = 0; g < 4; ++g) {
      fill(cell.input_block(static_cast<Gate>(g)), in, hidden);
      fill(cell.recurrent_block(static_cast<Gate>(g)), hidden, hidden);
    }
    cell.bias_block(Gate::Forget).setOnes();
    p.layers.push_back(std::move(cell));
    in = hidden;
  }
  p.head.weights = Matrix::Zero(arch.output_size, in);
  fill(p.head.weights, in, arch.output_size);
  p.head.bias = Vector::Zero(arch.output_size);
  p.head.activation = arch.head;
  return p;
}

std::vector<TensorView> tensor_views(LayerStackParams& p) {
  std::vector<TensorView> v;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto& c = p.layers[l];
    const std::string pre = "layer" + std::to_string(l) + ".";
    v.push_back({pre + "bias", TensorRole::Bias, {c.bias.data(), static_cast<std::size_t>(c.bias.size())}});
    v.push_back({pre + "input_weights", TensorRole::Input,
                 {c.input_weights.data(), static_cast<std::size_t>(c.input_weights.size())}});
    v.push_back({pre + "recurrent_weights", TensorRole::Recurrent,
                 {c.recurrent_weights.data(), static_cast<std::size_t>(c.recurrent_weights.size())}});
  }
  v.push_back({"head.weights", TensorRole::HeadWeight,
               {p.head.weights.data(), static_cast<std::size_t>(p.head.weights.size())}});
  v.push_back({"head.bias", TensorRole::HeadBias,
               {p.head.bias.data(), static_cast<std::size_t>(p.head.bias.size())}});
  return v;
}

std::vector<ConstTensorView> tensor_views(const LayerStackParams& p) {
  auto mutable_views = tensor_views(const_cast<LayerStackParams&>(p));
  std::vector<ConstTensorView> v;
  v.reserve(mutable_views.size());
  for (auto& t : mutable_views) v.push_back({std::move(t.name), t.role, t.values});
  return v;
}

std::size_t parameter_count(const LayerStackParams& p) {
  std::size_t n = 0;
  for (const auto& t : tensor_views(p)) n += t.values.size();
  return n;
}

std::uint64_t fingerprint(const LayerStackParams& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& l : p.layers) {
    const std::int64_t dims[2] = {l.inputs(), l.hidden()};
    fnv_mix(h, dims, 2);
  }
  const auto act = static_cast<std::int64_t>(p.head.activation);
  fnv_mix(h, &act, 1);
  for (const auto& t : tensor_views(p)) fnv_mix(h, t.values.data(), t.values.size());
  return h;
}

StepResult lstm_step(const LstmCellParams& params, const LstmState& state, const Matrix& input) {
  check_cell_shapes(params, "lstm_step");
  const int hidden = params.hidden();
  require(input.rows() == params.inputs(), ErrorKind::Config,
          "lstm_step: input has " + std::to_string(input.rows()) + " rows, cell expects " +
              std::to_string(params.inputs()));
  require(state.h.rows() == hidden && state.c.rows() == hidden && state.h.cols() == input.cols() &&
              state.c.cols() == input.cols(),
          ErrorKind::Config, "lstm_step: state shape does not match cell/batch");
  require_finite(input, "lstm_step input");
  require_finite(state.h, "lstm_step hidden state");
  require_finite(state.c, "lstm_step cell state");

  StepResult r;
  r.gates.noalias() = params.input_weights * input;
  r.gates.noalias() += params.recurrent_weights * state.h;
  r.gates.colwise() += params.bias;
  activate_gates(r.gates, hidden);
  const auto f = r.gates.topRows(hidden).array();
  const auto g = r.gates.middleRows(hidden, hidden).array();
  const auto cand = r.gates.middleRows(2 * hidden, hidden).array();
  const auto o = r.gates.bottomRows(hidden).array();
  r.state.c = f * state.c.array() + g * cand;
  Matrix tc = r.state.c;
  tanh_inplace(tc);
  r.state.h = o * tc.array();
  require_finite(r.state.c, "lstm_step cell output");
  return r;
}

StackForward stack_forward(const LayerStackParams& stack, const Sequence& inputs) {
  stack.validate();
  require(!inputs.empty(), ErrorKind::Usage, "stack_forward: empty sequence");
  const auto batch = inputs.front().cols();
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    require(inputs[t].rows() == stack.input_size() && inputs[t].cols() == batch, ErrorKind::Config,
            "stack_forward: input at step " + std::to_string(t) + " has shape " +
                std::to_string(inputs[t].rows()) + "x" + std::to_string(inputs[t].cols()) +
                ", expected " + std::to_string(stack.input_size()) + "x" + std::to_string(batch));
    require_finite(inputs[t], "stack_forward input at step " + std::to_string(t));
  }
  const auto steps = inputs.size();

  StackForward out;
  auto& tape = out.tape;
  tape.params_fingerprint = fingerprint(stack);
  tape.batch = static_cast<int>(batch);
  tape.layers.resize(stack.layers.size());

  const Sequence* layer_in = &inputs;
  for (std::size_t l = 0; l < stack.layers.size(); ++l) {
    const auto& cell = stack.layers[l];
    const int hidden = cell.hidden();
    auto& lt = tape.layers[l];
    lt.inputs = *layer_in;
    lt.gates.resize(steps);
    lt.cells.resize(steps);
    lt.tanh_cells.resize(steps);
    lt.hidden.resize(steps);
    Matrix h = Matrix::Zero(hidden, batch);
    Matrix c = Matrix::Zero(hidden, batch);
    for (std::size_t t = 0; t < steps; ++t) {
      Matrix& gates = lt.gates[t];
      gates.noalias() = cell.input_weights * lt.inputs[t];
      gates.noalias() += cell.recurrent_weights * h;
      gates.colwise() += cell.bias;
      activate_gates(gates, hidden);
      c = gates.topRows(hidden).cwiseProduct(c) +
          gates.middleRows(hidden, hidden).cwiseProduct(gates.middleRows(2 * hidden, hidden));
      lt.cells[t] = c;
      lt.tanh_cells[t] = c;
      tanh_inplace(lt.tanh_cells[t]);
      h = gates.bottomRows(hidden).cwiseProduct(lt.tanh_cells[t]);
      lt.hidden[t] = h;
    }
    require_finite(h, "stack_forward hidden state of layer " + std::to_string(l));
    layer_in = &lt.hidden;
  }

  out.outputs.resize(steps);
  for (std::size_t t = 0; t < steps; ++t) apply_head(stack.head, tape.layers.back().hidden[t], out.outputs[t]);
  for (std::size_t t = 0; t < steps; ++t)
    require_finite(out.outputs[t], "stack_forward output at step " + std::to_string(t));
  tape.head_outputs = out.outputs;
  return out;
}

StackGradients stack_backward(const LayerStackParams& stack, const ForwardTape& tape,
                              const Sequence& output_grads) {
  require(tape.params_fingerprint == fingerprint(stack), ErrorKind::Usage,
          "stack_backward: tape was recorded with different parameters");
  require(tape.layers.size() == stack.layers.size(), ErrorKind::Usage,
          "stack_backward: tape layer count does not match the stack");
  const int steps = tape.steps();
  const int batch = tape.batch;
  require(static_cast<int>(output_grads.size()) == steps, ErrorKind::Usage,
          "stack_backward: output gradient length does not match tape length");
  for (const auto& g : output_grads)
    require(g.rows() == stack.output_size() && g.cols() == batch, ErrorKind::Usage,
            "stack_backward: output gradient has wrong shape");

  StackGradients grads;
  grads.params = stack.zeros_like();
  auto& head_grad = grads.params.head;

  // dL/dh of the top layer, per step.
  Sequence upstream(steps);
  Matrix pre;
  for (int t = 0; t < steps; ++t) {
    const Matrix& y = tape.head_outputs[t];
    const Matrix& gy = output_grads[t];
    switch (stack.head.activation) {
      case HeadActivation::Linear: pre = gy; break;
      case HeadActivation::Sigmoid: pre = gy.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())); break;
      case HeadActivation::Softmax: {
        const Eigen::RowVectorXd dot = y.cwiseProduct(gy).colwise().sum();
        pre = y.cwiseProduct(gy - dot.replicate(y.rows(), 1));
        break;
      }
    }
    const Matrix& h = tape.layers.back().hidden[t];
    head_grad.weights.noalias() += pre * h.transpose();
    head_grad.bias += pre.rowwise().sum();
    upstream[t].noalias() = stack.head.weights.transpose() * pre;
  }

  for (int l = static_cast<int>(stack.layers.size()) - 1; l >= 0; --l) {
    const auto& cell = stack.layers[l];
    const auto& lt = tape.layers[l];
    auto& cg = grads.params.layers[l];
    const int hidden = cell.hidden();
    Matrix dh_next = Matrix::Zero(hidden, batch);
    Matrix dc_next = Matrix::Zero(hidden, batch);
    Matrix dpre(4 * hidden, batch);
    Sequence down(steps);
    for (int t = steps - 1; t >= 0; --t) {
      const Matrix& gates = lt.gates[t];
      const auto f = gates.topRows(hidden).array();
      const auto g = gates.middleRows(hidden, hidden).array();
      const auto cand = gates.middleRows(2 * hidden, hidden).array();
      const auto o = gates.bottomRows(hidden).array();
      const auto tc = lt.tanh_cells[t].array();

      const Matrix dh = upstream[t] + dh_next;
      const Matrix dc = (dh.array() * o * (1.0 - tc.square())).matrix() + dc_next;
      const Matrix c_prev = t > 0 ? lt.cells[t - 1] : Matrix::Zero(hidden, batch);

      dpre.topRows(hidden) = (dc.array() * c_prev.array() * f * (1.0 - f)).matrix();
      dpre.middleRows(hidden, hidden) = (dc.array() * cand * g * (1.0 - g)).matrix();
      dpre.middleRows(2 * hidden, hidden) = (dc.array() * g * (1.0 - cand.square())).matrix();
      dpre.bottomRows(hidden) = (dh.array() * tc * o * (1.0 - o)).matrix();
      dc_next = (dc.array() * f).matrix();

      cg.input_weights.noalias() += dpre * lt.inputs[t].transpose();
      if (t > 0) cg.recurrent_weights.noalias() += dpre * lt.hidden[t - 1].transpose();
      cg.bias += dpre.rowwise().sum();
      down[t].noalias() = cell.input_weights.transpose() * dpre;
      dh_next.noalias() = cell.recurrent_weights.transpose() * dpre;
    }
    upstream = std::move(down);
  }
  grads.inputs = std::move(upstream);
  return grads;
}

}  // namespace smpriv
