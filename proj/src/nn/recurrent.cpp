// SPDX-License-Identifier: Apache-2.0
#include "losnet/nn/recurrent.hpp"

namespace losnet::nn {

SequenceOutput gru_sequence_forward(std::span<const GruCell> stack,
                                    const Tensor& x) {
  if (stack.empty()) throw DimensionError("gru_sequence_forward: empty stack");
  if (x.rank() != 3) {
    throw DimensionError("gru_sequence_forward: input " +
                         shape_string(x.shape()) +
                         " is not [batch x steps x features]");
  }
  Tensor seq = x;
  for (const auto& cell : stack) {
    seq = GruLayer(cell, true).infer(seq);
  }
  const std::size_t batch = seq.extent(0), steps = seq.extent(1),
                    hidden = seq.extent(2);
  Tensor last({batch, hidden});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t h = 0; h < hidden; ++h)
      last(b, h) = seq(b, steps - 1, h);
  return {std::move(seq), std::move(last)};
}

Tensor bilstm_forward(const LstmCell& forward_cell,
                      const LstmCell& backward_cell, const Tensor& x) {
  if (forward_cell.hidden_size() != backward_cell.hidden_size()) {
    throw DimensionError("bilstm_forward: hidden sizes differ (" +
                         std::to_string(forward_cell.hidden_size()) + " vs " +
                         std::to_string(backward_cell.hidden_size()) + ")");
  }
  return LstmLayer(forward_cell, backward_cell, true).infer(x);
}

}  // namespace losnet::nn
