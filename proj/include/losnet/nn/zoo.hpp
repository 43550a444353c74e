// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "losnet/nn/model.hpp"

namespace losnet::nn {

/// Name of the hybrid convolutional / stacked-GRU / dense model.
inline constexpr std::string_view kProposedModel = "cnn-gru-dnn";

/// The twelve comparison models, in report order:
/// lstm, bilstm, gru, cnn, s-lstm, s-bilstm, s-gru, cnn-lstm, cnn-bilstm,
/// gru-cnn, cnn-gru-dnn, cnn-gru-dnn-s.
std::vector<ModelSpec> default_zoo(std::size_t inputs);
const std::vector<std::string>& zoo_names();

/// Throws std::invalid_argument listing the valid names.
ModelSpec zoo_spec(std::string_view name, std::size_t inputs);

/// Single dense(1, linear) layer.
ModelSpec linear_regression_spec(std::size_t inputs);

}  // namespace losnet::nn
