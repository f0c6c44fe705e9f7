/*
 * Copyright 2026 The lowfield-iqt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "iqt/tensor.hpp"

namespace iqt::nn {

using Dims3 = std::array<int, 3>;

// Weight layouts (reusing Tensor5 as a 5D array):
//   conv3d:   (c_out, c_in, kx, ky, kz)
//   deconv3d: (c_in, c_out, sx, sy, sz)
// Biases are (1, c_out, 1, 1, 1).

/// Cross-correlation with "same" zero padding and unit stride. Kernel dims must be odd.
Tensor5 conv3d_forward(const Tensor5& input, const Tensor5& kernel, const Tensor5& bias);

/// Accumulates into the gradients that are non-null.
void conv3d_backward(const Tensor5& input, const Tensor5& kernel, const Tensor5& grad_out, Tensor5* grad_input,
                     Tensor5* grad_kernel, Tensor5* grad_bias);

/// Transpose convolution with kernel == stride; spatial dims scale by stride.
Tensor5 deconv3d_forward(const Tensor5& input, const Tensor5& kernel, const Tensor5& bias);
void deconv3d_backward(const Tensor5& input, const Tensor5& kernel, const Tensor5& grad_out, Tensor5* grad_input,
                       Tensor5* grad_kernel, Tensor5* grad_bias);

/// Strided "valid" convolution using a deconv-layout kernel: the exact adjoint of
/// deconv3d_forward without bias. Maps c_out channels back to c_in.
Tensor5 strided_conv3d(const Tensor5& input, const Tensor5& deconv_kernel);

struct PoolCache {
    std::vector<std::uint32_t> argmax;  // flat input offset within the (n, c) channel
};

Tensor5 maxpool3d_forward(const Tensor5& input, const Dims3& window, PoolCache* cache);
Tensor5 maxpool3d_backward(const Shape5& input_shape, const Dims3& window, const PoolCache& cache, const Tensor5& grad_out);

Tensor5 relu_forward(const Tensor5& input);
/// Gradient of ReLU given its forward output.
Tensor5 relu_backward(const Tensor5& output, const Tensor5& grad_out);

struct BatchNormState {
    double epsilon = 1e-3;
    double momentum = 0.99;
};

struct BatchNormCache {
    std::vector<double> inv_std;
    Tensor5 normalized;
    bool train = true;
};

/// Per-channel normalisation. In train mode uses batch statistics and updates
/// running_mean / running_var with the momentum; in infer mode uses the running ones.
Tensor5 batchnorm_forward(const Tensor5& input, const Tensor5& gamma, const Tensor5& beta, Tensor5& running_mean,
                          Tensor5& running_var, bool train, const BatchNormState& state, BatchNormCache* cache);
void batchnorm_backward(const Tensor5& gamma, const BatchNormCache& cache, const Tensor5& grad_out, Tensor5* grad_input,
                        Tensor5* grad_gamma, Tensor5* grad_beta);

/// Channel concatenation [a, b].
Tensor5 concat_channels(const Tensor5& a, const Tensor5& b);
void split_channels(const Tensor5& grad, int channels_a, Tensor5& grad_a, Tensor5& grad_b);

struct Loss {
    double value = 0;
    Tensor5 grad;
};

/// Mean over every element of (pred - target)^2.
Loss mse_loss(const Tensor5& pred, const Tensor5& target);

}  // namespace iqt::nn
