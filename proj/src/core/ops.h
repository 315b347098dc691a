// core/ops.h

// Copyright 2026 castkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CASTKIT_CORE_OPS_H_
#define CASTKIT_CORE_OPS_H_

#include <string>
#include <vector>

#include "core/tensor.h"

namespace cast {
namespace ad {

// Differentiable operations.  Tensors are 1-D [n] or 2-D [m x n]; 1-D
// inputs to row-wise ops are treated as a single row.  Every op validates
// shapes and throws ShapeError naming the op and the offending shapes.

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);

// add/mul broadcast the second argument when it is a scalar or a row
// vector; sub is a - b with the same rules.
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(const TensorPtr& a, double c);

TensorPtr sigmoid(const TensorPtr& x);
TensorPtr relu(const TensorPtr& x);
// Parameterized ReLU with per-column slopes: alpha for x >= 0, beta below.
TensorPtr prelu(const TensorPtr& z, const TensorPtr& alpha, const TensorPtr& beta);
TensorPtr swish(const TensorPtr& x);
TensorPtr glu(const TensorPtr& x);  // [t x 2d] -> [t x d], a * sigmoid(b)
TensorPtr log(const TensorPtr& x);
TensorPtr exp(const TensorPtr& x);
TensorPtr softplus(const TensorPtr& x);

TensorPtr softmax(const TensorPtr& x);      // per row
TensorPtr log_softmax(const TensorPtr& x);  // per row

TensorPtr layernorm(const TensorPtr& x, const TensorPtr& gain,
                    const TensorPtr& bias, double eps = 1e-5);

TensorPtr concat(const std::vector<TensorPtr>& xs, int axis);

TensorPtr sum(const TensorPtr& x);   // full reduction -> scalar
TensorPtr mean(const TensorPtr& x);  // full reduction -> scalar
TensorPtr logsumexp(const TensorPtr& x);            // full -> scalar
TensorPtr logsumexp_axis(const TensorPtr& x, int axis);  // keeps a 1-sized dim

// Row gather: out[l, :] = table[ids[l], :].  Grad scatters into table.
TensorPtr embedding_lookup(const TensorPtr& table, const std::vector<int>& ids);

// Half-open 2-D range [r0, r1) x [c0, c1).
TensorPtr slice(const TensorPtr& x, int r0, int r1, int c0, int c1);
TensorPtr transpose(const TensorPtr& x);

// Same-length depthwise convolution, odd kernel, zero padding.
// x [t x d], w [k x d].
TensorPtr conv1d_depthwise(const TensorPtr& x, const TensorPtr& w);
// 1x1 convolution over time: x [t x d] * w [d x d'].
TensorPtr conv1d_pointwise(const TensorPtr& x, const TensorPtr& w);
// Strided full convolution for the subsampling front-end.  x [t x f],
// w [(k*f) x d] tap-major, output [ceil(t/stride) x d].
TensorPtr conv1d_strided(const TensorPtr& x, const TensorPtr& w, int kernel,
                         int stride);

// Multiply by a pre-sampled 0 / (1/keep) mask; mask takes no grad.
TensorPtr dropout_apply(const TensorPtr& x, const TensorPtr& mask);

// Column-wise batch norm with fixed (running) statistics.
TensorPtr batchnorm_eval(const TensorPtr& x, const TensorPtr& gamma,
                         const TensorPtr& beta, const std::vector<double>& mean,
                         const std::vector<double>& var, double eps = 1e-5);
// Training-mode batch norm on the batch's own statistics; the per-column
// batch mean/var are written out for running-average updates.
TensorPtr batchnorm_train(const TensorPtr& x, const TensorPtr& gamma,
                          const TensorPtr& beta, double eps,
                          std::vector<double>* batch_mean,
                          std::vector<double>* batch_var);

// Attributes for the generic dispatcher below.
struct OpAttrs {
  int axis = -1;
  int stride = 1;
  int kernel = 1;
  int r0 = 0, r1 = -1, c0 = 0, c1 = -1;
  double eps = 1e-5;
  double scale = 1.0;
  std::vector<double> mean, var;  // batchnorm-eval statistics
};

// Uniform entry point keyed by op identifier, mainly for the gradient
// suite.  Identifiers: matmul, add, mul, sigmoid, relu, prelu-with-slopes,
// softmax, log-softmax, layernorm, concat, mean, sum, logsumexp,
// embedding-lookup, slice, transpose, 1d-depthwise-conv, 1d-pointwise-conv,
// 1d-strided-conv, glu, swish, dropout-mask-apply, batchnorm-eval,
// batchnorm-train, log, exp, softplus, scale.
TensorPtr forward_op(const std::string& kind, const std::vector<TensorPtr>& inputs,
                     const OpAttrs& attrs = {});

// Leaf of i.i.d. standard normal draws; never takes grad.
TensorPtr sample_standard_normal(Rng* rng, const std::vector<int>& shape);

constexpr double kNegInf = -1e30;

}  // namespace ad
}  // namespace cast

#endif  // CASTKIT_CORE_OPS_H_
