// core/tensor.h

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

#ifndef CASTKIT_CORE_TENSOR_H_
#define CASTKIT_CORE_TENSOR_H_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "base/error.h"
#include "core/rng.h"

namespace cast {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// One node of the reverse-mode computation graph.  Values are 64-bit floats
// in row-major order.  Nodes are immutable after creation except for grad;
// graphs are rebuilt per step rather than mutated in place.
class Tensor {
 public:
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until the first backward pass
  bool requires_grad = false;

  // Producing operation, absent for leaves.  The closure adds this node's
  // grad contribution into its parents' grad buffers.
  std::string op;
  std::vector<TensorPtr> parents;
  std::function<void(const Tensor&)> backprop;

  size_t size() const { return value.size(); }
  // 1-D tensors behave as row vectors throughout the op library.
  int rows() const { return shape.size() < 2 ? 1 : shape[0]; }
  int cols() const { return shape.empty() ? 1 : shape.back(); }
  bool IsScalar() const { return value.size() == 1; }

  double& at(int r, int c) { return value[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return value[static_cast<size_t>(r) * cols() + c]; }

  void EnsureGrad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
  void ZeroGrad() { grad.clear(); }

  static TensorPtr Leaf(std::vector<int> shape, std::vector<double> values,
                        bool requires_grad = false);
  static TensorPtr Zeros(std::vector<int> shape, bool requires_grad = false);
  static TensorPtr Full(std::vector<int> shape, double v, bool requires_grad = false);
  static TensorPtr Scalar(double v, bool requires_grad = false);
  // i.i.d. N(0, std^2) entries.
  static TensorPtr Randn(std::vector<int> shape, Rng* rng, double std = 1.0,
                         bool requires_grad = false);

  static size_t NumElements(const std::vector<int>& shape);
};

// While a NoGradGuard is alive on a thread, ops compute values only: no
// parents are retained and no backprop closures are recorded.  Used by
// decoding and scoring paths.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool GradModeEnabled();

// Accumulates d(root)/d(leaf) into .grad of every reachable node that
// requires grad.  root must be scalar.  Grads accumulate additively across
// calls; use ZeroGrad between steps.
void Backward(const TensorPtr& root);

}  // namespace cast

#endif  // CASTKIT_CORE_TENSOR_H_
