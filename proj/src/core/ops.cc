// core/ops.cc

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

#include "core/ops.h"

#include <algorithm>
#include <cmath>

#include "core/kernels.h"

namespace cast {
namespace ad {

namespace {

TensorPtr MakeOut(std::vector<int> shape) {
  auto t = std::make_shared<Tensor>();
  size_t n = Tensor::NumElements(shape);
  t->shape = std::move(shape);
  t->value.assign(n, 0.0);
  return t;
}

bool AnyRequiresGrad(const std::vector<TensorPtr>& parents) {
  for (const auto& p : parents) {
    if (p->requires_grad) return true;
  }
  return false;
}

void Record(const TensorPtr& out, const char* op, std::vector<TensorPtr> parents,
            std::function<void(const Tensor&)> fn) {
  if (!GradModeEnabled() || !AnyRequiresGrad(parents)) return;
  out->requires_grad = true;
  out->op = op;
  out->parents = std::move(parents);
  out->backprop = std::move(fn);
}

double StableSigmoid(double x) {
  if (x >= 0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

enum class Broadcast { kSame, kRow, kScalar };

Broadcast ClassifyBroadcast(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape == b.shape) return Broadcast::kSame;
  if (b.size() == 1) return Broadcast::kScalar;
  if (b.size() == static_cast<size_t>(a.cols()) && b.rows() * b.cols() == static_cast<int>(b.size()) &&
      (b.shape.size() == 1 || b.rows() == 1)) {
    return Broadcast::kRow;
  }
  throw ShapeError(Str(op, ": incompatible shapes ", ShapeStr(a.shape), " vs ",
                       ShapeStr(b.shape)));
}

// Shared elementwise helper.  dloc(x, y) is the local derivative dy/dx.
template <typename F, typename DF>
TensorPtr Unary(const char* name, const TensorPtr& x, F f, DF dloc) {
  auto out = MakeOut(x->shape);
  for (size_t i = 0; i < x->size(); ++i) out->value[i] = f(x->value[i]);
  Record(out, name, {x}, [x, dloc](const Tensor& o) {
    x->EnsureGrad();
    for (size_t i = 0; i < o.size(); ++i) {
      x->grad[i] += o.grad[i] * dloc(x->value[i], o.value[i]);
    }
  });
  return out;
}

}  // namespace

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
  CASTK_CHECK(a->shape.size() == 2 && b->shape.size() == 2 && a->shape[1] == b->shape[0],
              "matmul: shape mismatch ", ShapeStr(a->shape), " vs ", ShapeStr(b->shape));
  int m = a->shape[0], k = a->shape[1], n = b->shape[1];
  auto out = MakeOut({m, n});
  kernels::MatMul(a->value.data(), b->value.data(), out->value.data(), m, k, n);
  Record(out, "matmul", {a, b}, [a, b, m, k, n](const Tensor& o) {
    if (a->requires_grad) {
      a->EnsureGrad();
      std::vector<double> tmp(static_cast<size_t>(m) * k);
      kernels::MatMulNT(o.grad.data(), b->value.data(), tmp.data(), m, n, k);
      for (size_t i = 0; i < tmp.size(); ++i) a->grad[i] += tmp[i];
    }
    if (b->requires_grad) {
      b->EnsureGrad();
      std::vector<double> tmp(static_cast<size_t>(k) * n);
      kernels::MatMulTN(a->value.data(), o.grad.data(), tmp.data(), k, m, n);
      for (size_t i = 0; i < tmp.size(); ++i) b->grad[i] += tmp[i];
    }
  });
  return out;
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
  if (a->size() < b->size()) return add(b, a);
  Broadcast bc = ClassifyBroadcast("add", *a, *b);
  auto out = MakeOut(a->shape);
  int cols = a->cols();
  for (size_t i = 0; i < a->size(); ++i) {
    double bv = bc == Broadcast::kSame   ? b->value[i]
                : bc == Broadcast::kRow ? b->value[i % cols]
                                        : b->value[0];
    out->value[i] = a->value[i] + bv;
  }
  Record(out, "add", {a, b}, [a, b, bc, cols](const Tensor& o) {
    if (a->requires_grad) {
      a->EnsureGrad();
      for (size_t i = 0; i < o.size(); ++i) a->grad[i] += o.grad[i];
    }
    if (b->requires_grad) {
      b->EnsureGrad();
      for (size_t i = 0; i < o.size(); ++i) {
        size_t j = bc == Broadcast::kSame ? i : bc == Broadcast::kRow ? i % cols : 0;
        b->grad[j] += o.grad[i];
      }
    }
  });
  return out;
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
  return add(a, scale(b, -1.0));
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
  if (a->size() < b->size()) return mul(b, a);
  Broadcast bc = ClassifyBroadcast("mul", *a, *b);
  auto out = MakeOut(a->shape);
  int cols = a->cols();
  for (size_t i = 0; i < a->size(); ++i) {
    double bv = bc == Broadcast::kSame   ? b->value[i]
                : bc == Broadcast::kRow ? b->value[i % cols]
                                        : b->value[0];
    out->value[i] = a->value[i] * bv;
  }
  Record(out, "mul", {a, b}, [a, b, bc, cols](const Tensor& o) {
    if (a->requires_grad) {
      a->EnsureGrad();
      for (size_t i = 0; i < o.size(); ++i) {
        size_t j = bc == Broadcast::kSame ? i : bc == Broadcast::kRow ? i % cols : 0;
        a->grad[i] += o.grad[i] * b->value[j];
      }
    }
    if (b->requires_grad) {
      b->EnsureGrad();
      for (size_t i = 0; i < o.size(); ++i) {
        size_t j = bc == Broadcast::kSame ? i : bc == Broadcast::kRow ? i % cols : 0;
        b->grad[j] += o.grad[i] * a->value[i];
      }
    }
  });
  return out;
}

TensorPtr scale(const TensorPtr& a, double c) {
  auto out = MakeOut(a->shape);
  for (size_t i = 0; i < a->size(); ++i) out->value[i] = c * a->value[i];
  Record(out, "scale", {a}, [a, c](const Tensor& o) {
    a->EnsureGrad();
    for (size_t i = 0; i < o.size(); ++i) a->grad[i] += c * o.grad[i];
  });
  return out;
}

TensorPtr sigmoid(const TensorPtr& x) {
  return Unary("sigmoid", x, StableSigmoid,
               [](double, double y) { return y * (1.0 - y); });
}

TensorPtr relu(const TensorPtr& x) {
  return Unary("relu", x, [](double v) { return v > 0 ? v : 0.0; },
               [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

TensorPtr swish(const TensorPtr& x) {
  return Unary("swish", x, [](double v) { return v * StableSigmoid(v); },
               [](double v, double) {
                 double s = StableSigmoid(v);
                 return s * (1.0 + v * (1.0 - s));
               });
}

TensorPtr log(const TensorPtr& x) {
  for (double v : x->value) {
    CASTK_CHECK(v > 0.0, "log: non-positive input ", v);
  }
  return Unary("log", x, [](double v) { return std::log(v); },
               [](double v, double) { return 1.0 / v; });
}

TensorPtr exp(const TensorPtr& x) {
  return Unary("exp", x, [](double v) { return std::exp(v); },
               [](double, double y) { return y; });
}

TensorPtr softplus(const TensorPtr& x) {
  return Unary("softplus", x,
               [](double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); },
               [](double v, double) { return StableSigmoid(v); });
}

TensorPtr prelu(const TensorPtr& z, const TensorPtr& alpha, const TensorPtr& beta) {
  int d = z->cols();
  CASTK_CHECK(static_cast<int>(alpha->size()) == d && static_cast<int>(beta->size()) == d,
              "prelu-with-slopes: slope shapes ", ShapeStr(alpha->shape), ", ",
              ShapeStr(beta->shape), " do not match input ", ShapeStr(z->shape));
  auto out = MakeOut(z->shape);
  for (size_t i = 0; i < z->size(); ++i) {
    double v = z->value[i];
    size_t j = i % d;
    out->value[i] = v >= 0 ? alpha->value[j] * v : beta->value[j] * v;
  }
  Record(out, "prelu-with-slopes", {z, alpha, beta}, [z, alpha, beta, d](const Tensor& o) {
    if (z->requires_grad) z->EnsureGrad();
    if (alpha->requires_grad) alpha->EnsureGrad();
    if (beta->requires_grad) beta->EnsureGrad();
    for (size_t i = 0; i < o.size(); ++i) {
      double v = z->value[i];
      size_t j = i % d;
      double g = o.grad[i];
      if (v >= 0) {
        if (z->requires_grad) z->grad[i] += g * alpha->value[j];
        if (alpha->requires_grad) alpha->grad[j] += g * v;
      } else {
        if (z->requires_grad) z->grad[i] += g * beta->value[j];
        if (beta->requires_grad) beta->grad[j] += g * v;
      }
    }
  });
  return out;
}

TensorPtr glu(const TensorPtr& x) {
  CASTK_CHECK(x->shape.size() == 2 && x->shape[1] % 2 == 0,
              "glu: needs [t x 2d] input, got ", ShapeStr(x->shape));
  int t = x->shape[0], d = x->shape[1] / 2;
  auto out = MakeOut({t, d});
  for (int i = 0; i < t; ++i) {
    for (int j = 0; j < d; ++j) {
      out->at(i, j) = x->at(i, j) * StableSigmoid(x->at(i, j + d));
    }
  }
  Record(out, "glu", {x}, [x, t, d](const Tensor& o) {
    x->EnsureGrad();
    for (int i = 0; i < t; ++i) {
      for (int j = 0; j < d; ++j) {
        double a = x->at(i, j);
        double s = StableSigmoid(x->at(i, j + d));
        double g = o.grad[static_cast<size_t>(i) * d + j];
        x->grad[static_cast<size_t>(i) * (2 * d) + j] += g * s;
        x->grad[static_cast<size_t>(i) * (2 * d) + j + d] += g * a * s * (1.0 - s);
      }
    }
  });
  return out;
}

namespace {
// Row softmax into out, returns nothing; numerically stabilized.
void RowSoftmax(const double* x, double* out, int n) {
  double mx = x[0];
  for (int j = 1; j < n; ++j) mx = std::max(mx, x[j]);
  double z = 0.0;
  for (int j = 0; j < n; ++j) {
    out[j] = std::exp(x[j] - mx);
    z += out[j];
  }
  for (int j = 0; j < n; ++j) out[j] /= z;
}
}  // namespace

TensorPtr softmax(const TensorPtr& x) {
  int rows = x->rows(), n = x->cols();
  auto out = MakeOut(x->shape);
  for (int i = 0; i < rows; ++i) {
    RowSoftmax(x->value.data() + static_cast<size_t>(i) * n,
               out->value.data() + static_cast<size_t>(i) * n, n);
  }
  Record(out, "softmax", {x}, [x, rows, n](const Tensor& o) {
    x->EnsureGrad();
    for (int i = 0; i < rows; ++i) {
      const double* s = o.value.data() + static_cast<size_t>(i) * n;
      const double* g = o.grad.data() + static_cast<size_t>(i) * n;
      double dot = 0.0;
      for (int j = 0; j < n; ++j) dot += g[j] * s[j];
      double* gx = x->grad.data() + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) gx[j] += s[j] * (g[j] - dot);
    }
  });
  return out;
}

TensorPtr log_softmax(const TensorPtr& x) {
  int rows = x->rows(), n = x->cols();
  auto out = MakeOut(x->shape);
  for (int i = 0; i < rows; ++i) {
    const double* xi = x->value.data() + static_cast<size_t>(i) * n;
    double* oi = out->value.data() + static_cast<size_t>(i) * n;
    double mx = xi[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, xi[j]);
    double z = 0.0;
    for (int j = 0; j < n; ++j) z += std::exp(xi[j] - mx);
    double lse = mx + std::log(z);
    for (int j = 0; j < n; ++j) oi[j] = xi[j] - lse;
  }
  Record(out, "log-softmax", {x}, [x, rows, n](const Tensor& o) {
    x->EnsureGrad();
    for (int i = 0; i < rows; ++i) {
      const double* y = o.value.data() + static_cast<size_t>(i) * n;
      const double* g = o.grad.data() + static_cast<size_t>(i) * n;
      double gsum = 0.0;
      for (int j = 0; j < n; ++j) gsum += g[j];
      double* gx = x->grad.data() + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) gx[j] += g[j] - std::exp(y[j]) * gsum;
    }
  });
  return out;
}

TensorPtr layernorm(const TensorPtr& x, const TensorPtr& gain,
                    const TensorPtr& bias, double eps) {
  int rows = x->rows(), n = x->cols();
  CASTK_CHECK(static_cast<int>(gain->size()) == n && static_cast<int>(bias->size()) == n,
              "layernorm: gain/bias shapes ", ShapeStr(gain->shape), ", ",
              ShapeStr(bias->shape), " do not match input ", ShapeStr(x->shape));
  auto out = MakeOut(x->shape);
  // cached normalized values and inverse stds for backward
  auto xhat = std::make_shared<std::vector<double>>(x->size());
  auto istd = std::make_shared<std::vector<double>>(rows);
  for (int i = 0; i < rows; ++i) {
    const double* xi = x->value.data() + static_cast<size_t>(i) * n;
    double mu = 0.0;
    for (int j = 0; j < n; ++j) mu += xi[j];
    mu /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) var += (xi[j] - mu) * (xi[j] - mu);
    var /= n;
    double is = 1.0 / std::sqrt(var + eps);
    (*istd)[i] = is;
    for (int j = 0; j < n; ++j) {
      double xh = (xi[j] - mu) * is;
      (*xhat)[static_cast<size_t>(i) * n + j] = xh;
      out->value[static_cast<size_t>(i) * n + j] = gain->value[j] * xh + bias->value[j];
    }
  }
  Record(out, "layernorm", {x, gain, bias},
         [x, gain, bias, xhat, istd, rows, n](const Tensor& o) {
           if (gain->requires_grad) gain->EnsureGrad();
           if (bias->requires_grad) bias->EnsureGrad();
           if (x->requires_grad) x->EnsureGrad();
           for (int i = 0; i < rows; ++i) {
             const double* g = o.grad.data() + static_cast<size_t>(i) * n;
             const double* xh = xhat->data() + static_cast<size_t>(i) * n;
             if (gain->requires_grad || bias->requires_grad) {
               for (int j = 0; j < n; ++j) {
                 if (gain->requires_grad) gain->grad[j] += g[j] * xh[j];
                 if (bias->requires_grad) bias->grad[j] += g[j];
               }
             }
             if (x->requires_grad) {
               double mean_dxh = 0.0, mean_dxh_xh = 0.0;
               for (int j = 0; j < n; ++j) {
                 double dxh = g[j] * gain->value[j];
                 mean_dxh += dxh;
                 mean_dxh_xh += dxh * xh[j];
               }
               mean_dxh /= n;
               mean_dxh_xh /= n;
               double* gx = x->grad.data() + static_cast<size_t>(i) * n;
               for (int j = 0; j < n; ++j) {
                 double dxh = g[j] * gain->value[j];
                 gx[j] += (*istd)[i] * (dxh - mean_dxh - xh[j] * mean_dxh_xh);
               }
             }
           }
         });
  return out;
}

TensorPtr concat(const std::vector<TensorPtr>& xs, int axis) {
  CASTK_CHECK(!xs.empty(), "concat: no inputs");
  CASTK_CHECK(axis == 0 || axis == 1, "concat: axis must be 0 or 1, got ", axis);
  int rows = xs[0]->rows(), cols = xs[0]->cols();
  int total = 0;
  for (const auto& x : xs) {
    if (axis == 0) {
      CASTK_CHECK(x->cols() == cols, "concat: column mismatch ", ShapeStr(x->shape),
                  " vs ", ShapeStr(xs[0]->shape));
      total += x->rows();
    } else {
      CASTK_CHECK(x->rows() == rows, "concat: row mismatch ", ShapeStr(x->shape),
                  " vs ", ShapeStr(xs[0]->shape));
      total += x->cols();
    }
  }
  auto out = MakeOut(axis == 0 ? std::vector<int>{total, cols}
                               : std::vector<int>{rows, total});
  if (axis == 0) {
    size_t off = 0;
    for (const auto& x : xs) {
      std::copy(x->value.begin(), x->value.end(), out->value.begin() + off);
      off += x->size();
    }
  } else {
    int off = 0;
    for (const auto& x : xs) {
      for (int i = 0; i < rows; ++i) {
        std::copy(x->value.begin() + static_cast<size_t>(i) * x->cols(),
                  x->value.begin() + static_cast<size_t>(i + 1) * x->cols(),
                  out->value.begin() + static_cast<size_t>(i) * total + off);
      }
      off += x->cols();
    }
  }
  Record(out, "concat", xs, [xs, axis, rows, total](const Tensor& o) {
    if (axis == 0) {
      size_t off = 0;
      for (const auto& x : xs) {
        if (x->requires_grad) {
          x->EnsureGrad();
          for (size_t i = 0; i < x->size(); ++i) x->grad[i] += o.grad[off + i];
        }
        off += x->size();
      }
    } else {
      int off = 0;
      for (const auto& x : xs) {
        if (x->requires_grad) {
          x->EnsureGrad();
          for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < x->cols(); ++j) {
              x->grad[static_cast<size_t>(i) * x->cols() + j] +=
                  o.grad[static_cast<size_t>(i) * total + off + j];
            }
          }
        }
        off += x->cols();
      }
    }
  });
  return out;
}

TensorPtr sum(const TensorPtr& x) {
  auto out = MakeOut({1});
  double acc = 0.0;
  for (double v : x->value) acc += v;
  out->value[0] = acc;
  Record(out, "sum", {x}, [x](const Tensor& o) {
    x->EnsureGrad();
    for (size_t i = 0; i < x->size(); ++i) x->grad[i] += o.grad[0];
  });
  return out;
}

TensorPtr mean(const TensorPtr& x) {
  double n = static_cast<double>(x->size());
  return scale(sum(x), 1.0 / n);
}

TensorPtr logsumexp(const TensorPtr& x) {
  auto out = MakeOut({1});
  double mx = x->value[0];
  for (double v : x->value) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : x->value) z += std::exp(v - mx);
  out->value[0] = mx + std::log(z);
  Record(out, "logsumexp", {x}, [x](const Tensor& o) {
    x->EnsureGrad();
    double g = o.grad[0], lse = o.value[0];
    for (size_t i = 0; i < x->size(); ++i) {
      x->grad[i] += g * std::exp(x->value[i] - lse);
    }
  });
  return out;
}

TensorPtr logsumexp_axis(const TensorPtr& x, int axis) {
  CASTK_CHECK(x->shape.size() == 2, "logsumexp: axis form needs a 2-D input, got ",
              ShapeStr(x->shape));
  CASTK_CHECK(axis == 0 || axis == 1, "logsumexp: axis must be 0 or 1, got ", axis);
  int rows = x->shape[0], cols = x->shape[1];
  auto out = MakeOut(axis == 0 ? std::vector<int>{1, cols} : std::vector<int>{rows, 1});
  if (axis == 0) {
    for (int j = 0; j < cols; ++j) {
      double mx = x->at(0, j);
      for (int i = 1; i < rows; ++i) mx = std::max(mx, x->at(i, j));
      double z = 0.0;
      for (int i = 0; i < rows; ++i) z += std::exp(x->at(i, j) - mx);
      out->value[j] = mx + std::log(z);
    }
  } else {
    for (int i = 0; i < rows; ++i) {
      double mx = x->at(i, 0);
      for (int j = 1; j < cols; ++j) mx = std::max(mx, x->at(i, j));
      double z = 0.0;
      for (int j = 0; j < cols; ++j) z += std::exp(x->at(i, j) - mx);
      out->value[i] = mx + std::log(z);
    }
  }
  Record(out, "logsumexp", {x}, [x, axis, rows, cols](const Tensor& o) {
    x->EnsureGrad();
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        size_t oi = axis == 0 ? j : i;
        x->grad[static_cast<size_t>(i) * cols + j] +=
            o.grad[oi] * std::exp(x->at(i, j) - o.value[oi]);
      }
    }
  });
  return out;
}

TensorPtr embedding_lookup(const TensorPtr& table, const std::vector<int>& ids) {
  CASTK_CHECK(table->shape.size() == 2, "embedding-lookup: table must be 2-D, got ",
              ShapeStr(table->shape));
  int v = table->shape[0], d = table->shape[1];
  for (int id : ids) {
    CASTK_CHECK(id >= 0 && id < v, "embedding-lookup: id ", id,
                " out of range for table ", ShapeStr(table->shape));
  }
  auto out = MakeOut({static_cast<int>(ids.size()), d});
  for (size_t l = 0; l < ids.size(); ++l) {
    std::copy(table->value.begin() + static_cast<size_t>(ids[l]) * d,
              table->value.begin() + static_cast<size_t>(ids[l] + 1) * d,
              out->value.begin() + l * d);
  }
  Record(out, "embedding-lookup", {table}, [table, ids, d](const Tensor& o) {
    table->EnsureGrad();
    for (size_t l = 0; l < ids.size(); ++l) {
      for (int j = 0; j < d; ++j) {
        table->grad[static_cast<size_t>(ids[l]) * d + j] += o.grad[l * d + j];
      }
    }
  });
  return out;
}

TensorPtr slice(const TensorPtr& x, int r0, int r1, int c0, int c1) {
  int rows = x->rows(), cols = x->cols();
  if (r1 < 0) r1 = rows;
  if (c1 < 0) c1 = cols;
  CASTK_CHECK(0 <= r0 && r0 < r1 && r1 <= rows && 0 <= c0 && c0 < c1 && c1 <= cols,
              "slice: range [", r0, ",", r1, ")x[", c0, ",", c1,
              ") invalid for ", ShapeStr(x->shape));
  auto out = MakeOut({r1 - r0, c1 - c0});
  for (int i = r0; i < r1; ++i) {
    std::copy(x->value.begin() + static_cast<size_t>(i) * cols + c0,
              x->value.begin() + static_cast<size_t>(i) * cols + c1,
              out->value.begin() + static_cast<size_t>(i - r0) * (c1 - c0));
  }
  Record(out, "slice", {x}, [x, r0, r1, c0, c1, cols](const Tensor& o) {
    x->EnsureGrad();
    int w = c1 - c0;
    for (int i = r0; i < r1; ++i) {
      for (int j = c0; j < c1; ++j) {
        x->grad[static_cast<size_t>(i) * cols + j] +=
            o.grad[static_cast<size_t>(i - r0) * w + (j - c0)];
      }
    }
  });
  return out;
}

TensorPtr transpose(const TensorPtr& x) {
  CASTK_CHECK(x->shape.size() == 2, "transpose: needs 2-D input, got ",
              ShapeStr(x->shape));
  int rows = x->shape[0], cols = x->shape[1];
  auto out = MakeOut({cols, rows});
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) out->at(j, i) = x->at(i, j);
  }
  Record(out, "transpose", {x}, [x, rows, cols](const Tensor& o) {
    x->EnsureGrad();
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        x->grad[static_cast<size_t>(i) * cols + j] +=
            o.grad[static_cast<size_t>(j) * rows + i];
      }
    }
  });
  return out;
}

TensorPtr conv1d_depthwise(const TensorPtr& x, const TensorPtr& w) {
  CASTK_CHECK(x->shape.size() == 2 && w->shape.size() == 2 && w->shape[1] == x->shape[1],
              "1d-depthwise-conv: shape mismatch ", ShapeStr(x->shape), " vs ",
              ShapeStr(w->shape));
  CASTK_CHECK(w->shape[0] % 2 == 1, "1d-depthwise-conv: kernel must be odd, got ",
              w->shape[0]);
  int t = x->shape[0], d = x->shape[1], k = w->shape[0];
  auto out = MakeOut({t, d});
  kernels::Conv1dDepthwise(x->value.data(), w->value.data(), out->value.data(), t, d, k);
  Record(out, "1d-depthwise-conv", {x, w}, [x, w, t, d, k](const Tensor& o) {
    int pad = (k - 1) / 2;
    if (x->requires_grad) x->EnsureGrad();
    if (w->requires_grad) w->EnsureGrad();
    for (int i = 0; i < t; ++i) {
      for (int tap = 0; tap < k; ++tap) {
        int src = i + tap - pad;
        if (src < 0 || src >= t) continue;
        for (int c = 0; c < d; ++c) {
          double g = o.grad[static_cast<size_t>(i) * d + c];
          if (x->requires_grad) {
            x->grad[static_cast<size_t>(src) * d + c] +=
                g * w->value[static_cast<size_t>(tap) * d + c];
          }
          if (w->requires_grad) {
            w->grad[static_cast<size_t>(tap) * d + c] +=
                g * x->value[static_cast<size_t>(src) * d + c];
          }
        }
      }
    }
  });
  return out;
}

TensorPtr conv1d_pointwise(const TensorPtr& x, const TensorPtr& w) {
  CASTK_CHECK(x->shape.size() == 2 && w->shape.size() == 2 && x->shape[1] == w->shape[0],
              "1d-pointwise-conv: shape mismatch ", ShapeStr(x->shape), " vs ",
              ShapeStr(w->shape));
  return matmul(x, w);
}

TensorPtr conv1d_strided(const TensorPtr& x, const TensorPtr& w, int kernel,
                         int stride) {
  CASTK_CHECK(x->shape.size() == 2 && w->shape.size() == 2, "1d-strided-conv: needs 2-D inputs, got ",
              ShapeStr(x->shape), " and ", ShapeStr(w->shape));
  CASTK_CHECK(stride >= 1 && kernel >= 1, "1d-strided-conv: bad kernel/stride ", kernel,
              "/", stride);
  int t_in = x->shape[0], f = x->shape[1];
  CASTK_CHECK(w->shape[0] == kernel * f, "1d-strided-conv: weight rows ", w->shape[0],
              " != kernel*features ", kernel * f);
  int d = w->shape[1];
  int t_out = (t_in + stride - 1) / stride;
  auto out = MakeOut({t_out, d});
  kernels::Conv1dStrided(x->value.data(), w->value.data(), out->value.data(),
                         t_in, f, kernel, d, stride, t_out);
  Record(out, "1d-strided-conv", {x, w},
         [x, w, t_in, f, kernel, stride, d, t_out](const Tensor& o) {
           if (x->requires_grad) x->EnsureGrad();
           if (w->requires_grad) w->EnsureGrad();
           for (int t = 0; t < t_out; ++t) {
             const double* g = o.grad.data() + static_cast<size_t>(t) * d;
             for (int tap = 0; tap < kernel; ++tap) {
               int src = t * stride + tap;
               if (src >= t_in) continue;
               for (int c = 0; c < f; ++c) {
                 size_t wrow = static_cast<size_t>(tap) * f + c;
                 double xv = x->value[static_cast<size_t>(src) * f + c];
                 for (int j = 0; j < d; ++j) {
                   if (w->requires_grad) w->grad[wrow * d + j] += g[j] * xv;
                   if (x->requires_grad) {
                     x->grad[static_cast<size_t>(src) * f + c] +=
                         g[j] * w->value[wrow * d + j];
                   }
                 }
               }
             }
           }
         });
  return out;
}

TensorPtr dropout_apply(const TensorPtr& x, const TensorPtr& mask) {
  CASTK_CHECK(x->shape == mask->shape, "dropout-mask-apply: shape mismatch ",
              ShapeStr(x->shape), " vs ", ShapeStr(mask->shape));
  auto out = MakeOut(x->shape);
  for (size_t i = 0; i < x->size(); ++i) out->value[i] = x->value[i] * mask->value[i];
  Record(out, "dropout-mask-apply", {x, mask}, [x, mask](const Tensor& o) {
    x->EnsureGrad();
    for (size_t i = 0; i < o.size(); ++i) x->grad[i] += o.grad[i] * mask->value[i];
  });
  return out;
}

TensorPtr batchnorm_eval(const TensorPtr& x, const TensorPtr& gamma,
                         const TensorPtr& beta, const std::vector<double>& mean,
                         const std::vector<double>& var, double eps) {
  int rows = x->rows(), n = x->cols();
  CASTK_CHECK(static_cast<int>(gamma->size()) == n && static_cast<int>(beta->size()) == n &&
                  static_cast<int>(mean.size()) == n && static_cast<int>(var.size()) == n,
              "batchnorm-eval: parameter sizes do not match input ", ShapeStr(x->shape));
  auto out = MakeOut(x->shape);
  std::vector<double> istd(n);
  for (int j = 0; j < n; ++j) istd[j] = 1.0 / std::sqrt(var[j] + eps);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < n; ++j) {
      out->at(i, j) = gamma->value[j] * (x->at(i, j) - mean[j]) * istd[j] + beta->value[j];
    }
  }
  Record(out, "batchnorm-eval", {x, gamma, beta},
         [x, gamma, beta, mean, istd, rows, n](const Tensor& o) {
           if (x->requires_grad) x->EnsureGrad();
           if (gamma->requires_grad) gamma->EnsureGrad();
           if (beta->requires_grad) beta->EnsureGrad();
           for (int i = 0; i < rows; ++i) {
             for (int j = 0; j < n; ++j) {
               double g = o.grad[static_cast<size_t>(i) * n + j];
               double xh = (x->at(i, j) - mean[j]) * istd[j];
               if (x->requires_grad) {
                 x->grad[static_cast<size_t>(i) * n + j] += g * gamma->value[j] * istd[j];
               }
               if (gamma->requires_grad) gamma->grad[j] += g * xh;
               if (beta->requires_grad) beta->grad[j] += g;
             }
           }
         });
  return out;
}

TensorPtr batchnorm_train(const TensorPtr& x, const TensorPtr& gamma,
                          const TensorPtr& beta, double eps,
                          std::vector<double>* batch_mean,
                          std::vector<double>* batch_var) {
  int rows = x->rows(), n = x->cols();
  CASTK_CHECK(rows >= 2, "batchnorm-train: needs at least 2 rows, got ", rows);
  CASTK_CHECK(static_cast<int>(gamma->size()) == n && static_cast<int>(beta->size()) == n,
              "batchnorm-train: parameter sizes do not match input ", ShapeStr(x->shape));
  auto mu = std::make_shared<std::vector<double>>(n, 0.0);
  auto istd = std::make_shared<std::vector<double>>(n, 0.0);
  auto xhat = std::make_shared<std::vector<double>>(x->size());
  std::vector<double> var(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double m = 0.0;
    for (int i = 0; i < rows; ++i) m += x->at(i, j);
    m /= rows;
    double v = 0.0;
    for (int i = 0; i < rows; ++i) v += (x->at(i, j) - m) * (x->at(i, j) - m);
    v /= rows;
    (*mu)[j] = m;
    var[j] = v;
    (*istd)[j] = 1.0 / std::sqrt(v + eps);
  }
  if (batch_mean) *batch_mean = *mu;
  if (batch_var) *batch_var = var;
  auto out = MakeOut(x->shape);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < n; ++j) {
      double xh = (x->at(i, j) - (*mu)[j]) * (*istd)[j];
      (*xhat)[static_cast<size_t>(i) * n + j] = xh;
      out->at(i, j) = gamma->value[j] * xh + beta->value[j];
    }
  }
  Record(out, "batchnorm-train", {x, gamma, beta},
         [x, gamma, beta, xhat, istd, rows, n](const Tensor& o) {
           if (x->requires_grad) x->EnsureGrad();
           if (gamma->requires_grad) gamma->EnsureGrad();
           if (beta->requires_grad) beta->EnsureGrad();
           for (int j = 0; j < n; ++j) {
             double mean_dxh = 0.0, mean_dxh_xh = 0.0;
             for (int i = 0; i < rows; ++i) {
               double g = o.grad[static_cast<size_t>(i) * n + j];
               double dxh = g * gamma->value[j];
               double xh = (*xhat)[static_cast<size_t>(i) * n + j];
               mean_dxh += dxh;
               mean_dxh_xh += dxh * xh;
               if (gamma->requires_grad) gamma->grad[j] += g * xh;
               if (beta->requires_grad) beta->grad[j] += g;
             }
             if (!x->requires_grad) continue;
             mean_dxh /= rows;
             mean_dxh_xh /= rows;
             for (int i = 0; i < rows; ++i) {
               double g = o.grad[static_cast<size_t>(i) * n + j];
               double dxh = g * gamma->value[j];
               double xh = (*xhat)[static_cast<size_t>(i) * n + j];
               x->grad[static_cast<size_t>(i) * n + j] +=
                   (*istd)[j] * (dxh - mean_dxh - xh * mean_dxh_xh);
             }
           }
         });
  return out;
}

TensorPtr forward_op(const std::string& kind, const std::vector<TensorPtr>& inputs,
                     const OpAttrs& attrs) {
  auto need = [&](size_t n) {
    CASTK_CHECK(inputs.size() == n, kind, ": expected ", n, " inputs, got ",
                inputs.size());
  };
  if (kind == "matmul") { need(2); return matmul(inputs[0], inputs[1]); }
  if (kind == "add") { need(2); return add(inputs[0], inputs[1]); }
  if (kind == "mul") { need(2); return mul(inputs[0], inputs[1]); }
  if (kind == "scale") { need(1); return scale(inputs[0], attrs.scale); }
  if (kind == "sigmoid") { need(1); return sigmoid(inputs[0]); }
  if (kind == "relu") { need(1); return relu(inputs[0]); }
  if (kind == "prelu-with-slopes") { need(3); return prelu(inputs[0], inputs[1], inputs[2]); }
  if (kind == "softmax") { need(1); return softmax(inputs[0]); }
  if (kind == "log-softmax") { need(1); return log_softmax(inputs[0]); }
  if (kind == "layernorm") { need(3); return layernorm(inputs[0], inputs[1], inputs[2], attrs.eps); }
  if (kind == "concat") { return concat(inputs, attrs.axis < 0 ? 0 : attrs.axis); }
  if (kind == "mean") { need(1); return mean(inputs[0]); }
  if (kind == "sum") { need(1); return sum(inputs[0]); }
  if (kind == "logsumexp") {
    need(1);
    return attrs.axis < 0 ? logsumexp(inputs[0]) : logsumexp_axis(inputs[0], attrs.axis);
  }
  if (kind == "embedding-lookup") {
    need(2);
    std::vector<int> ids(inputs[1]->size());
    for (size_t i = 0; i < ids.size(); ++i) {
      ids[i] = static_cast<int>(std::llround(inputs[1]->value[i]));
    }
    return embedding_lookup(inputs[0], ids);
  }
  if (kind == "slice") { need(1); return slice(inputs[0], attrs.r0, attrs.r1, attrs.c0, attrs.c1); }
  if (kind == "transpose") { need(1); return transpose(inputs[0]); }
  if (kind == "1d-depthwise-conv") { need(2); return conv1d_depthwise(inputs[0], inputs[1]); }
  if (kind == "1d-pointwise-conv") { need(2); return conv1d_pointwise(inputs[0], inputs[1]); }
  if (kind == "1d-strided-conv") {
    need(2);
    return conv1d_strided(inputs[0], inputs[1], attrs.kernel, attrs.stride);
  }
  if (kind == "glu") { need(1); return glu(inputs[0]); }
  if (kind == "swish") { need(1); return swish(inputs[0]); }
  if (kind == "dropout-mask-apply") { need(2); return dropout_apply(inputs[0], inputs[1]); }
  if (kind == "batchnorm-eval") {
    need(3);
    return batchnorm_eval(inputs[0], inputs[1], inputs[2], attrs.mean, attrs.var, attrs.eps);
  }
  if (kind == "batchnorm-train") {
    need(3);
    return batchnorm_train(inputs[0], inputs[1], inputs[2], attrs.eps, nullptr, nullptr);
  }
  if (kind == "log") { need(1); return log(inputs[0]); }
  if (kind == "exp") { need(1); return exp(inputs[0]); }
  if (kind == "softplus") { need(1); return softplus(inputs[0]); }
  throw Error(Str("forward_op: unknown op kind '", kind, "'"));
}

TensorPtr sample_standard_normal(Rng* rng, const std::vector<int>& shape) {
  return Tensor::Randn(shape, rng, 1.0, /*requires_grad=*/false);
}

}  // namespace ad
}  // namespace cast
