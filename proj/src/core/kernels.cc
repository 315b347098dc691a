// core/kernels.cc

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

#include "core/kernels.h"

#include <algorithm>
#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cast {
namespace kernels {

namespace {
std::atomic<int> g_num_threads{1};

// Parallelizing tiny matrices costs more than it saves.
constexpr long kParallelMinWork = 16 * 1024;

inline bool UseParallel(long work) {
  return g_num_threads.load(std::memory_order_relaxed) > 1 &&
         work >= kParallelMinWork;
}
}  // namespace

void SetNumThreads(int n) {
  g_num_threads.store(std::max(1, n), std::memory_order_relaxed);
#ifdef _OPENMP
  omp_set_num_threads(std::max(1, n));
#endif
}

int GetNumThreads() { return g_num_threads.load(std::memory_order_relaxed); }

namespace ref {

void MatMul(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<size_t>(i) * n;
    const double* ai = a + static_cast<size_t>(i) * k;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    for (int p = 0; p < k; ++p) {
      double aip = ai[p];
      const double* bp = b + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void MatMulNT(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<size_t>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
}

void MatMulTN(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) {
        acc += a[static_cast<size_t>(p) * m + i] * b[static_cast<size_t>(p) * n + j];
      }
      ci[j] = acc;
    }
  }
}

void Conv1dStrided(const double* x, const double* w, double* out,
                   int t_in, int f, int k, int d, int stride, int t_out) {
  for (int t = 0; t < t_out; ++t) {
    double* ot = out + static_cast<size_t>(t) * d;
    for (int j = 0; j < d; ++j) ot[j] = 0.0;
    for (int tap = 0; tap < k; ++tap) {
      int src = t * stride + tap;
      if (src >= t_in) continue;
      const double* xs = x + static_cast<size_t>(src) * f;
      const double* wt = w + static_cast<size_t>(tap) * f * d;
      for (int c = 0; c < f; ++c) {
        double xv = xs[c];
        const double* wc = wt + static_cast<size_t>(c) * d;
        for (int j = 0; j < d; ++j) ot[j] += xv * wc[j];
      }
    }
  }
}

void Conv1dDepthwise(const double* x, const double* w, double* out,
                     int t, int d, int k) {
  int pad = (k - 1) / 2;
  for (int i = 0; i < t; ++i) {
    double* oi = out + static_cast<size_t>(i) * d;
    for (int c = 0; c < d; ++c) oi[c] = 0.0;
    for (int tap = 0; tap < k; ++tap) {
      int src = i + tap - pad;
      if (src < 0 || src >= t) continue;
      const double* xs = x + static_cast<size_t>(src) * d;
      const double* wt = w + static_cast<size_t>(tap) * d;
      for (int c = 0; c < d; ++c) oi[c] += wt[c] * xs[c];
    }
  }
}

}  // namespace ref

void MatMul(const double* a, const double* b, double* c, int m, int k, int n) {
  if (!UseParallel(static_cast<long>(m) * k * n)) {
    ref::MatMul(a, b, c, m, k, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    ref::MatMul(a + static_cast<size_t>(i) * k, b,
                c + static_cast<size_t>(i) * n, 1, k, n);
  }
}

void MatMulNT(const double* a, const double* b, double* c, int m, int k, int n) {
  if (!UseParallel(static_cast<long>(m) * k * n)) {
    ref::MatMulNT(a, b, c, m, k, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    ref::MatMulNT(a + static_cast<size_t>(i) * k, b,
                  c + static_cast<size_t>(i) * n, 1, k, n);
  }
}

void MatMulTN(const double* a, const double* b, double* c, int m, int k, int n) {
  if (!UseParallel(static_cast<long>(m) * k * n)) {
    ref::MatMulTN(a, b, c, m, k, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) {
        acc += a[static_cast<size_t>(p) * m + i] * b[static_cast<size_t>(p) * n + j];
      }
      ci[j] = acc;
    }
  }
}

void Conv1dStrided(const double* x, const double* w, double* out,
                   int t_in, int f, int k, int d, int stride, int t_out) {
  long work = static_cast<long>(t_out) * k * f * d;
  if (!UseParallel(work)) {
    ref::Conv1dStrided(x, w, out, t_in, f, k, d, stride, t_out);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int t = 0; t < t_out; ++t) {
    double* ot = out + static_cast<size_t>(t) * d;
    for (int j = 0; j < d; ++j) ot[j] = 0.0;
    for (int tap = 0; tap < k; ++tap) {
      int src = t * stride + tap;
      if (src >= t_in) continue;
      const double* xs = x + static_cast<size_t>(src) * f;
      const double* wt = w + static_cast<size_t>(tap) * f * d;
      for (int c = 0; c < f; ++c) {
        double xv = xs[c];
        const double* wc = wt + static_cast<size_t>(c) * d;
        for (int j = 0; j < d; ++j) ot[j] += xv * wc[j];
      }
    }
  }
}

void Conv1dDepthwise(const double* x, const double* w, double* out,
                     int t, int d, int k) {
  long work = static_cast<long>(t) * d * k;
  if (!UseParallel(work)) {
    ref::Conv1dDepthwise(x, w, out, t, d, k);
    return;
  }
  int pad = (k - 1) / 2;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < t; ++i) {
    double* oi = out + static_cast<size_t>(i) * d;
    for (int c = 0; c < d; ++c) oi[c] = 0.0;
    for (int tap = 0; tap < k; ++tap) {
      int src = i + tap - pad;
      if (src < 0 || src >= t) continue;
      const double* xs = x + static_cast<size_t>(src) * d;
      const double* wt = w + static_cast<size_t>(tap) * d;
      for (int c = 0; c < d; ++c) oi[c] += wt[c] * xs[c];
    }
  }
}

}  // namespace kernels
}  // namespace cast
