// tests/test_kernels.cc

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

#include <array>
#include <vector>

#include "core/kernels.h"
#include "core/rng.h"
#include "doctest.h"

using namespace cast;

namespace {

std::vector<double> Rand(size_t n, Rng* rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = -1.0 + 2.0 * rng->Uniform();
  return v;
}

// Transparent triple loop, the oracle for both kernel variants.
std::vector<double> NaiveMatMul(const std::vector<double>& a,
                                const std::vector<double>& b, int m, int k, int n) {
  std::vector<double> c(static_cast<size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      for (int p = 0; p < k; ++p)
        c[i * n + j] += a[i * k + p] * b[p * n + j];
  return c;
}

}  // namespace

TEST_CASE("matmul kernels match a naive triple loop") {
  Rng rng(7);
  std::vector<std::array<int, 3>> cases = {{1, 1, 1}, {3, 4, 5}, {17, 9, 23}, {64, 48, 64}};
  for (auto [m, k, n] : cases) {
    auto a = Rand(static_cast<size_t>(m) * k, &rng);
    auto b = Rand(static_cast<size_t>(k) * n, &rng);
    auto want = NaiveMatMul(a, b, m, k, n);
    std::vector<double> got(static_cast<size_t>(m) * n);
    kernels::ref::MatMul(a.data(), b.data(), got.data(), m, k, n);
    for (size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));

    // NT: c = a * b^T with b stored [n x k]
    std::vector<double> bt(static_cast<size_t>(n) * k);
    for (int p = 0; p < k; ++p)
      for (int j = 0; j < n; ++j) bt[static_cast<size_t>(j) * k + p] = b[static_cast<size_t>(p) * n + j];
    kernels::ref::MatMulNT(a.data(), bt.data(), got.data(), m, k, n);
    for (size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));

    // TN: c = a^T * b with a stored [k x m]
    std::vector<double> at(static_cast<size_t>(k) * m);
    for (int i = 0; i < m; ++i)
      for (int p = 0; p < k; ++p) at[static_cast<size_t>(p) * m + i] = a[static_cast<size_t>(i) * k + p];
    kernels::ref::MatMulTN(at.data(), b.data(), got.data(), m, k, n);
    for (size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  Rng rng(13);
  int m = 70, k = 33, n = 41;  // above the parallel size threshold
  auto a = Rand(static_cast<size_t>(m) * k, &rng);
  auto b = Rand(static_cast<size_t>(k) * n, &rng);
  std::vector<double> serial(static_cast<size_t>(m) * n), parallel(serial.size());
  kernels::ref::MatMul(a.data(), b.data(), serial.data(), m, k, n);
  for (int threads : {1, 2, 4}) {
    kernels::SetNumThreads(threads);
    kernels::MatMul(a.data(), b.data(), parallel.data(), m, k, n);
    for (size_t i = 0; i < serial.size(); ++i) CHECK(parallel[i] == serial[i]);
  }
  kernels::SetNumThreads(1);
}

TEST_CASE("strided conv kernel matches brute force") {
  Rng rng(29);
  int t_in = 11, f = 3, k = 4, d = 5, stride = 2;
  int t_out = (t_in + stride - 1) / stride;
  auto x = Rand(static_cast<size_t>(t_in) * f, &rng);
  auto w = Rand(static_cast<size_t>(k) * f * d, &rng);
  std::vector<double> got(static_cast<size_t>(t_out) * d);
  kernels::ref::Conv1dStrided(x.data(), w.data(), got.data(), t_in, f, k, d, stride, t_out);
  for (int t = 0; t < t_out; ++t) {
    for (int j = 0; j < d; ++j) {
      double want = 0.0;
      for (int tap = 0; tap < k; ++tap) {
        int src = t * stride + tap;
        if (src >= t_in) continue;
        for (int c = 0; c < f; ++c) {
          want += x[static_cast<size_t>(src) * f + c] *
                  w[(static_cast<size_t>(tap) * f + c) * d + j];
        }
      }
      CHECK(got[static_cast<size_t>(t) * d + j] == doctest::Approx(want).epsilon(1e-12));
    }
  }

  // parallel path agrees bit for bit
  std::vector<double> par(got.size());
  kernels::SetNumThreads(4);
  kernels::Conv1dStrided(x.data(), w.data(), par.data(), t_in, f, k, d, stride, t_out);
  kernels::SetNumThreads(1);
  for (size_t i = 0; i < got.size(); ++i) CHECK(par[i] == got[i]);
}

TEST_CASE("depthwise conv kernel matches brute force") {
  Rng rng(31);
  int t = 9, d = 4, k = 5, pad = (k - 1) / 2;
  auto x = Rand(static_cast<size_t>(t) * d, &rng);
  auto w = Rand(static_cast<size_t>(k) * d, &rng);
  std::vector<double> got(static_cast<size_t>(t) * d);
  kernels::ref::Conv1dDepthwise(x.data(), w.data(), got.data(), t, d, k);
  for (int i = 0; i < t; ++i) {
    for (int c = 0; c < d; ++c) {
      double want = 0.0;
      for (int tap = 0; tap < k; ++tap) {
        int src = i + tap - pad;
        if (src < 0 || src >= t) continue;
        want += w[static_cast<size_t>(tap) * d + c] * x[static_cast<size_t>(src) * d + c];
      }
      CHECK(got[static_cast<size_t>(i) * d + c] == doctest::Approx(want).epsilon(1e-12));
    }
  }
}
