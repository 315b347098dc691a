// tools/bench_kernels.cc

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

// Times the serial reference kernels against the OpenMP versions.
// Usage: bench_kernels [max_threads]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <vector>

#include "core/kernels.h"
#include "core/rng.h"

using namespace cast;

namespace {

double TimeIt(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count() / reps;
}

std::vector<double> Rand(size_t n, Rng* rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = -1.0 + 2.0 * rng->Uniform();
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  int max_threads = argc > 1 ? std::atoi(argv[1]) : 4;
  Rng rng(1);

  std::printf("%-22s %8s %10s %10s %8s\n", "kernel", "size", "serial_ms",
              "openmp_ms", "speedup");

  for (int n : {64, 128, 256, 512}) {
    auto a = Rand(static_cast<size_t>(n) * n, &rng);
    auto b = Rand(static_cast<size_t>(n) * n, &rng);
    std::vector<double> c(static_cast<size_t>(n) * n);
    int reps = n <= 128 ? 50 : 10;

    double t_serial = TimeIt(
        [&] { kernels::ref::MatMul(a.data(), b.data(), c.data(), n, n, n); }, reps);

    kernels::SetNumThreads(max_threads);
    double t_par = TimeIt(
        [&] { kernels::MatMul(a.data(), b.data(), c.data(), n, n, n); }, reps);
    kernels::SetNumThreads(1);

    std::printf("%-22s %8d %10.3f %10.3f %8.2f\n", "matmul", n, t_serial * 1e3,
                t_par * 1e3, t_serial / t_par);
  }

  for (int t : {128, 512}) {
    int f = 80, k = 3, d = 256, stride = 2;
    int t_out = (t + stride - 1) / stride;
    auto x = Rand(static_cast<size_t>(t) * f, &rng);
    auto w = Rand(static_cast<size_t>(k) * f * d, &rng);
    std::vector<double> out(static_cast<size_t>(t_out) * d);

    double t_serial = TimeIt(
        [&] {
          kernels::ref::Conv1dStrided(x.data(), w.data(), out.data(), t, f, k, d,
                                      stride, t_out);
        },
        20);
    kernels::SetNumThreads(max_threads);
    double t_par = TimeIt(
        [&] {
          kernels::Conv1dStrided(x.data(), w.data(), out.data(), t, f, k, d,
                                 stride, t_out);
        },
        20);
    kernels::SetNumThreads(1);

    std::printf("%-22s %8d %10.3f %10.3f %8.2f\n", "conv1d_strided", t,
                t_serial * 1e3, t_par * 1e3, t_serial / t_par);
  }
  return 0;
}
