// core/kernels.h

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

#ifndef CASTKIT_CORE_KERNELS_H_
#define CASTKIT_CORE_KERNELS_H_

#include <cstddef>

namespace cast {
namespace kernels {

// Worker threads used by the OpenMP kernels and by the utterance/speaker
// level parallel loops.  1 (the default) runs everything serially.
void SetNumThreads(int n);
int GetNumThreads();

// Serial reference kernels.  These are the ground truth the parallel
// versions are tested against (see tests/test_kernels.cc) and the baseline
// of tools/bench_kernels.cc.
namespace ref {

// c[m x n] = a[m x k] * b[k x n]
void MatMul(const double* a, const double* b, double* c, int m, int k, int n);
// c[m x n] = a[m x k] * b[n x k]^T
void MatMulNT(const double* a, const double* b, double* c, int m, int k, int n);
// c[m x n] = a[k x m]^T * b[k x n]
void MatMulTN(const double* a, const double* b, double* c, int m, int k, int n);

// Strided full convolution over time.  x[t_in x f], w[(k*f) x d] with taps
// stored tap-major, out[t_out x d]; frames past t_in read as zero.
void Conv1dStrided(const double* x, const double* w, double* out,
                   int t_in, int f, int k, int d, int stride, int t_out);

// Depthwise convolution, same-length output, odd kernel k, zero padding.
// x[t x d], w[k x d], out[t x d].
void Conv1dDepthwise(const double* x, const double* w, double* out,
                     int t, int d, int k);

}  // namespace ref

// Parallel kernels; bit-identical to the ref versions for every thread
// count (each output element is one fixed-order dot product).
void MatMul(const double* a, const double* b, double* c, int m, int k, int n);
void MatMulNT(const double* a, const double* b, double* c, int m, int k, int n);
void MatMulTN(const double* a, const double* b, double* c, int m, int k, int n);
void Conv1dStrided(const double* x, const double* w, double* out,
                   int t_in, int f, int k, int d, int stride, int t_out);
void Conv1dDepthwise(const double* x, const double* w, double* out,
                     int t, int d, int k);

}  // namespace kernels
}  // namespace cast

#endif  // CASTKIT_CORE_KERNELS_H_
