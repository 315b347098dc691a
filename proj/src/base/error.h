// base/error.h

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

#ifndef CASTKIT_BASE_ERROR_H_
#define CASTKIT_BASE_ERROR_H_

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cast {

// Invalid inputs, malformed files, contract violations.  The CLI maps this
// to exit code 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Divergence, NaN losses and the like.  The CLI maps this to exit code 3.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

namespace detail {
inline void StrAppend(std::ostringstream&) {}
template <typename T, typename... Rest>
void StrAppend(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  StrAppend(os, rest...);
}
}  // namespace detail

template <typename... Args>
std::string Str(const Args&... args) {
  std::ostringstream os;
  detail::StrAppend(os, args...);
  return os.str();
}

inline std::string ShapeStr(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << " x ";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

#define CASTK_CHECK(cond, ...)                      \
  do {                                              \
    if (!(cond)) throw ::cast::Error(::cast::Str(__VA_ARGS__)); \
  } while (0)

#define CASTK_CHECK_SHAPE(cond, ...)                     \
  do {                                                   \
    if (!(cond)) throw ::cast::ShapeError(::cast::Str(__VA_ARGS__)); \
  } while (0)

}  // namespace cast

#endif  // CASTKIT_BASE_ERROR_H_
