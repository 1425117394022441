// xva/error.hpp
//
// Copyright 2026 The xva Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef XVA_ERROR_HPP_
#define XVA_ERROR_HPP_

#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>

namespace xva {

// Every recoverable failure (parse error, contract violation, I/O) throws
// xva::Error with a preformatted message; messages carry line numbers or
// offending ids where the caller needs them.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

namespace internal {

inline void format_into(std::ostringstream&) {}

template <typename T, typename... Rest>
void format_into(std::ostringstream& os, const T& value, const Rest&... rest) {
  os << value;
  format_into(os, rest...);
}

inline std::mutex& warn_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace internal

template <typename... Args>
[[noreturn]] void raise(const Args&... args) {
  std::ostringstream os;
  internal::format_into(os, args...);
  throw Error(os.str());
}

template <typename... Args>
void require(bool condition, const Args&... args) {
  if (!condition) raise(args...);
}

// Non-fatal diagnostics (degenerate pools, shrunk windows) go to stderr.
template <typename... Args>
void warn(const Args&... args) {
  std::ostringstream os;
  internal::format_into(os, args...);
  std::lock_guard<std::mutex> lock(internal::warn_mutex());
  std::cerr << "xva warning: " << os.str() << "\n";
}

}  // namespace xva

#endif  // XVA_ERROR_HPP_
