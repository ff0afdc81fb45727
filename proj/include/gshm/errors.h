//
// Copyright 2026 The GSHM Accounting Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef GSHM_ERRORS_H_
#define GSHM_ERRORS_H_

#include <cmath>
#include <stdexcept>
#include <string>

namespace gshm {

// An argument is outside the documented domain of an operation (NaN inputs,
// negative noise scales, malformed parameter sets, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A computation produced a value that the math says is impossible, e.g. a
// hockey-stick term that is negative beyond rounding. Indicates a bug, not a
// bad input.
class InternalConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Reading or parsing an external file failed. `line()` is 1-based, or 0 when
// the failure is not tied to a line.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " +
                                          what
                                    : what),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

namespace internal {

inline void RequireNotNan(double x, const char* what) {
  if (std::isnan(x)) {
    throw DomainError(std::string(what) + ": NaN argument");
  }
}

}  // namespace internal
}  // namespace gshm

#endif  // GSHM_ERRORS_H_
