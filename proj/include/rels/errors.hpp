// Copyright 2026 The relsdqn Authors.
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

#pragma once

#include <stdexcept>
#include <string>

namespace rels {

// Bad input from the caller: out-of-range arguments, inconsistent shapes,
// malformed files. The CLI maps these to exit status 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A text file failed to parse. Carries the 1-based line number when known.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ValidationError(line == 0 ? what
                                  : what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Binary checkpoint is corrupt, truncated or of an unknown version.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace rels
