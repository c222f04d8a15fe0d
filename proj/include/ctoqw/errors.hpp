// Copyright 2026 The ctoqw Authors
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

namespace ctoqw {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Process exit status the CLI maps this error to.
  [[nodiscard]] virtual int exit_code() const { return 1; }
};

/// Malformed input document.
class ParseError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] int exit_code() const override { return 1; }
};

/// Model or state violates a structural invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] int exit_code() const override { return 2; }
};

/// An iterative computation ran out of budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] int exit_code() const override { return 3; }
};

/// Operation called outside its domain (non-escaping vertex, reducible walk, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] int exit_code() const override { return 4; }
};

}  // namespace ctoqw
