// Copyright 2026 The herding authors
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

namespace herding {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A state entry became NaN or infinite during integration (blow-up or bad dt).
class NonFiniteState : public Error {
 public:
  using Error::Error;
};

/// Armijo backtracking exhausted max_backtracks without sufficient decrease.
class LineSearchFailed : public Error {
 public:
  using Error::Error;
};

/// Broyden secant step has (numerically) zero length; the update is undefined.
class DegenerateStep : public Error {
 public:
  using Error::Error;
};

/// The Broyden linear solve failed even after a restart with the identity.
class SingularBroyden : public Error {
 public:
  using Error::Error;
};

/// Two time grids that must coincide do not.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// A configuration file is not syntactically valid.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A configuration value violates a documented constraint; the message names the field.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A file could not be written or read.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace herding
