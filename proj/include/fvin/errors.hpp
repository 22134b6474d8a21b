// Copyright 2026 The fvin Authors
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

namespace fvin {

// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input validation failures: bad matrices, malformed configs, schema mismatches.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Matrix passed to vee() or a Rotation constructor is not what it claims to be.
class NonSkewInput : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class NotARotation : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// Numerical failures at runtime (exit code 2 territory for the CLI).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NewtonDiverged : public NumericalError {
 public:
  NewtonDiverged(const std::string& what, double residual, int iters)
      : NumericalError(what), residual(residual), iters(iters) {}
  double residual;
  int iters;
};

class NonFiniteValue : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ControllerDiverged : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace fvin
