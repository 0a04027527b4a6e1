/* Copyright 2026 The HoiPrime Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <stdexcept>
#include <string>

namespace hoiprime {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents that do not fit an operator's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid scalar argument (stride 0, target outside {0,1}, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Operation invoked in the wrong lifecycle state (e.g. a consumed tape).
class StateError : public Error {
 public:
  using Error::Error;
};

// Unsatisfiable combinatorial constraint (zero-shot split coverage).
class ConstraintError : public Error {
 public:
  using Error::Error;
};

// Malformed file or record.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace hoiprime
