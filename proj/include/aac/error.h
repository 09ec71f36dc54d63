// include/aac/error.h
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace aac {

// Invalid configuration values (frequency ranges, sizes, beam width, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data that violates a precondition (too short, wrong rate, missing token).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shape or axis errors.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf produced by a computation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed files: WAV, GTFM, TENS checkpoints, CSV, JSON.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// JSON that does not parse or lacks required fields.
class JsonError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace aac
