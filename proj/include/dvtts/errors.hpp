// Copyright 2026 The dvtts Authors
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

namespace dvtts {

// Base for every error raised by the library. Callers that only need to
// report a failure can catch this; tests match the concrete subclasses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes that do not agree for the requested operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced or consumed by a numeric routine.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A softmax row with every entry masked out.
class DegenerateRowError : public Error {
 public:
  using Error::Error;
};

// Malformed on-disk data (WAV, stats, checkpoint, embedding, manifest).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Invalid or mismatched configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Argument outside its documented domain.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Monotonic alignment with fewer frames than phonemes.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Instance too large for an exhaustive routine.
class SizeError : public Error {
 public:
  using Error::Error;
};

// No reference material unrelated to the target utterance.
class ReferenceUnavailableError : public Error {
 public:
  using Error::Error;
};

// Training target that cannot be used (e.g. a zero duration).
class InvalidTargetError : public Error {
 public:
  using Error::Error;
};

// Audio shorter than one analysis window.
class TooShortError : public Error {
 public:
  using Error::Error;
};

}  // namespace dvtts
