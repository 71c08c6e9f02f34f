// Copyright 2026 The wordlens Authors
// SPDX-License-Identifier: Apache-2.0
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

#ifndef WORDLENS_ERROR_H_
#define WORDLENS_ERROR_H_

#include <stdexcept>
#include <string>

namespace wordlens {

// Base of every error the library throws. The CLI maps IoError to exit code 2
// and every other Error to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input file or serialized payload.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a documented invariant or precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A byte in the vocabulary has no token (neither direct nor fallback).
class CoverageError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Canonical and character tokenizations disagree on a boundary.
class AlignmentError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Inconsistent intervention / mask / evaluation settings.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace wordlens

#endif  // WORDLENS_ERROR_H_
