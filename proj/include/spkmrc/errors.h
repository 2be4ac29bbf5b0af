// Copyright 2026 The spkmrc Authors.
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

#ifndef SPKMRC_ERRORS_H_
#define SPKMRC_ERRORS_H_

#include <stdexcept>
#include <string>

namespace spkmrc {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Data errors (CLI exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

class AlignmentError : public DataError {
 public:
  using DataError::DataError;
};

class QuestionTooLong : public DataError {
 public:
  using DataError::DataError;
};

class MissingSep : public DataError {
 public:
  using DataError::DataError;
};

class ConfigError : public DataError {
 public:
  using DataError::DataError;
};

class CheckpointError : public DataError {
 public:
  using DataError::DataError;
};

// Numeric and structural errors (CLI exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public NumericError {
 public:
  using NumericError::NumericError;
};

class IndexError : public NumericError {
 public:
  using NumericError::NumericError;
};

class NotScalar : public NumericError {
 public:
  using NumericError::NumericError;
};

class NonFinite : public NumericError {
 public:
  using NumericError::NumericError;
};

class ConfigMismatch : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace spkmrc

#endif  // SPKMRC_ERRORS_H_
