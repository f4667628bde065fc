// Copyright 2026 The mmdlstm Authors.
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

namespace mmdlstm {

/// Broad failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  kConfig = 2,        // inconsistent shapes, malformed architecture files
  kNumeric = 3,       // NaN/Inf produced by an operation
  kInput = 4,         // missing or malformed files, empty audio
  kGraph = 5,         // malformed differentiation graph
  kPrecondition = 6,  // caller broke an operation contract
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::kNumeric, what) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::kInput, what) {}
};

class GraphError : public Error {
 public:
  explicit GraphError(const std::string& what) : Error(ErrorKind::kGraph, what) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what)
      : Error(ErrorKind::kPrecondition, what) {}
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "configuration error";
    case ErrorKind::kNumeric: return "numeric error";
    case ErrorKind::kInput: return "input error";
    case ErrorKind::kGraph: return "graph error";
    case ErrorKind::kPrecondition: return "precondition violation";
  }
  return "error";
}

}  // namespace mmdlstm
