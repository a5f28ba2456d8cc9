// Copyright 2026 The GDR Lab Authors. All Rights Reserved.
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

namespace gdr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error { public: using Error::Error; };
class DomainError : public Error { public: using Error::Error; };
class IndexError : public Error { public: using Error::Error; };
class RangeError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };
class EmptyInputError : public Error { public: using Error::Error; };
class GenerationError : public Error { public: using Error::Error; };
class ValidationError : public Error { public: using Error::Error; };
class ContractError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

/// Raised when a training loss turns non-finite. `diagnostics` holds a
/// human-readable dump of the step state.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::string diagnostics)
      : Error(what), diagnostics_(std::move(diagnostics)) {}
  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

}  // namespace gdr
