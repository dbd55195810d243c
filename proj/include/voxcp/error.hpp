/*
 * Copyright 2026 The voxcp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef VOXCP_ERROR_HPP_
#define VOXCP_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace voxcp {

// Every error raised by the library derives from Error so callers can catch
// the whole family at once. The CLI maps ConfigError to exit status 2 and the
// data-side errors to exit status 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (sigma <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// An object would violate its type invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Container magic, version or header is not understood.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Payload shorter or longer than the header declares.
class TruncationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Invalid user configuration. `field()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Scene templates cannot be placed inside the requested geometry.
class GenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace voxcp

#endif  // VOXCP_ERROR_HPP_
