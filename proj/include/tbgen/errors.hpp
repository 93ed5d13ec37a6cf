// Copyright 2026 The tbgen Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tbgen {

/// Violated precondition on a numeric argument (non-positive rate, N = 0, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One or more fields of a parameter record failed validation.
class ValidationError : public std::invalid_argument {
 public:
  struct Field {
    std::string name;
    std::string reason;
  };

  explicit ValidationError(std::vector<Field> fields)
      : std::invalid_argument(format(fields)), fields_(std::move(fields)) {}

  const std::vector<Field>& fields() const noexcept { return fields_; }

 private:
  static std::string format(const std::vector<Field>& fields) {
    std::string out = "invalid parameters:";
    for (const auto& f : fields) out += " " + f.name + " (" + f.reason + ");";
    return out;
  }

  std::vector<Field> fields_;
};

/// Malformed text input. `line()` is 1-based, 0 when the error is not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string{}) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Golden-section search could not confirm an interior minimum.
class BracketingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested photon number exceeds the dense density-operator cap.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// A fidelity estimator was given incomplete data.
class EstimatorError : public std::runtime_error {
 public:
  EstimatorError(const std::string& what, std::vector<std::string> missing)
      : std::runtime_error(what + join(missing)), missing_(std::move(missing)) {}

  const std::vector<std::string>& missing() const noexcept { return missing_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? ": " : ", ") + s;
    return out;
  }

  std::vector<std::string> missing_;
};

}  // namespace tbgen
