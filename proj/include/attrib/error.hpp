/*
 * Copyright 2026 The attrib-audit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef ATTRIB_ERROR_HPP_
#define ATTRIB_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace attrib {

// Base of every error raised by the library. The CLI maps the concrete type
// onto its exit code.
class AuditError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: dimension mismatch, malformed file, invalid configuration.
class InvalidArgument : public AuditError {
 public:
  using AuditError::AuditError;
};

class ParseError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// The input breaks a hypothesis that the forge or an estimator
// relies on (baseline support, moment condition, ...). `assumption()`
// names the violated hypothesis.
class AssumptionViolated : public AuditError {
 public:
  AssumptionViolated(std::string assumption, const std::string& what)
      : AuditError(assumption + " violated: " + what),
        assumption_(std::move(assumption)) {}

  const std::string& assumption() const { return assumption_; }

 private:
  std::string assumption_;
};

// Local behaviour that cannot anchor a forged model (non-finite values at the
// neighbourhood endpoints).
class DegenerateBehaviour : public AuditError {
 public:
  using AuditError::AuditError;
};

class TrainingDiverged : public AuditError {
 public:
  using AuditError::AuditError;
};

}  // namespace attrib

#endif  // ATTRIB_ERROR_HPP_
