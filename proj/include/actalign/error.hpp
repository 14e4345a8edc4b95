#pragma once

#include <stdexcept>
#include <string>

namespace actalign {

/// Base class for every failure raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an input file or configuration is malformed or inconsistent.
/// The CLI maps these to exit code 1; every other Error maps to exit code 2.
class ValidationError : public Error {
 public:
  ValidationError(std::string subject, std::string field, const std::string& what)
      : Error(subject + ": " + (field.empty() ? std::string{} : field + ": ") + what),
        subject_(std::move(subject)),
        field_(std::move(field)) {}

  const std::string& subject() const noexcept { return subject_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string subject_;
  std::string field_;
};

}  // namespace actalign
