#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pedsim {

// Base for every recoverable failure raised by the workbench.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition broken by the caller (programming error, not bad data).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error(message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed document whose shape is wrong (e.g. criteria count != 5).
class StructureError : public ParseError {
 public:
  using ParseError::ParseError;
};

// Oracle reply that does not follow the labeled-line reply grammar.
class FormatError : public ParseError {
 public:
  using ParseError::ParseError;
};

class SchemaError : public ParseError {
 public:
  using ParseError::ParseError;
};

class DataError : public Error {
 public:
  using Error::Error;
};

// Aggregates every problem found while loading a clip tree.
class ManifestError : public Error {
 public:
  explicit ManifestError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Network-level or non-success HTTP failure; callers may retry.
class TransportError : public Error {
 public:
  using Error::Error;
};

class ExtractionError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class TrialError : public Error {
 public:
  using Error::Error;
};

class DesignError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace pedsim
