#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pba {

// Bad invocation or configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data that cannot be processed: payloads, corpora, taxonomies,
// degenerate tables (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoParsableArray : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientNames : public DataError {
 public:
  InsufficientNames(std::size_t requested, std::size_t available)
      : DataError("requested top " + std::to_string(requested) +
                  " names but only " + std::to_string(available) +
                  " distinct names exist"),
        requested_(requested),
        available_(available) {}
  std::size_t requested() const { return requested_; }
  std::size_t available() const { return available_; }

 private:
  std::size_t requested_;
  std::size_t available_;
};

class TaxonomyError : public DataError {
 public:
  enum class Kind { kSyntax, kDuplicateKey, kEmptyCategory, kUnknownAttribute, kBadPolicy };

  TaxonomyError(Kind kind, std::size_t line, const std::string& what)
      : DataError(describe(kind) + " at line " + std::to_string(line) + ": " + what),
        kind_(kind),
        line_(line) {}
  Kind kind() const { return kind_; }
  std::size_t line() const { return line_; }

 private:
  static std::string describe(Kind kind) {
    switch (kind) {
      case Kind::kSyntax: return "syntax error";
      case Kind::kDuplicateKey: return "DuplicateKey";
      case Kind::kEmptyCategory: return "EmptyCategory";
      case Kind::kUnknownAttribute: return "UnknownAttribute";
      case Kind::kBadPolicy: return "invalid policy";
    }
    return "taxonomy error";
  }
  Kind kind_;
  std::size_t line_;
};

class UnmappedTerm : public DataError {
 public:
  using DataError::DataError;
};

class UnknownCategory : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateTable : public DataError {
 public:
  using DataError::DataError;
};

class UnknownLabel : public DataError {
 public:
  using DataError::DataError;
};

class ZeroVariance : public DataError {
 public:
  using DataError::DataError;
};

class InvalidSpec : public DataError {
 public:
  using DataError::DataError;
};

// Provider failures (CLI exit code 3).
class ProviderError : public std::runtime_error {
 public:
  enum class Kind { kTimeout, kHttpStatus, kMalformedResponse, kAuth, kExhausted };

  ProviderError(Kind kind, int status, const std::string& what)
      : std::runtime_error(what), kind_(kind), status_(status) {}
  Kind kind() const { return kind_; }
  int status() const { return status_; }
  bool retryable() const {
    return kind_ == Kind::kTimeout || kind_ == Kind::kMalformedResponse ||
           (kind_ == Kind::kHttpStatus && (status_ == 429 || status_ >= 500));
  }

 private:
  Kind kind_;
  int status_;
};

}  // namespace pba
