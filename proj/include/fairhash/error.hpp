#pragma once

#include <stdexcept>
#include <string>

namespace fairhash {

/// Bad argument to a library call (sizes, ranges, malformed parameters).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An algorithm was asked to run on an input it does not support.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedDimension : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class UnsupportedGroupCount : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// Ingestion and file-format failures.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, long row) : DataError(what), row_(row) {}
  long row() const noexcept { return row_; }

 private:
  long row_;
};

class IntegrityError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace fairhash
