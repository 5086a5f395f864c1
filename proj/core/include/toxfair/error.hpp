#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace toxfair {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration is invalid or references missing inputs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data could not be read or violates a record invariant.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A required column is absent from a CSV header.
class SchemaError : public DataError {
 public:
  explicit SchemaError(const std::string& column)
      : DataError("missing required column '" + column + "'"), column_(column) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

/// A data row failed to parse or validate. Row numbers are 1-based and count
/// data rows (the header is row 0).
class RowError : public DataError {
 public:
  RowError(std::size_t row, const std::string& what)
      : DataError("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Operand shapes are incompatible.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A computation was asked of inputs that do not support it
/// (single-class AUC, empty split, empty template space, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t epoch, std::size_t batch)
      : Error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
              std::to_string(batch)),
        epoch_(epoch),
        batch_(batch) {}
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

}  // namespace toxfair
