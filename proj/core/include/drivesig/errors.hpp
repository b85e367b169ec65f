#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace drivesig {

// Root of everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A public numeric operation produced NaN or Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

enum class DataErrorKind {
  kMissingFile,
  kMissingColumn,
  kNoUsableRows,
  kTooFewDrivers,
  kDriverTooShort,
  kEmptySubset,
  kInvalidArgument,
  kIo,
};

class DataError : public Error {
 public:
  DataError(DataErrorKind kind, const std::string& what)
      : Error(what), kind_(kind) {}
  DataErrorKind kind() const noexcept { return kind_; }

 private:
  DataErrorKind kind_;
};

enum class TrainingErrorKind { kEmptySet, kDivergence, kInvalidConfig };

class TrainingError : public Error {
 public:
  TrainingError(TrainingErrorKind kind, const std::string& what,
                std::size_t epoch = 0)
      : Error(what), kind_(kind), epoch_(epoch) {}
  TrainingErrorKind kind() const noexcept { return kind_; }
  // Epoch (1-based) where divergence was detected; 0 when not applicable.
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  TrainingErrorKind kind_;
  std::size_t epoch_;
};

// Model container problems. Version and corruption are distinct types so
// callers can tell a newer file from a damaged one.
class ModelFileError : public Error {
 public:
  using Error::Error;
};

class ModelVersionError : public ModelFileError {
 public:
  using ModelFileError::ModelFileError;
};

class ModelCorruptError : public ModelFileError {
 public:
  using ModelFileError::ModelFileError;
};

}  // namespace drivesig
