#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fpulab {

/// Base class of all library errors. Each subclass maps to a distinct
/// CLI exit code (see tools/fpu_lab.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: invalid flag, config key, or violated parameter invariant.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Chain state inconsistent with its parameters (size mismatch, non-finite entries).
class InvalidStateError : public Error {
 public:
  using Error::Error;
};

/// Mode state whose Hermitian-symmetry defect exceeds tolerance.
class InvalidModeStateError : public Error {
 public:
  using Error::Error;
};

/// Spectrum with no positive entry; the normalized distribution is undefined.
class DegenerateSpectrumError : public Error {
 public:
  using Error::Error;
};

/// Distribution entries negative or not normalized.
class InvalidDistributionError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Integration produced a non-finite component.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& msg, std::int64_t step_index, double time)
      : Error(msg), step_index_(step_index), time_(time) {}

  std::int64_t step_index() const noexcept { return step_index_; }
  double time() const noexcept { return time_; }

 private:
  std::int64_t step_index_;
  double time_;
};

}  // namespace fpulab
