#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace ares {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Misuse of an API contract (stale caches, mismatched shapes between
/// a network and its gradient tape).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Not enough candidates fall below the likelihood threshold.
class SynthesisUnderflow : public Error {
 public:
  SynthesisUnderflow(const std::string& what, std::size_t deficit)
      : Error(what), deficit_(deficit) {}
  std::size_t deficit() const noexcept { return deficit_; }

 private:
  std::size_t deficit_;
};

/// Training produced a non-finite loss. Carries the last good checkpoint
/// path (empty when no checkpoint directory was configured).
class DivergenceAbort : public Error {
 public:
  DivergenceAbort(const std::string& what, std::string checkpoint)
      : Error(what), checkpoint_(std::move(checkpoint)) {}
  const std::string& checkpoint_path() const noexcept { return checkpoint_; }

 private:
  std::string checkpoint_;
};

}  // namespace ares
