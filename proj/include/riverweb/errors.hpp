#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace riverweb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of a closed-form function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// No open site was found within the configured search radius.
class SearchCapExceeded : public Error {
 public:
  explicit SearchCapExceeded(std::int64_t cap)
      : Error("no open site within search cap " + std::to_string(cap)), cap_(cap) {}
  std::int64_t cap() const noexcept { return cap_; }

 private:
  std::int64_t cap_;
};

/// The forward map was applied to a closed site.
class NotOpen : public Error {
 public:
  using Error::Error;
};

/// A cluster exploration reached its generation cap (right-censored sample).
class CapExceeded : public Error {
 public:
  explicit CapExceeded(std::int64_t cap)
      : Error("cluster length exceeds cap " + std::to_string(cap)), cap_(cap) {}
  std::int64_t cap() const noexcept { return cap_; }

 private:
  std::int64_t cap_;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidDualSite : public Error {
 public:
  using Error::Error;
};

class WalkTooShort : public Error {
 public:
  using Error::Error;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

class TableMissing : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration; the CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace riverweb
