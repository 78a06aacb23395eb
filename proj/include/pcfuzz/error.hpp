#pragma once

#include <stdexcept>
#include <string>

namespace pcfuzz {

// Error classes map onto the CLI exit codes.
enum class ErrorClass {
  kUsage = 1,
  kInput = 2,
  kCapacity = 3,
  kNumeric = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what)
      : std::runtime_error(what), class_(cls) {}

  ErrorClass error_class() const { return class_; }
  int exit_code() const { return static_cast<int>(class_); }

 private:
  ErrorClass class_;
};

// Bad arguments or violated preconditions of an API call.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what)
      : Error(ErrorClass::kUsage, what) {}
};

// Malformed or inconsistent input data (grammar text, files, evidence).
class InputError : public Error {
 public:
  explicit InputError(const std::string& what)
      : Error(ErrorClass::kInput, what) {}
};

// A configured size bound was exceeded.
class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& what)
      : Error(ErrorClass::kCapacity, what) {}
};

// Zero-probability conditions, exhausted sampling budgets and similar.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorClass::kNumeric, what) {}
};

}  // namespace pcfuzz
