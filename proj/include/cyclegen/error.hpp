#pragma once

#include <stdexcept>
#include <string>

namespace cyclegen {

enum class ErrorKind {
  input,       // malformed or insufficient input data, bad parameters
  validation,  // inputs are well formed but inconsistent with each other
  invariant,   // an internal invariant was violated
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error input_error(const std::string& what) { return {ErrorKind::input, what}; }
inline Error validation_error(const std::string& what) { return {ErrorKind::validation, what}; }
inline Error invariant_error(const std::string& what) { return {ErrorKind::invariant, what}; }

}  // namespace cyclegen
