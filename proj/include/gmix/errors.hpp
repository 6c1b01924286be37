#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gmix {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A caller-supplied value violated a precondition (NaN input, K > n, ...).
class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& msg) : Error(msg) {}
};

// An unknown constraint string, family code, or inconsistent flag combination.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// A VarRef was used with a tape it does not belong to.
class TapeMismatch : public Error {
 public:
  explicit TapeMismatch(const std::string& msg) : Error(msg) {}
};

// An elementary operation left its domain or produced a non-finite value.
// `node` is the index the offending node would occupy on its tape;
// `component` is set by model code when the failure is attributable to one
// mixture component.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg, std::size_t node_index = npos)
      : Error(msg), node(node_index) {}

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t node = npos;
  int component = -1;
};

}  // namespace gmix
