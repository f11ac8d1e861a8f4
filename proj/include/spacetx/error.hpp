#pragma once

#include <stdexcept>
#include <string>

namespace spacetx {

enum class ErrorKind {
  kInvalidArgument,
  kParse,
  kValidation,
  kNotFound,
  kNumerical,
  kIo,
  kIncomplete,
  kBadMethod,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace spacetx
