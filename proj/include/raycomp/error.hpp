#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace raycomp {

enum class ErrorKind {
  DegenerateRay,
  ShapeMismatch,
  NegativeOffset,
  EmptyCloud,
  EmptyInput,
  InsufficientPoints,
  CameraInside,
  DegenerateScan,
  ParseError,
  UnsupportedFormat,
  DatasetEmpty,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace raycomp
