#ifndef ADVSHAPE_ERRORS_HPP
#define ADVSHAPE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace advshape {

/// Caller misuse: mismatched dimensions, wrong domain tags, invalid labels,
/// out-of-range parameters.
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Filesystem-level failure: missing input file, unwritable output path.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A file exists but its contents cannot be parsed (malformed PNG, bad JSON).
class DecodeError : public std::runtime_error {
 public:
  explicit DecodeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Well-formed input in a variant this toolkit does not handle (e.g. 16-bit PNG).
class UnsupportedFormatError : public std::runtime_error {
 public:
  explicit UnsupportedFormatError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Model file is truncated or carries the wrong magic.
class ModelFormatError : public std::runtime_error {
 public:
  explicit ModelFormatError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Model file has a valid header but an unknown format version.
class ModelVersionError : public std::runtime_error {
 public:
  explicit ModelVersionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An iterative attack hit a zero gradient and cannot make progress.
class DegenerateGradientError : public std::runtime_error {
 public:
  explicit DegenerateGradientError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite value encountered in an optimization or training loop.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace advshape

#endif  // ADVSHAPE_ERRORS_HPP
