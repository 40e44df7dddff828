#pragma once

#include <stdexcept>
#include <string>

namespace dmf {

/// Bad caller input: violated preconditions, out-of-range labels, empty sets.
/// The CLI maps every InputError subclass to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDepthError : public InputError {
 public:
  using InputError::InputError;
};

class OutOfBoundsError : public InputError {
 public:
  using InputError::InputError;
};

/// Row/column/channel counts that do not line up.
class DimensionError : public InputError {
 public:
  using InputError::InputError;
};

/// Malformed binary or text payload (bad magic, truncation, bad header).
class FormatError : public InputError {
 public:
  using InputError::InputError;
};

/// Missing or unreadable file; the message always names the path.
class LoadError : public InputError {
 public:
  using InputError::InputError;
};

/// Content parsed fine but fails a domain check (e.g. non-orthonormal pose).
class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

/// Synthetic-scene or pipeline configuration that cannot be honoured.
class SpecError : public InputError {
 public:
  using InputError::InputError;
};

/// Failure writing output; not an input problem.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dmf
