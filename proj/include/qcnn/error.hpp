#pragma once

#include <stdexcept>
#include <string>

namespace qcnn {

/// Tensor shapes or layer descriptors that do not fit together.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input values outside the documented domain (e.g. pixels outside [0,1]).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A function argument that breaks a stated precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed files: checkpoints, dataset records, images.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qcnn
