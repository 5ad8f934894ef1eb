#pragma once

#include <stdexcept>
#include <string>

namespace twqp {

/// Raised for invalid input, malformed files and violated preconditions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace twqp
