#pragma once

#include <stdexcept>
#include <string>

namespace recon {

/// Bad inputs: malformed files, inconsistent labels, violated preconditions.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace recon
