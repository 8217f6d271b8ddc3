#pragma once

#include <stdexcept>
#include <string>

namespace arealmix {

// Malformed or inconsistent user input (files, flags, configs).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The graph Laplacian has more than one null direction.
class DisconnectedGraphError : public InputError {
 public:
  using InputError::InputError;
};

// The sampler could not find a finite starting point or otherwise failed.
class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace arealmix
