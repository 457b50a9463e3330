#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rtsec {

// One tick is one scheduler quantum. All simulated time is integral.
using Tick = std::int64_t;
using JobId = std::int64_t;
using TaskId = int;

// Runtime failure inside a module (bad arguments, protocol misuse, search
// that found nothing). The CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input that violates a documented invariant (task set, scenario file).
// The CLI maps it to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace rtsec
