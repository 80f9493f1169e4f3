#pragma once

#include <stdexcept>
#include <string>

namespace pathosr {

// Exception families map onto the CLI exit codes (1 usage, 2 data, 3 numerical).

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pathosr
