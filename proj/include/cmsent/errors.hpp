#pragma once

#include <stdexcept>
#include <string>

namespace cmsent {

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input content is malformed: bad TSV lines, invalid UTF-8, corrupt or
/// incompatible model artifacts.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A function argument or configuration value violates its contract.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Optimization produced a non-finite loss or parameter value.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cmsent
