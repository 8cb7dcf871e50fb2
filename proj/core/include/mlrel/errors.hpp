#pragma once

#include <stdexcept>
#include <string>

namespace mlrel {

// Every failure raised by the library derives from Error so callers can map
// the category to an exit status without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Distribution parameters or arguments outside their mathematical domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A cut set or status vector refers to a component that does not exist.
class IndexError : public Error {
 public:
  using Error::Error;
};

// Malformed network: cycles, dangling components, bad terminals.
class StructureError : public Error {
 public:
  using Error::Error;
};

// Combinatorial blow-up past a configured cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// A caller broke a documented precondition (e.g. non-nested levels).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Unreadable or schema-violating input file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace mlrel
