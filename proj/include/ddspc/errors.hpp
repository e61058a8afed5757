#pragma once

#include <stdexcept>
#include <string>

namespace ddspc {

// Shape or argument problems; programming errors on the caller side.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A data or design assumption does not hold (rank, PE, Schur, PSD, ...).
class AssumptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No optimal solution exists where one is required.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace ddspc
