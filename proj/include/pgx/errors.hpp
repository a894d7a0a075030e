#pragma once

#include <stdexcept>
#include <string>

namespace pgx {

// Raised when an iterate, state or gradient becomes non-finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long index)
      : std::runtime_error(what + " (at index " + std::to_string(index) + ")"), index_(index) {}
  long index() const { return index_; }

 private:
  long index_;
};

}  // namespace pgx
