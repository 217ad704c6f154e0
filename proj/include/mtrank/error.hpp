#ifndef MTRANK_ERROR_HPP
#define MTRANK_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mtrank {

// Malformed, missing or inconsistent input data (files, ids, shapes of loaded data).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation produced or received a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mtrank

#endif  // MTRANK_ERROR_HPP
