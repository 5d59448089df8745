// Error types shared across the pipeline.
//
// ValidationError covers malformed input (bad formats, out-of-range
// parameters, mismatched models). IoError covers filesystem failures.
// The CLI maps them to exit codes 2 and 1.

#ifndef MASKCUE_ERROR_H_
#define MASKCUE_ERROR_H_

#include <stdexcept>
#include <string>

namespace maskcue {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace maskcue

#endif  // MASKCUE_ERROR_H_
