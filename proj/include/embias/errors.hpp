#pragma once

#include <stdexcept>
#include <string>

namespace embias {

// Bad input: malformed files, invalid configuration, violated preconditions.
// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A word could not be resolved to a vector.
class OovError : public ValidationError {
 public:
  explicit OovError(const std::string& word)
      : ValidationError("out-of-vocabulary word: " + word), word_(word) {}
  const std::string& word() const { return word_; }

 private:
  std::string word_;
};

// Computation is undefined for the given data (zero variance, empty group...).
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Files that cannot be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace embias
