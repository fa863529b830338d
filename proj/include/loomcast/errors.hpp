#pragma once

#include <stdexcept>
#include <string>

namespace loomcast {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class MismatchedDeclarations : public Error {
 public:
  using Error::Error;
};

class InvalidStory : public Error {
 public:
  using Error::Error;
};

}  // namespace loomcast
