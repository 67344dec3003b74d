#pragma once

#include <stdexcept>
#include <string>

namespace intervalq {

// Violated precondition or mathematical invariant (CLI exit code 2).
class invariant_error : public std::runtime_error {
public:
  explicit invariant_error(const std::string& what) : std::runtime_error(what) {}
};

// File or parse failure on external input/output (CLI exit code 3).
class io_error : public std::runtime_error {
public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace intervalq
