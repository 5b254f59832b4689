#pragma once

#include <stdexcept>
#include <string>

namespace tokscope {

/// Raised for every data/validation failure in the library (bad input files,
/// contract violations, unachievable training targets). Usage errors at the
/// CLI layer are handled by the argument parser instead.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tokscope
