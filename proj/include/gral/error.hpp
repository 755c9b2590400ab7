#pragma once

#include <atomic>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gral {

/// Bad input: malformed files, unknown ids, violated preconditions on
/// caller-supplied data. The CLI maps this to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal invariant was broken. The CLI maps this to exit code 2.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace diag {

inline std::atomic<bool>& verbose_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

inline void set_verbose(bool on) { verbose_flag().store(on); }

inline void warn(std::string_view msg) {
  if (verbose_flag().load()) std::clog << "warning: " << msg << '\n';
}

}  // namespace diag
}  // namespace gral
