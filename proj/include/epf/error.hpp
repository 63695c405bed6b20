#pragma once

#include <stdexcept>
#include <string>

namespace epf {

// Error categories mirrored by the C API status codes.
enum class Errc {
  invalid_argument = 1,
  io = 2,
  parse = 3,
  numeric = 4,
  internal = 5,
};

class Error : public std::runtime_error {
public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

} // namespace epf
