#pragma once

#include <stdexcept>
#include <string>

namespace quafl {

enum class Errc {
  invalid_argument = 1,
  parse = 2,
  decode_failure = 3,
  io = 4,
  internal = 5,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace quafl
