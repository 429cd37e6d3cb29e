#pragma once

#include <stdexcept>
#include <string>

namespace genjscc {

enum class ErrorKind {
  kParameter,      // argument outside its documented domain
  kConfiguration,  // scenario / codec configuration problem
  kIo,             // file could not be opened, read or written
  kFormat,         // malformed file or stream layout
  kModelMismatch,  // decoder model differs from encoder model
  kCorrupt,        // payload does not decode (truncation, bit errors)
  kRange,          // index outside a table
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace genjscc
