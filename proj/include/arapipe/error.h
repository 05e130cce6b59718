#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace arapipe {

enum class ErrorKind {
  kUsage,      // bad flags or configuration values
  kIo,         // file could not be opened, read or written
  kFormat,     // malformed input data
  kNumeric,    // non-finite values where finite ones are required
  kInvariant,  // internal consistency check failed
};

/// Base exception for everything thrown by the library. The kind maps to a
/// CLI exit status (see ExitCode).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error UsageError(const std::string& msg) { return {ErrorKind::kUsage, msg}; }
inline Error IoError(const std::string& msg) { return {ErrorKind::kIo, msg}; }
inline Error FormatError(const std::string& msg) { return {ErrorKind::kFormat, msg}; }
inline Error NumericError(const std::string& msg) { return {ErrorKind::kNumeric, msg}; }
inline Error InvariantError(const std::string& msg) { return {ErrorKind::kInvariant, msg}; }

/// Format error carrying the byte offset at which decoding failed.
class OffsetError : public Error {
 public:
  OffsetError(const std::string& what, std::uint64_t offset)
      : Error(ErrorKind::kFormat, what + " at byte offset " + std::to_string(offset)),
        offset_(offset) {}

  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

// sysexits.h values
inline int ExitCode(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return 64;
    case ErrorKind::kFormat: return 65;
    case ErrorKind::kIo: return 66;
    case ErrorKind::kNumeric:
    case ErrorKind::kInvariant: return 70;
  }
  return 70;
}

inline const char* ErrorClassName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kInvariant: return "internal";
  }
  return "internal";
}

}  // namespace arapipe
