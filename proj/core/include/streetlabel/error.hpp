#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace streetlabel {

/// Process exit codes used by the CLI. Library errors carry one of these so
/// the tool can map an exception to an exit status without string matching.
enum class ExitCode : int {
  kOk = 0,
  kValidation = 2,
  kMissingInput = 3,
  kDataError = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Bad configuration or arguments, detected before any work starts.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ExitCode::kValidation, what) {}
};

/// A named input artifact does not exist.
class MissingInputError : public Error {
 public:
  explicit MissingInputError(const std::string& what) : Error(ExitCode::kMissingInput, what) {}
};

/// Input exists but its content violates a format or an invariant.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::kDataError, what) {}
};

/// Malformed XML. `byte_offset` points into the (decompressed) input.
class XmlParseError : public DataError {
 public:
  XmlParseError(const std::string& what, std::size_t byte_offset)
      : DataError(what + " at byte " + std::to_string(byte_offset)), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

/// Malformed line-oriented record. `line` is 1-based.
class RecordError : public DataError {
 public:
  RecordError(const std::string& source, std::size_t line, const std::string& what)
      : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace streetlabel
