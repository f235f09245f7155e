#pragma once

#include <stdexcept>
#include <string>

namespace crashlens {

/// Broad failure category; the CLI maps it to a process exit code.
enum class ErrorKind {
  kInput = 1,     // unreadable or invalid input data
  kConfig = 2,    // bad configuration or usage
  kInternal = 3,  // invariant violation
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

#define CRASHLENS_DEFINE_ERROR(Name, Kind)                     \
  class Name : public Error {                                  \
   public:                                                     \
    explicit Name(const std::string& what) : Error(Kind, what) {} \
  }

CRASHLENS_DEFINE_ERROR(MalformedTrace, ErrorKind::kInput);
CRASHLENS_DEFINE_ERROR(IoFailure, ErrorKind::kInput);
CRASHLENS_DEFINE_ERROR(FormatFailure, ErrorKind::kInput);
CRASHLENS_DEFINE_ERROR(DuplicateId, ErrorKind::kInput);
CRASHLENS_DEFINE_ERROR(MissingRanking, ErrorKind::kInput);
CRASHLENS_DEFINE_ERROR(EmptyTaskSet, ErrorKind::kInput);
CRASHLENS_DEFINE_ERROR(UnknownGroup, ErrorKind::kInput);
CRASHLENS_DEFINE_ERROR(FileUnseen, ErrorKind::kInput);
CRASHLENS_DEFINE_ERROR(NoCandidates, ErrorKind::kInput);
CRASHLENS_DEFINE_ERROR(InvalidLevel, ErrorKind::kConfig);
CRASHLENS_DEFINE_ERROR(ConfigError, ErrorKind::kConfig);
CRASHLENS_DEFINE_ERROR(InvariantViolation, ErrorKind::kInternal);

#undef CRASHLENS_DEFINE_ERROR

}  // namespace crashlens
