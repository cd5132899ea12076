#pragma once

#include <stdexcept>
#include <string>

namespace dse2qa {

// Process exit codes used by the command line tool.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 1,        // bad flags or config values
  kInput = 2,        // missing or malformed input files
  kValidation = 3,   // data violates a domain invariant
  kTraining = 4,     // non-finite loss or other training abort
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, ExitCode code)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(what, ExitCode::kValidation) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(what, ExitCode::kInput) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(what, ExitCode::kUsage) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what)
      : Error(what, ExitCode::kTraining) {}
};

}  // namespace dse2qa
