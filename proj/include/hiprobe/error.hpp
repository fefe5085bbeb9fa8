#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hiprobe {

// Broad failure classes; the CLI maps these onto process exit codes.
enum class ErrorCategory {
  input,         // unreadable, malformed or inconsistent input files, bad usage
  precondition,  // well-formed input that cannot support the requested computation
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define HIPROBE_DEFINE_ERROR(Name, Category)                           \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(Category, what) {} \
  };

HIPROBE_DEFINE_ERROR(IoError, ErrorCategory::input)
HIPROBE_DEFINE_ERROR(FormatError, ErrorCategory::input)
HIPROBE_DEFINE_ERROR(UsageError, ErrorCategory::input)
HIPROBE_DEFINE_ERROR(DimensionError, ErrorCategory::precondition)
HIPROBE_DEFINE_ERROR(EmptyDatasetError, ErrorCategory::precondition)
HIPROBE_DEFINE_ERROR(InsufficientClassDataError, ErrorCategory::precondition)
HIPROBE_DEFINE_ERROR(SingleClassError, ErrorCategory::precondition)
HIPROBE_DEFINE_ERROR(InsufficientLayersError, ErrorCategory::precondition)
HIPROBE_DEFINE_ERROR(InsufficientCalibrationError, ErrorCategory::precondition)
HIPROBE_DEFINE_ERROR(SpecError, ErrorCategory::precondition)

#undef HIPROBE_DEFINE_ERROR

/// The file ended before the named record was complete.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, std::size_t record_index)
      : Error(ErrorCategory::input, what), record_index_(record_index) {}

  std::size_t record_index() const noexcept { return record_index_; }

 private:
  std::size_t record_index_;
};

/// Invalid values inside otherwise well-formed data (non-finite floats, bad labels).
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t record_index)
      : Error(ErrorCategory::precondition, what), record_index_(record_index) {}

  std::size_t record_index() const noexcept { return record_index_; }

 private:
  std::size_t record_index_;
};

}  // namespace hiprobe
