#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace maptext {

enum class Errc {
  InvalidArgument,
  EvenWindow,
  WindowTooLarge,
  TooFewDistinctValues,
  IndexOutOfRange,
  ImageTooSmall,
  ThresholdOutOfRange,
  BadBlockSize,
  DimensionMismatch,
  StaleStageSet,
  EmptyMatrix,
  UnsupportedFormat,
  CorruptFile,
  IoError,
  NetworkError,
  HttpStatus,
  SchemaError,
};

std::string_view to_string(Errc code);

// Every failure raised by the library. `stage` names the pipeline plane
// (e.g. "i_mask") when the error surfaced inside run_pipeline.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::string stage = {}, int status = 0)
      : std::runtime_error(message), code_(code), stage_(std::move(stage)), status_(status) {}

  Errc code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }
  // HTTP status for Errc::HttpStatus, 0 otherwise.
  int status() const noexcept { return status_; }

  Error with_stage(std::string stage) const { return Error(code_, what(), std::move(stage), status_); }

 private:
  Errc code_;
  std::string stage_;
  int status_;
};

}  // namespace maptext
