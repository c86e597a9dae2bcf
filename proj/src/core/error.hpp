#pragma once

#include <stdexcept>
#include <string>

namespace forestinv {

// Error categories mirrored one-to-one by the C API status codes.
enum class ErrorCode {
  InvalidArgument = 1,  // bad parameter (non-positive resolution, zero speed, ...)
  Ordering = 2,         // out-of-order timestamp on a strictly increasing stream
  Lookup = 3,           // unknown timestamp in the pose graph
  FrameMismatch = 4,    // cloud frame does not match the transform's source frame
  Coverage = 5,         // query outside the covered terrain region
  Input = 6,            // malformed or empty input data
  Io = 7,               // file system / parse failure
  Internal = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline Error invalid_argument_error(const std::string& what) {
  return {ErrorCode::InvalidArgument, what};
}
inline Error ordering_error(const std::string& what) { return {ErrorCode::Ordering, what}; }
inline Error lookup_error(const std::string& what) { return {ErrorCode::Lookup, what}; }
inline Error frame_error(const std::string& what) { return {ErrorCode::FrameMismatch, what}; }
inline Error coverage_error(const std::string& what) { return {ErrorCode::Coverage, what}; }
inline Error input_error(const std::string& what) { return {ErrorCode::Input, what}; }
inline Error io_error(const std::string& what) { return {ErrorCode::Io, what}; }

}  // namespace forestinv
