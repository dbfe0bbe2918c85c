#ifndef GR3DKIT_ERROR_H_
#define GR3DKIT_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gr3dkit {

enum class ErrorCode {
  kInvalidArgument,
  kDegenerateGeometry,
  kEmptyAfterClamp,
  kInvalidRotation,
  kBehindCamera,
  kInvalidDepth,
  kNoValidDepth,
  kNoDepth,
  kParseError,
  kSerializeError,
  kInvalidMentions,
  kProtocolViolation,
  kEmptyEvaluation,
  kNothingToGenerate,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Malformed grounding text (strict mode) or malformed record files.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& message)
      : Error(ErrorCode::kParseError,
              "byte " + std::to_string(offset) + ": " + message),
        offset_(offset) {}
  ParseError(const std::string& source, std::size_t offset, const std::string& message)
      : Error(ErrorCode::kParseError,
              source + ": byte " + std::to_string(offset) + ": " + message),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace gr3dkit

#endif  // GR3DKIT_ERROR_H_
