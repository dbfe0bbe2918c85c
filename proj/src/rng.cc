#include "gr3dkit/rng.h"

#include "gr3dkit/error.h"

namespace gr3dkit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kEmptyAfterClamp: return "EmptyAfterClamp";
    case ErrorCode::kInvalidRotation: return "InvalidRotation";
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kInvalidDepth: return "InvalidDepth";
    case ErrorCode::kNoValidDepth: return "NoValidDepth";
    case ErrorCode::kNoDepth: return "NoDepth";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kSerializeError: return "SerializeError";
    case ErrorCode::kInvalidMentions: return "InvalidMentions";
    case ErrorCode::kProtocolViolation: return "ProtocolViolation";
    case ErrorCode::kEmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::kNothingToGenerate: return "NothingToGenerate";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

double Rng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

std::uint64_t Rng::below(std::uint64_t bound) {
  // Lemire's nearly-divisionless bounded draw.
  unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(engine_()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) {
  return splitmix64(seed ^ fnv1a64(key));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index));
}

}  // namespace gr3dkit
