#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ticketlab/errors.hpp"
#include "ticketlab/params.hpp"

namespace ticketlab {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::string_view kCheckpointMagic = "TICKETLAB-CKPT";

class CheckpointVersionError : public FormatError {
 public:
  using FormatError::FormatError;
};
class CheckpointShapeError : public FormatError {
 public:
  using FormatError::FormatError;
};
class CheckpointTruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};
class CheckpointChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Parameters with freeze flags, an optional prune mask, the run seed and the
/// config that produced them.
struct CheckpointState {
  ParamStore params;
  PruneMask mask;  // groups absent from the mask have no mask
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();

  bool operator==(const CheckpointState&) const = default;
};

/// Layout: the magic line, one line of JSON header, then the payload. The
/// payload holds every group's values as little-endian float64 in name order,
/// followed by the masks bit-packed LSB first with each group starting on a
/// byte boundary. The header carries shapes, flags, byte offsets and a CRC-32
/// of the payload.
std::string serialize_checkpoint(const CheckpointState& state);
CheckpointState parse_checkpoint(std::string_view bytes);

/// Atomic write (temporary file, then rename).
void save_checkpoint(const CheckpointState& state, const std::filesystem::path& path);
CheckpointState load_checkpoint(const std::filesystem::path& path);

}  // namespace ticketlab
