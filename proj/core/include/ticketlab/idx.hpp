#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "ticketlab/dataset.hpp"
#include "ticketlab/errors.hpp"

namespace ticketlab {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

class IdxMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};
class IdxTruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};
class IdxCountMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Decodes an IDX image file (unsigned bytes, N x rows x cols) and its label
/// file into a classification Dataset with pixels scaled to [0, 1].
Dataset parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels,
                  const std::string& provenance = "idx");

/// Reads both files and calls parse_idx. Throws FormatError when a file cannot be read.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

}  // namespace ticketlab
