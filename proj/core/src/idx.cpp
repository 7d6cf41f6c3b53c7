#include "ticketlab/idx.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <vector>

namespace ticketlab {
namespace {

std::string hex32(std::uint32_t v) {
  char buf[11];
  std::snprintf(buf, sizeof buf, "0x%08X", v);
  return buf;
}

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset, const char* what) {
  if (offset + 4 > bytes.size()) {
    throw IdxTruncatedError(std::string(what) + ": header ends early", bytes.size());
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void check_magic(std::span<const std::uint8_t> bytes, std::uint32_t expected, const char* what) {
  const std::uint32_t magic = read_be32(bytes, 0, what);
  if (magic != expected) {
    throw IdxMagicError(std::string(what) + ": bad magic " + hex32(magic) + ", expected " + hex32(expected), 0);
  }
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'", 0);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Dataset parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels,
                  const std::string& provenance) {
  check_magic(images, kIdxImageMagic, "image file");
  check_magic(labels, kIdxLabelMagic, "label file");
  const std::uint32_t count = read_be32(images, 4, "image file");
  const std::uint32_t rows = read_be32(images, 8, "image file");
  const std::uint32_t cols = read_be32(images, 12, "image file");
  const std::uint32_t label_count = read_be32(labels, 4, "label file");
  if (count != label_count) {
    throw IdxCountMismatchError("image count " + std::to_string(count) + " differs from label count " +
                                    std::to_string(label_count),
                                4);
  }
  const std::uint64_t plane = std::uint64_t{rows} * cols;
  const std::uint64_t image_end = 16 + plane * count;
  if (images.size() < image_end) {
    throw IdxTruncatedError("image file: payload needs " + std::to_string(image_end) + " bytes", images.size());
  }
  if (labels.size() < 8 + std::uint64_t{count}) {
    throw IdxTruncatedError("label file: payload needs " + std::to_string(8 + std::uint64_t{count}) + " bytes",
                            labels.size());
  }

  Dataset d;
  d.task = TaskKind::Classification;
  d.provenance = provenance;
  for (std::uint32_t i = 0; i < count; ++i) {
    FeatureMap x(std::size_t{1}, std::size_t{rows}, std::size_t{cols});
    const std::size_t base = 16 + static_cast<std::size_t>(plane) * i;
    for (std::size_t j = 0; j < plane; ++j) x.values()[j] = images[base + j] / 255.0;
    d.inputs.push_back(std::move(x));
    const std::size_t label = labels[8 + i];
    d.labels.push_back(label);
    d.num_classes = std::max(d.num_classes, label + 1);
  }
  return d;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const std::vector<std::uint8_t> images = read_file(images_path);
  const std::vector<std::uint8_t> labels = read_file(labels_path);
  return parse_idx(images, labels, images_path);
}

}  // namespace ticketlab
