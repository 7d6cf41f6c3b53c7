#include "ticketlab/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <functional>
#include <numeric>

#include <zlib.h>

#include "ticketlab/csv.hpp"

namespace ticketlab {
namespace {

using nlohmann::json;

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

double get_f64(std::string_view in, std::size_t pos) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= std::uint64_t{static_cast<unsigned char>(in[pos + b])} << (8 * b);
  return std::bit_cast<double>(bits);
}

std::uint32_t crc(std::string_view data) {
  uLong c = crc32(0L, Z_NULL, 0);
  std::size_t pos = 0;
  while (pos < data.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size() - pos, 1u << 30));
    c = crc32(c, reinterpret_cast<const Bytef*>(data.data() + pos), chunk);
    pos += chunk;
  }
  return static_cast<std::uint32_t>(c);
}

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::string serialize_checkpoint(const CheckpointState& state) {
  std::string payload;
  json groups = json::array();
  for (const auto& [name, p] : state.params.groups()) {
    json g;
    g["name"] = name;
    g["shape"] = p.shape;
    g["frozen"] = p.frozen;
    g["prunable"] = p.prunable;
    g["offset"] = payload.size();
    g["bytes"] = p.values.size() * 8;
    g["has_mask"] = state.mask.groups().count(name) != 0;
    for (double v : p.values) put_f64(payload, v);
    groups.push_back(std::move(g));
  }
  for (auto& g : groups) {
    const std::string name = g["name"];
    auto it = state.mask.groups().find(name);
    if (it == state.mask.groups().end()) continue;
    const auto& bits = it->second;
    if (bits.size() != state.params.at(name).values.size()) {
      throw CheckpointShapeError("mask of '" + name + "' does not match its parameter size", 0);
    }
    g["mask_offset"] = payload.size();
    std::string packed((bits.size() + 7) / 8, '\0');
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i]) packed[i / 8] = static_cast<char>(packed[i / 8] | (1 << (i % 8)));
    }
    payload += packed;
  }
  for (const auto& [name, _] : state.mask.groups()) {
    if (!state.params.contains(name)) throw CheckpointShapeError("mask group '" + name + "' has no parameters", 0);
  }

  json header;
  header["format_version"] = kCheckpointVersion;
  header["seed"] = state.seed;
  header["config"] = state.config;
  header["groups"] = std::move(groups);
  header["payload_bytes"] = payload.size();
  header["crc32"] = crc(payload);

  std::string out(kCheckpointMagic);
  out += '\n';
  out += header.dump();
  out += '\n';
  out += payload;
  return out;
}

CheckpointState parse_checkpoint(std::string_view bytes) {
  const std::size_t magic_end = bytes.find('\n');
  if (magic_end == std::string_view::npos || bytes.substr(0, magic_end) != kCheckpointMagic) {
    throw FormatError("not a checkpoint: missing magic line", 0);
  }
  const std::size_t header_start = magic_end + 1;
  const std::size_t header_end = bytes.find('\n', header_start);
  if (header_end == std::string_view::npos) throw CheckpointTruncatedError("header line is incomplete", bytes.size());

  json header;
  try {
    header = json::parse(bytes.substr(header_start, header_end - header_start));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed header: ") + e.what(), header_start);
  }
  try {
    const auto version = header.at("format_version").get<std::uint32_t>();
    if (version != kCheckpointVersion) {
      throw CheckpointVersionError("format version " + std::to_string(version) + ", expected " +
                                       std::to_string(kCheckpointVersion),
                                   header_start);
    }
    const std::size_t payload_start = header_end + 1;
    const auto payload_bytes = header.at("payload_bytes").get<std::size_t>();
    const std::string_view payload = bytes.substr(payload_start);
    if (payload.size() < payload_bytes) {
      throw CheckpointTruncatedError("payload has " + std::to_string(payload.size()) + " of " +
                                         std::to_string(payload_bytes) + " bytes",
                                     bytes.size());
    }
    if (payload.size() > payload_bytes) {
      throw FormatError("trailing bytes after payload", payload_start + payload_bytes);
    }
    if (crc(payload) != header.at("crc32").get<std::uint32_t>()) {
      throw CheckpointChecksumError("payload checksum mismatch", payload_start);
    }

    CheckpointState st;
    st.seed = header.at("seed").get<std::uint64_t>();
    st.config = header.at("config");
    for (const auto& g : header.at("groups")) {
      const std::string name = g.at("name").get<std::string>();
      auto shape = g.at("shape").get<std::vector<std::size_t>>();
      const auto offset = g.at("offset").get<std::size_t>();
      const auto nbytes = g.at("bytes").get<std::size_t>();
      const std::size_t count = product(shape);
      if (count * 8 != nbytes) {
        throw CheckpointShapeError("group '" + name + "' shape holds " + std::to_string(count) +
                                       " values but the header records " + std::to_string(nbytes) + " bytes",
                                   header_start);
      }
      if (offset + nbytes > payload.size()) {
        throw CheckpointShapeError("group '" + name + "' extends past the payload", payload_start + offset);
      }
      Param& p = st.params.add(name, std::move(shape), g.at("prunable").get<bool>());
      p.frozen = g.at("frozen").get<bool>();
      for (std::size_t i = 0; i < count; ++i) p.values[i] = get_f64(payload, offset + 8 * i);
      if (g.at("has_mask").get<bool>()) {
        const auto moff = g.at("mask_offset").get<std::size_t>();
        if (moff + (count + 7) / 8 > payload.size()) {
          throw CheckpointShapeError("mask of '" + name + "' extends past the payload", payload_start + moff);
        }
        auto& bits = st.mask.groups()[name];
        bits.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
          bits[i] = (static_cast<unsigned char>(payload[moff + i / 8]) >> (i % 8)) & 1u;
        }
      }
    }
    return st;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed header: ") + e.what(), header_start);
  }
}

void save_checkpoint(const CheckpointState& state, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(state));
}

CheckpointState load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file_text(path));
}

}  // namespace ticketlab
