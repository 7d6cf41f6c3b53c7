#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ticketlab {

/// One named parameter group (a conv tensor, a head matrix, a bias vector).
struct Param {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  bool frozen = false;
  bool prunable = false;
};

/// Named parameter groups in lexicographic name order. The order is the
/// checkpoint payload order and the global pruning order.
class ParamStore {
 public:
  Param& add(const std::string& name, std::vector<std::size_t> shape, bool prunable = false);

  bool contains(const std::string& name) const { return groups_.count(name) != 0; }
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;

  std::map<std::string, Param>& groups() noexcept { return groups_; }
  const std::map<std::string, Param>& groups() const noexcept { return groups_; }

  std::size_t total_size() const;
  std::size_t prunable_size() const;

  /// Sets the frozen flag on every group whose name starts with `prefix`.
  void set_frozen(const std::string& prefix, bool frozen);

  /// Copies values of the groups present in `source` (shapes must match).
  void assign_from(const ParamStore& source);
  /// A store holding only groups whose names start with one of the prefixes.
  ParamStore subset(const std::vector<std::string>& prefixes) const;

  /// FNV-1a over names, shapes and raw value bytes; equal hashes mean bit-identical values.
  std::uint64_t hash() const;
  /// Hash restricted to groups whose names start with `prefix`.
  std::uint64_t hash(const std::string& prefix) const;

  bool operator==(const ParamStore& other) const;

 private:
  std::map<std::string, Param> groups_;
};

/// Gradient buffers keyed like ParamStore.
using GradStore = std::map<std::string, std::vector<double>>;

/// Zero-filled gradient buffers for every group of `params`.
GradStore zero_grads(const ParamStore& params);
void scale_grads(GradStore& grads, double factor);

/// Binary keep-mask over the prunable groups of a ParamStore (1 = kept).
class PruneMask {
 public:
  PruneMask() = default;
  /// All-ones mask over the prunable groups of `params`.
  static PruneMask ones_like(const ParamStore& params);

  std::map<std::string, std::vector<std::uint8_t>>& groups() noexcept { return bits_; }
  const std::map<std::string, std::vector<std::uint8_t>>& groups() const noexcept { return bits_; }

  std::size_t total() const;
  std::size_t pruned() const;
  std::size_t live() const { return total() - pruned(); }
  /// pruned / total, recomputed from the bits.
  double sparsity() const;

  /// True when every weight pruned by `earlier` is also pruned here.
  bool nested_in(const PruneMask& earlier) const;

  /// Zeroes masked entries. Idempotent.
  void apply(ParamStore& params) const;
  void apply(GradStore& grads) const;

  bool operator==(const PruneMask&) const = default;

 private:
  std::map<std::string, std::vector<std::uint8_t>> bits_;
};

}  // namespace ticketlab
