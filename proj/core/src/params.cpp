#include "ticketlab/params.hpp"

#include <cstring>
#include <functional>
#include <numeric>

#include "ticketlab/errors.hpp"

namespace ticketlab {
namespace {

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.compare(0, prefix.size(), prefix) == 0;
}

}  // namespace

Param& ParamStore::add(const std::string& name, std::vector<std::size_t> shape, bool prunable) {
  if (groups_.count(name)) throw ShapeError("ParamStore: duplicate group '" + name + "'");
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  Param& p = groups_[name];
  p.shape = std::move(shape);
  p.values.assign(n, 0.0);
  p.prunable = prunable;
  return p;
}

Param& ParamStore::at(const std::string& name) {
  auto it = groups_.find(name);
  if (it == groups_.end()) throw IndexError("ParamStore: no group '" + name + "'");
  return it->second;
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = groups_.find(name);
  if (it == groups_.end()) throw IndexError("ParamStore: no group '" + name + "'");
  return it->second;
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& [_, p] : groups_) n += p.values.size();
  return n;
}

std::size_t ParamStore::prunable_size() const {
  std::size_t n = 0;
  for (const auto& [_, p] : groups_) {
    if (p.prunable) n += p.values.size();
  }
  return n;
}

void ParamStore::set_frozen(const std::string& prefix, bool frozen) {
  for (auto& [name, p] : groups_) {
    if (starts_with(name, prefix)) p.frozen = frozen;
  }
}

void ParamStore::assign_from(const ParamStore& source) {
  for (const auto& [name, src] : source.groups_) {
    Param& dst = at(name);
    if (dst.shape != src.shape) throw ShapeError("ParamStore::assign_from: shape mismatch in '" + name + "'");
    dst.values = src.values;
  }
}

ParamStore ParamStore::subset(const std::vector<std::string>& prefixes) const {
  ParamStore out;
  for (const auto& [name, p] : groups_) {
    for (const auto& prefix : prefixes) {
      if (starts_with(name, prefix)) {
        out.groups_[name] = p;
        break;
      }
    }
  }
  return out;
}

std::uint64_t ParamStore::hash() const { return hash(""); }

std::uint64_t ParamStore::hash(const std::string& prefix) const {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (const auto& [name, p] : groups_) {
    if (!starts_with(name, prefix)) continue;
    fnv_bytes(h, name.data(), name.size());
    fnv_bytes(h, p.shape.data(), p.shape.size() * sizeof(std::size_t));
    fnv_bytes(h, p.values.data(), p.values.size() * sizeof(double));
  }
  return h;
}

bool ParamStore::operator==(const ParamStore& other) const {
  if (groups_.size() != other.groups_.size()) return false;
  auto a = groups_.begin();
  auto b = other.groups_.begin();
  for (; a != groups_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.shape != b->second.shape ||
        a->second.frozen != b->second.frozen || a->second.prunable != b->second.prunable) {
      return false;
    }
    const auto& va = a->second.values;
    const auto& vb = b->second.values;
    if (va.size() != vb.size() ||
        (!va.empty() && std::memcmp(va.data(), vb.data(), va.size() * sizeof(double)) != 0)) {
      return false;
    }
  }
  return true;
}

GradStore zero_grads(const ParamStore& params) {
  GradStore g;
  for (const auto& [name, p] : params.groups()) g[name].assign(p.values.size(), 0.0);
  return g;
}

void scale_grads(GradStore& grads, double factor) {
  for (auto& [_, g] : grads) {
    for (double& v : g) v *= factor;
  }
}

PruneMask PruneMask::ones_like(const ParamStore& params) {
  PruneMask m;
  for (const auto& [name, p] : params.groups()) {
    if (p.prunable) m.bits_[name].assign(p.values.size(), 1);
  }
  return m;
}

std::size_t PruneMask::total() const {
  std::size_t n = 0;
  for (const auto& [_, b] : bits_) n += b.size();
  return n;
}

std::size_t PruneMask::pruned() const {
  std::size_t n = 0;
  for (const auto& [_, b] : bits_) {
    for (auto bit : b) n += bit == 0;
  }
  return n;
}

double PruneMask::sparsity() const {
  const std::size_t t = total();
  return t == 0 ? 0.0 : static_cast<double>(pruned()) / static_cast<double>(t);
}

bool PruneMask::nested_in(const PruneMask& earlier) const {
  if (bits_.size() != earlier.bits_.size()) return false;
  for (const auto& [name, b] : bits_) {
    auto it = earlier.bits_.find(name);
    if (it == earlier.bits_.end() || it->second.size() != b.size()) return false;
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (it->second[i] == 0 && b[i] != 0) return false;
    }
  }
  return true;
}

void PruneMask::apply(ParamStore& params) const {
  for (const auto& [name, b] : bits_) {
    auto& v = params.at(name).values;
    if (v.size() != b.size()) throw ShapeError("PruneMask::apply: size mismatch in '" + name + "'");
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (!b[i]) v[i] = 0.0;
    }
  }
}

void PruneMask::apply(GradStore& grads) const {
  for (const auto& [name, b] : bits_) {
    auto it = grads.find(name);
    if (it == grads.end()) continue;
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (!b[i]) it->second[i] = 0.0;
    }
  }
}

}  // namespace ticketlab
