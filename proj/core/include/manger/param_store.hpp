#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "manger/tensor.hpp"

namespace manger {

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor adam_m;
  Tensor adam_v;
  std::int64_t step_count = 0;
};

/// Named parameters in insertion order, each with gradient and Adam state.
class ParamStore {
 public:
  /// Returns the index of the new entry. Names must be unique.
  std::size_t add(std::string name, Tensor value);

  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  Param& operator[](std::size_t i) { return entries_[i]; }
  const Param& operator[](std::size_t i) const { return entries_[i]; }
  Param& get(std::string_view name) { return entries_[index_of(name)]; }
  const Param& get(std::string_view name) const { return entries_[index_of(name)]; }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void zero_grad();
  std::size_t parameter_count() const;

  /// Copies values only (grads and optimizer state untouched). Names and
  /// shapes must match.
  void copy_values_from(const ParamStore& other);
  /// value <- tau * other + (1 - tau) * value
  void blend_values_from(const ParamStore& other, double tau);

  bool values_identical(const ParamStore& other) const;

 private:
  void check_mirrors(const ParamStore& other) const;

  std::vector<Param> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam on every entry; grads are zeroed afterwards.
void adam_step(ParamStore& store, const AdamOptions& opts);
/// Adam restricted to the listed entries. Entries not listed keep their
/// values, moments, step counts and gradients.
void adam_step(ParamStore& store, const AdamOptions& opts, std::span<const std::size_t> subset);
/// Plain gradient descent; grads are zeroed afterwards.
void sgd_step(ParamStore& store, double lr);

}  // namespace manger
