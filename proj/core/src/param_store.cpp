#include "manger/param_store.hpp"

#include <cmath>

#include "manger/errors.hpp"

namespace manger {

std::size_t ParamStore::add(std::string name, Tensor value) {
  if (index_.contains(name)) throw ContractError("duplicate parameter name '" + name + "'");
  const std::size_t idx = entries_.size();
  index_.emplace(name, idx);
  Param p;
  p.name = std::move(name);
  p.grad = Tensor::zeros_like(value);
  p.adam_m = Tensor::zeros_like(value);
  p.adam_v = Tensor::zeros_like(value);
  p.value = std::move(value);
  entries_.push_back(std::move(p));
  return idx;
}

bool ParamStore::contains(std::string_view name) const { return index_.contains(std::string(name)); }

std::size_t ParamStore::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ContractError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& p : entries_) p.grad.fill(0.0);
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : entries_) n += p.value.size();
  return n;
}

void ParamStore::check_mirrors(const ParamStore& other) const {
  if (other.size() != size()) throw DimensionError("parameter stores differ in entry count");
  for (std::size_t i = 0; i < size(); ++i) {
    if (entries_[i].name != other.entries_[i].name || entries_[i].value.shape() != other.entries_[i].value.shape())
      throw DimensionError("parameter store mismatch at '" + entries_[i].name + "'");
  }
}

void ParamStore::copy_values_from(const ParamStore& other) {
  check_mirrors(other);
  for (std::size_t i = 0; i < size(); ++i) entries_[i].value = other.entries_[i].value;
}

void ParamStore::blend_values_from(const ParamStore& other, double tau) {
  check_mirrors(other);
  for (std::size_t i = 0; i < size(); ++i) {
    auto dst = entries_[i].value.data();
    auto src = other.entries_[i].value.data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = tau * src[k] + (1.0 - tau) * dst[k];
  }
}

bool ParamStore::values_identical(const ParamStore& other) const {
  if (other.size() != size()) return false;
  for (std::size_t i = 0; i < size(); ++i)
    if (entries_[i].name != other.entries_[i].name || !entries_[i].value.identical(other.entries_[i].value))
      return false;
  return true;
}

namespace {

void adam_entry(Param& p, const AdamOptions& o) {
  ++p.step_count;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(p.step_count));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(p.step_count));
  auto v = p.value.data();
  auto g = p.grad.data();
  auto m1 = p.adam_m.data();
  auto m2 = p.adam_v.data();
  for (std::size_t k = 0; k < v.size(); ++k) {
    m1[k] = o.beta1 * m1[k] + (1.0 - o.beta1) * g[k];
    m2[k] = o.beta2 * m2[k] + (1.0 - o.beta2) * g[k] * g[k];
    const double m_hat = m1[k] / bc1;
    const double v_hat = m2[k] / bc2;
    v[k] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
    g[k] = 0.0;
  }
}

}  // namespace

void adam_step(ParamStore& store, const AdamOptions& opts) {
  for (auto& p : store) adam_entry(p, opts);
}

void adam_step(ParamStore& store, const AdamOptions& opts, std::span<const std::size_t> subset) {
  for (std::size_t i : subset) {
    if (i >= store.size()) throw ContractError("adam_step: entry index out of range");
    adam_entry(store[i], opts);
  }
}

void sgd_step(ParamStore& store, double lr) {
  for (auto& p : store) {
    auto v = p.value.data();
    auto g = p.grad.data();
    for (std::size_t k = 0; k < v.size(); ++k) {
      v[k] -= lr * g[k];
      g[k] = 0.0;
    }
  }
}

}  // namespace manger
