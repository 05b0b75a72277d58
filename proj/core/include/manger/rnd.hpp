#pragma once

#include <span>
#include <vector>

#include "manger/param_store.hpp"
#include "manger/rng.hpp"
#include "manger/tensor.hpp"

namespace manger {

struct RndConfig {
  std::size_t obs_dim = 0;
  std::size_t embed_dim = 32;  // K; also the hidden width
};

/// Random network distillation pair. Both networks are
/// obs -> Linear -> ReLU -> Linear -> K. The target is frozen at
/// construction; only the predictor is ever trained.
class RndNet {
 public:
  RndNet(const RndConfig& config, RngStream& rng);
  explicit RndNet(const RndConfig& config);

  /// Squared L2 distance between target and predictor embeddings.
  double novelty(std::span<const double> obs) const;
  /// Novelty of each row of X [R x obs_dim].
  std::vector<double> novelty_rows(const Tensor& X) const;

  /// Mean over rows of the squared embedding error; accumulates the
  /// predictor gradient of that mean. Returns the loss.
  double predictor_gradient(const Tensor& X);

  /// Makes the predictor an exact copy of the target.
  void copy_predictor_from_target();

  const RndConfig& config() const noexcept { return config_; }
  const ParamStore& target() const noexcept { return target_; }
  ParamStore& predictor() noexcept { return predictor_; }
  const ParamStore& predictor() const noexcept { return predictor_; }
  /// Checkpoint loading only.
  ParamStore& mutable_target() noexcept { return target_; }

 private:
  void build(RngStream* rng);

  RndConfig config_;
  ParamStore target_;
  ParamStore predictor_;
};

}  // namespace manger
