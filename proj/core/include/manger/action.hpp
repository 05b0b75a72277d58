#pragma once

#include <cstdint>
#include <span>

#include "manger/rng.hpp"

namespace manger {

/// Epsilon-greedy choice over available actions. Greedy ties resolve to the
/// lowest index. With epsilon == 0 no random numbers are drawn.
/// Throws EnvError if no action is available.
std::size_t select_action(std::span<const double> q, std::span<const std::uint8_t> avail, double epsilon,
                          RngStream& rng);

/// Greedy choice only; never touches an RNG.
std::size_t greedy_action(std::span<const double> q, std::span<const std::uint8_t> avail);

}  // namespace manger
