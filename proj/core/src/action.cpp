#include "manger/action.hpp"

#include <string>

#include "manger/errors.hpp"

namespace manger {

std::size_t greedy_action(std::span<const double> q, std::span<const std::uint8_t> avail) {
  if (q.size() != avail.size())
    throw EnvError("availability mask has " + std::to_string(avail.size()) + " entries for " +
                   std::to_string(q.size()) + " actions");
  std::size_t best = q.size();
  for (std::size_t a = 0; a < q.size(); ++a) {
    if (!avail[a]) continue;
    if (best == q.size() || q[a] > q[best]) best = a;
  }
  if (best == q.size()) throw EnvError("no available action");
  return best;
}

std::size_t select_action(std::span<const double> q, std::span<const std::uint8_t> avail, double epsilon,
                          RngStream& rng) {
  const std::size_t greedy = greedy_action(q, avail);
  if (epsilon <= 0.0) return greedy;
  if (rng.uniform() >= epsilon) return greedy;
  std::size_t count = 0;
  for (auto v : avail) count += v ? 1 : 0;
  std::uint64_t pick = rng.below(count);
  for (std::size_t a = 0; a < avail.size(); ++a) {
    if (!avail[a]) continue;
    if (pick-- == 0) return a;
  }
  return greedy;  // unreachable
}

}  // namespace manger
