#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "manger/agent_net.hpp"
#include "manger/envs.hpp"
#include "manger/tensor.hpp"

namespace manger {

struct CosineReport {
  Tensor matrix;              // N x N, unit diagonal
  std::size_t probes_used = 0;
  std::size_t skipped = 0;    // probes where some agent's Q-vector had zero norm
};

/// For each probe observation every agent evaluates q_sum from a zero
/// hidden state (with its own one-hot id appended when obs_agent_id is set);
/// entry (i, j) averages the cosine similarity of agents i and j over probes.
CosineReport diag_cosine(const AgentNet& net, const std::vector<std::vector<double>>& probes, bool obs_agent_id);

/// Mean of the off-diagonal entries.
double off_diagonal_mean(const Tensor& matrix);

/// Distinct per-agent observations seen in `episodes` greedy rollouts, in
/// order of first appearance.
std::vector<std::vector<double>> collect_probes(Env& env, const AgentNet& net, std::size_t episodes,
                                                std::uint64_t seed, bool obs_agent_id);

/// One observation per line, comma-separated; blank lines and '#' comments skipped.
std::vector<std::vector<double>> read_probes(const std::filesystem::path& path);
void write_probes(const std::vector<std::vector<double>>& probes, std::ostream& out);
void write_matrix_csv(const Tensor& matrix, std::ostream& out);

}  // namespace manger
