#include "manger/diag.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include "manger/errors.hpp"
#include "manger/rollout.hpp"

namespace manger {

CosineReport diag_cosine(const AgentNet& net, const std::vector<std::vector<double>>& probes, bool obs_agent_id) {
  if (probes.empty()) throw ContractError("diag_cosine: no probe observations");
  const std::size_t N = net.config().n_agents;
  CosineReport rep;
  rep.matrix = Tensor({N, N});
  const Tensor h0 = net.initial_hidden();
  for (const auto& obs : probes) {
    std::vector<Tensor> q;
    std::vector<double> norm;
    for (std::size_t i = 0; i < N; ++i) {
      const auto x = agent_input(obs, i, N, obs_agent_id);
      if (x.size() != net.config().input_dim)
        throw DimensionError("diag_cosine: probe has " + std::to_string(obs.size()) + " values");
      q.push_back(net.forward(Tensor::vector(x), h0, i).q_sum);
      double s = 0.0;
      for (double v : q.back().data()) s += v * v;
      norm.push_back(std::sqrt(s));
    }
    if (std::any_of(norm.begin(), norm.end(), [](double n) { return n == 0.0; })) {
      ++rep.skipped;
      continue;
    }
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) {
        double dot = 0.0;
        for (std::size_t a = 0; a < q[i].size(); ++a) dot += q[i][a] * q[j][a];
        rep.matrix.at(i, j) += i == j ? 1.0 : dot / (norm[i] * norm[j]);
      }
    ++rep.probes_used;
  }
  if (rep.probes_used == 0) throw NumericError("diag_cosine: every probe produced a zero Q-vector");
  for (double& v : rep.matrix.data()) v /= static_cast<double>(rep.probes_used);
  for (std::size_t i = 0; i < N; ++i) rep.matrix.at(i, i) = 1.0;
  return rep;
}

double off_diagonal_mean(const Tensor& m) {
  const std::size_t N = m.rows();
  if (N < 2) return 1.0;
  double s = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j)
      if (i != j) s += m.at(i, j);
  return s / static_cast<double>(N * (N - 1));
}

std::vector<std::vector<double>> collect_probes(Env& env, const AgentNet& net, std::size_t episodes,
                                                std::uint64_t seed, bool obs_agent_id) {
  const EnvSpec spec = env.spec();
  RngStream rng(seed, 0);
  std::vector<std::vector<double>> out;
  std::set<std::vector<double>> seen;
  for (std::size_t e = 0; e < episodes; ++e) {
    const Episode ep = run_episode(env, net, 0.0, rng, true, obs_agent_id);
    for (std::size_t t = 0; t <= ep.length; ++t)
      for (std::size_t i = 0; i < spec.n_agents; ++i) {
        const auto* p = ep.obs.data() + (t * spec.n_agents + i) * spec.obs_dim;
        std::vector<double> o(p, p + spec.obs_dim);
        if (seen.insert(o).second) out.push_back(std::move(o));
      }
  }
  return out;
}

std::vector<std::vector<double>> read_probes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open probe file " + path.string());
  std::vector<std::vector<double>> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      double v = 0.0;
      const auto r = std::from_chars(p, end, v);
      if (r.ec != std::errc()) throw std::runtime_error("probe file line " + std::to_string(n) + ": bad number");
      row.push_back(v);
      p = r.ptr;
      while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
      if (p < end) {
        if (*p != ',') throw std::runtime_error("probe file line " + std::to_string(n) + ": expected ','");
        ++p;
      }
    }
    if (!out.empty() && row.size() != out.front().size())
      throw std::runtime_error("probe file line " + std::to_string(n) + ": inconsistent width");
    out.push_back(std::move(row));
  }
  return out;
}

void write_probes(const std::vector<std::vector<double>>& probes, std::ostream& out) {
  char buf[40];
  for (const auto& row : probes) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", row[k]);
      out << (k ? "," : "") << buf;
    }
    out << '\n';
  }
}

void write_matrix_csv(const Tensor& m, std::ostream& out) {
  char buf[40];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.9g", m.at(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace manger
