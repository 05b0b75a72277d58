#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace manger {

struct EnvSpec {
  std::string name;
  std::size_t n_agents = 0;
  std::size_t n_actions = 0;
  std::size_t obs_dim = 0;
  std::size_t state_dim = 0;
  std::size_t horizon = 0;
};

/// What agents and the central learner see after reset or a step.
struct EnvView {
  std::vector<double> obs;          // n_agents x obs_dim
  std::vector<double> state;        // state_dim
  std::vector<std::uint8_t> avail;  // n_agents x n_actions

  std::span<const double> agent_obs(std::size_t agent, std::size_t obs_dim) const {
    return std::span<const double>(obs).subspan(agent * obs_dim, obs_dim);
  }
  std::span<const std::uint8_t> agent_avail(std::size_t agent, std::size_t n_actions) const {
    return std::span<const std::uint8_t>(avail).subspan(agent * n_actions, n_actions);
  }
};

struct StepOutcome {
  EnvView view;
  double reward = 0.0;  // shared by every agent
  bool terminated = false;
  bool success = false;
};

/// Fully cooperative, deterministic multi-agent environment. `terminated`
/// is reported no later than step `horizon`.
class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual EnvView reset(std::uint64_t seed) = 0;
  /// Throws EnvError after termination or for an invalid joint action.
  virtual StepOutcome step(std::span<const std::size_t> actions) = 0;
  virtual std::unique_ptr<Env> clone() const = 0;
  virtual bool terminated() const = 0;
  virtual std::size_t steps_taken() const = 0;
};

/// Two agents, two actions, one step; reward 1 iff the actions differ. Both
/// agents always observe [1.0].
class SymmetryBreak final : public Env {
 public:
  SymmetryBreak();
  const EnvSpec& spec() const override { return spec_; }
  EnvView reset(std::uint64_t seed) override;
  StepOutcome step(std::span<const std::size_t> actions) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<SymmetryBreak>(*this); }
  bool terminated() const override { return done_; }
  std::size_t steps_taken() const override { return t_; }

 private:
  EnvView view() const;
  EnvSpec spec_;
  std::size_t t_ = 0;
  bool done_ = false;
};

/// 5x5 grid, three agents. Column x=2 is a wall except for a door at (2,2)
/// that is open while any agent stands on the switch at (0,4). The first
/// agent to reach the goal at (4,2) earns +10 and ends the episode; every
/// step costs 0.01.
class RoleGrid final : public Env {
 public:
  struct Cell {
    int x = 0;
    int y = 0;
    bool operator==(const Cell&) const = default;
  };
  enum Action : std::size_t { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kStay = 4 };

  static constexpr int kSize = 5;
  static constexpr std::size_t kAgents = 3;
  static constexpr Cell kSwitch{0, 4};
  static constexpr Cell kGoal{4, 2};
  static constexpr Cell kDoor{2, 2};
  static constexpr int kWallX = 2;
  static constexpr double kGoalReward = 10.0;
  static constexpr double kStepPenalty = 0.01;

  RoleGrid();
  const EnvSpec& spec() const override { return spec_; }
  EnvView reset(std::uint64_t seed) override;
  StepOutcome step(std::span<const std::size_t> actions) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<RoleGrid>(*this); }
  bool terminated() const override { return done_; }
  std::size_t steps_taken() const override { return t_; }

  const std::array<Cell, kAgents>& positions() const noexcept { return pos_; }
  bool door_open() const noexcept { return door_; }
  static bool blocked(Cell c, bool door_open);

 private:
  EnvView view() const;
  EnvSpec spec_;
  std::array<Cell, kAgents> pos_{};
  bool door_ = false;
  std::size_t t_ = 0;
  bool done_ = false;
};

/// Two agents on independent chains of length 10 starting at cell 0.
/// Reward 1 and termination when both stand on cell 9 at the same time.
class NoveltyChain final : public Env {
 public:
  static constexpr std::size_t kLength = 10;
  enum Action : std::size_t { kLeft = 0, kRight = 1 };

  NoveltyChain();
  const EnvSpec& spec() const override { return spec_; }
  EnvView reset(std::uint64_t seed) override;
  StepOutcome step(std::span<const std::size_t> actions) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<NoveltyChain>(*this); }
  bool terminated() const override { return done_; }
  std::size_t steps_taken() const override { return t_; }

  const std::array<std::size_t, 2>& positions() const noexcept { return pos_; }

 private:
  EnvView view() const;
  EnvSpec spec_;
  std::array<std::size_t, 2> pos_{};
  std::size_t t_ = 0;
  bool done_ = false;
};

/// Names: symmetry_break, role_grid, novelty_chain.
std::unique_ptr<Env> make_env(std::string_view name);
std::vector<std::string> env_names();

}  // namespace manger
