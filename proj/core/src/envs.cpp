#include "manger/envs.hpp"

#include <algorithm>
#include <stdexcept>

#include "manger/errors.hpp"

namespace manger {

namespace {

void check_joint_action(const EnvSpec& spec, std::span<const std::size_t> actions, bool done) {
  if (done) throw EnvError(spec.name + ": step after termination");
  if (actions.size() != spec.n_agents)
    throw EnvError(spec.name + ": joint action has " + std::to_string(actions.size()) + " entries, expected " +
                   std::to_string(spec.n_agents));
  for (std::size_t a : actions)
    if (a >= spec.n_actions) throw EnvError(spec.name + ": action " + std::to_string(a) + " out of range");
}

}  // namespace

// ---- SymmetryBreak ---------------------------------------------------------

SymmetryBreak::SymmetryBreak() : spec_{"symmetry_break", 2, 2, 1, 1, 1} {}

EnvView SymmetryBreak::view() const { return EnvView{{1.0, 1.0}, {1.0}, {1, 1, 1, 1}}; }

EnvView SymmetryBreak::reset(std::uint64_t) {
  t_ = 0;
  done_ = false;
  return view();
}

StepOutcome SymmetryBreak::step(std::span<const std::size_t> actions) {
  check_joint_action(spec_, actions, done_);
  ++t_;
  done_ = true;
  const bool differ = actions[0] != actions[1];
  return StepOutcome{view(), differ ? 1.0 : 0.0, true, differ};
}

// ---- RoleGrid --------------------------------------------------------------

RoleGrid::RoleGrid() : spec_{"role_grid", kAgents, 5, 6, 2 * kAgents + 1, 50} {}

bool RoleGrid::blocked(Cell c, bool door_open) {
  if (c.x < 0 || c.y < 0 || c.x >= kSize || c.y >= kSize) return true;
  if (c.x == kWallX) return !(c == kDoor && door_open);
  return false;
}

EnvView RoleGrid::view() const {
  EnvView v;
  v.obs.reserve(kAgents * 6);
  for (const Cell& c : pos_) {
    v.obs.push_back(c.x / 4.0);
    v.obs.push_back(c.y / 4.0);
    v.obs.push_back(door_ ? 1.0 : 0.0);
    v.obs.push_back(c == kSwitch ? 1.0 : 0.0);
    v.obs.push_back((kGoal.x - c.x) / 4.0);
    v.obs.push_back((kGoal.y - c.y) / 4.0);
  }
  for (const Cell& c : pos_) {
    v.state.push_back(c.x / 4.0);
    v.state.push_back(c.y / 4.0);
  }
  v.state.push_back(door_ ? 1.0 : 0.0);
  v.avail.assign(kAgents * spec_.n_actions, 1);
  return v;
}

EnvView RoleGrid::reset(std::uint64_t) {
  pos_ = {Cell{0, 0}, Cell{0, 1}, Cell{0, 2}};
  door_ = false;
  t_ = 0;
  done_ = false;
  return view();
}

StepOutcome RoleGrid::step(std::span<const std::size_t> actions) {
  check_joint_action(spec_, actions, done_);
  // Moves are resolved against the door state at the start of the step.
  const bool door_before = door_;
  for (std::size_t i = 0; i < kAgents; ++i) {
    Cell next = pos_[i];
    switch (actions[i]) {
      case kUp: ++next.y; break;
      case kDown: --next.y; break;
      case kLeft: --next.x; break;
      case kRight: ++next.x; break;
      default: break;
    }
    if (!blocked(next, door_before)) pos_[i] = next;
  }
  door_ = std::any_of(pos_.begin(), pos_.end(), [](const Cell& c) { return c == kSwitch; });
  ++t_;

  StepOutcome out;
  out.reward = -kStepPenalty;
  if (std::any_of(pos_.begin(), pos_.end(), [](const Cell& c) { return c == kGoal; })) {
    out.reward += kGoalReward;
    out.success = true;
    done_ = true;
  }
  if (t_ >= spec_.horizon) done_ = true;
  out.terminated = done_;
  out.view = view();
  return out;
}

// ---- NoveltyChain ----------------------------------------------------------

NoveltyChain::NoveltyChain() : spec_{"novelty_chain", 2, 2, kLength, 2 * kLength, 40} {}

EnvView NoveltyChain::view() const {
  EnvView v;
  v.obs.assign(2 * kLength, 0.0);
  v.state.assign(2 * kLength, 0.0);
  for (std::size_t i = 0; i < 2; ++i) {
    v.obs[i * kLength + pos_[i]] = 1.0;
    v.state[i * kLength + pos_[i]] = 1.0;
  }
  v.avail.assign(2 * spec_.n_actions, 1);
  return v;
}

EnvView NoveltyChain::reset(std::uint64_t) {
  pos_ = {0, 0};
  t_ = 0;
  done_ = false;
  return view();
}

StepOutcome NoveltyChain::step(std::span<const std::size_t> actions) {
  check_joint_action(spec_, actions, done_);
  for (std::size_t i = 0; i < 2; ++i) {
    if (actions[i] == kRight && pos_[i] + 1 < kLength) ++pos_[i];
    if (actions[i] == kLeft && pos_[i] > 0) --pos_[i];
  }
  ++t_;
  StepOutcome out;
  if (pos_[0] == kLength - 1 && pos_[1] == kLength - 1) {
    out.reward = 1.0;
    out.success = true;
    done_ = true;
  }
  if (t_ >= spec_.horizon) done_ = true;
  out.terminated = done_;
  out.view = view();
  return out;
}

// ---- factory ---------------------------------------------------------------

std::unique_ptr<Env> make_env(std::string_view name) {
  if (name == "symmetry_break") return std::make_unique<SymmetryBreak>();
  if (name == "role_grid") return std::make_unique<RoleGrid>();
  if (name == "novelty_chain") return std::make_unique<NoveltyChain>();
  throw std::invalid_argument("unknown environment '" + std::string(name) + "'");
}

std::vector<std::string> env_names() { return {"symmetry_break", "role_grid", "novelty_chain"}; }

}  // namespace manger
