#pragma once

#include <cstdint>
#include <vector>

#include "dynabench/world.hpp"

namespace dynabench::sim {

/// A closed-loop policy. It sees observations only; anything privileged
/// (e.g. a ground-truth trajectory) must be handed over at construction.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual Action act(const Observation& obs) = 0;
};

struct RolloutOptions {
  int views = 1;
  Resolution resolution{64, 64};
};

struct Trace {
  std::vector<WorldState> states;  ///< states[i] is observed before actions[i]
  std::vector<Action> actions;
};

/// Runs reset + step until termination and returns the episode outcome.
Outcome run_episode(const TaskSpec& task, const traj::TrajectorySpec& traj, std::uint64_t world_seed,
                    Controller& controller, const RolloutOptions& options = {}, Trace* trace = nullptr);

/// Replays a fixed action sequence; stops early if the world terminates.
Outcome replay_actions(const TaskSpec& task, const traj::TrajectorySpec& traj, std::uint64_t world_seed,
                       const std::vector<Action>& actions);

}  // namespace dynabench::sim
