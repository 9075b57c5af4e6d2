#include "dynabench/rollout.hpp"

namespace dynabench::sim {

Outcome run_episode(const TaskSpec& task, const traj::TrajectorySpec& traj, std::uint64_t world_seed,
                    Controller& controller, const RolloutOptions& options, Trace* trace) {
  WorldState state = reset(task, traj, world_seed);
  while (!state.terminal) {
    const Observation obs = observe(state, task, options.views, options.resolution);
    Action action = controller.act(obs);
    if (trace) {
      trace->states.push_back(state);
      trace->actions.push_back(action);
    }
    state = step(state, action, task, traj).state;
  }
  if (trace) trace->states.push_back(state);
  return *check_termination(state, task);
}

Outcome replay_actions(const TaskSpec& task, const traj::TrajectorySpec& traj, std::uint64_t world_seed,
                       const std::vector<Action>& actions) {
  WorldState state = reset(task, traj, world_seed);
  for (const Action& a : actions) {
    if (state.terminal) break;
    state = step(state, a, task, traj).state;
  }
  if (auto outcome = check_termination(state, task)) return *outcome;
  return snapshot_outcome(state, false);
}

}  // namespace dynabench::sim
