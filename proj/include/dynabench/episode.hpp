#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dynabench/outcome.hpp"
#include "dynabench/trajectories.hpp"
#include "dynabench/world.hpp"

namespace dynabench {

/// Per-arm proprioception layout: x, y, gripper closed (0/1), holding (0/1).
inline constexpr int kProprioPerArm = 4;
/// Per-arm action layout: vx, vy, gripper command code (see encode_gripper).
inline constexpr int kActionPerArm = 3;

double encode_gripper(sim::GripperCommand cmd);
sim::GripperCommand decode_gripper(double code);

std::vector<double> encode_proprio(const sim::WorldState& state);
/// Same layout from an observation; matches encode_proprio(state) for the state observed.
std::vector<double> encode_proprio(const std::vector<sim::ProprioArm>& proprio);
std::vector<double> encode_action(const sim::Action& action);
sim::Action decode_action(const std::vector<double>& values);

struct StepRecord {
  std::vector<GrayImage> frames;  ///< one per view
  std::vector<Mask> masks;        ///< one per view when recorded at this step, else empty
  std::vector<double> proprio;
  std::vector<double> action;
  Vec2 object_pose;
  bool operator==(const StepRecord&) const = default;
};

/// A recorded rollout. steps[k] holds the observation taken before action k.
struct Episode {
  sim::TaskSpec task;
  traj::TrajectorySpec traj;
  std::uint64_t seed = 0;  ///< world reset seed
  int views = 1;
  Resolution resolution;
  int mask_stride = 1;
  Vec2 grasp_pose;
  double t_exec = 0.0;
  Outcome outcome;
  std::vector<StepRecord> steps;
  bool operator==(const Episode&) const = default;

  std::vector<sim::Action> actions() const;
};

}  // namespace dynabench
