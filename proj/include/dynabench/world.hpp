#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dynabench/core.hpp"
#include "dynabench/outcome.hpp"
#include "dynabench/trajectories.hpp"

/// Deterministic planar kinematic world: velocity-controlled end-effectors,
/// a kinematic target following a TrajectorySpec until grasped, clutter discs,
/// rasterized camera views and termination rules.
namespace dynabench::sim {

enum class Taxonomy { Interception, Tracking };

struct TaskSpec {
  std::string name = "intercept";
  Taxonomy taxonomy = Taxonomy::Interception;
  double hold_window = 1.0;  ///< tracking only, seconds
  traj::DynamicsLevel level = traj::DynamicsLevel::Level1;
  double alpha = 0.1;
  double dt = 0.05;
  double t_max = 8.0;
  Rect workspace{{-0.5, -0.5}, {0.5, 0.5}};
  Rect fov{{-0.32, -0.32}, {0.32, 0.32}};
  double contact_radius = 0.04;
  double lift_height_proxy = 0.05;
  int clutter_count = 0;
  bool dual_arm = false;
  double a_max = 0.5;
  double object_radius = 0.06;
  double ee_radius = 0.03;
  double clutter_radius = 0.03;
  /// Direction of the post-grasp move, away from the arm homes.
  Vec2 lift_direction{0.0, 1.0};
  /// Camera frames show the scene this many control steps in the past.
  int camera_latency = 0;
  std::array<Vec2, 2> home{{{0.0, -0.26}, {0.16, -0.26}}};

  int arm_count() const { return dual_arm ? 2 : 1; }
  /// ceil(t_max / dt), robust to representation error in the ratio.
  int max_steps() const;
  int hold_steps() const;
  void validate() const;
  bool operator==(const TaskSpec&) const = default;
};

enum class Gripper { Open, Closed };
enum class GripperCommand { Hold, Open, Close };

struct EndEffector {
  Vec2 position;
  Gripper gripper = Gripper::Open;
  bool operator==(const EndEffector&) const = default;
};

struct ObjectState {
  Vec2 pose;
  bool attached = false;
  int attached_arm = -1;
  Vec2 grasp_offset;  ///< object pose minus ee position at attachment
  Vec2 attach_pose;
  int attach_step = 0;
  bool operator==(const ObjectState&) const = default;
};

struct Clutter {
  Vec2 position;
  double radius = 0.0;
  bool operator==(const Clutter&) const = default;
};

/// What the camera saw at one step; frames are rendered from these.
struct SceneSnapshot {
  std::vector<Vec2> ee;
  Vec2 object;
  bool operator==(const SceneSnapshot&) const = default;
};

struct WorldState {
  double t = 0.0;
  int step = 0;
  std::vector<EndEffector> ee;
  std::vector<Vec2> ee_initial;
  ObjectState object;
  std::vector<Clutter> clutter;
  std::vector<Event> events;
  bool terminal = false;
  /// Snapshots of the last camera_latency steps, oldest first.
  std::vector<SceneSnapshot> camera_buffer;
  bool operator==(const WorldState&) const = default;

  SceneSnapshot snapshot() const;
  /// The scene as currently seen by the camera (delayed by the latency).
  SceneSnapshot camera_view() const;
};

struct ArmCommand {
  Vec2 velocity;
  GripperCommand gripper = GripperCommand::Hold;
  bool operator==(const ArmCommand&) const = default;
};

struct Action {
  std::vector<ArmCommand> arms;
  bool operator==(const Action&) const = default;
};

struct ProprioArm {
  Vec2 position;
  bool gripper_closed = false;
  bool holding = false;  ///< closed on the object (finger-width sensing)
};

/// What a policy receives: rendered views and proprioception, never the object state.
struct Observation {
  std::vector<GrayImage> frames;
  std::vector<ProprioArm> proprio;
  double t = 0.0;
};

struct StepResult {
  WorldState state;
  std::vector<Event> new_events;
};

/// Throws DomainError when the trajectory exceeds the task's speed cap and
/// ConfigError when clutter cannot be placed.
WorldState reset(const TaskSpec& task, const traj::TrajectorySpec& traj, std::uint64_t seed);

/// Advances one control period. Throws UsageError on a terminal state.
StepResult step(const WorldState& state, const Action& action, const TaskSpec& task, const traj::TrajectorySpec& traj);

std::optional<Outcome> check_termination(const WorldState& state, const TaskSpec& task);

/// Summary of a state that has not (yet) terminated, e.g. for diagnostics.
Outcome snapshot_outcome(const WorldState& state, bool success);

inline constexpr std::uint8_t kObjectIntensity = 255;
inline constexpr std::uint8_t kEndEffectorIntensity = 180;
inline constexpr std::uint8_t kClutterIntensity = 90;

/// World rectangle covered by a camera view: 0 is the full field of view,
/// 1 is a centered half-size crop.
Rect view_region(const TaskSpec& task, int view);
GrayImage render(const WorldState& state, const TaskSpec& task, int view, Resolution resolution);
Mask ground_truth_mask(const WorldState& state, const TaskSpec& task, int view, Resolution resolution);
Observation observe(const WorldState& state, const TaskSpec& task, int views, Resolution resolution);

/// World position of a pixel center in the given view.
Vec2 pixel_center(const TaskSpec& task, int view, Resolution resolution, int px, int py);
/// Inverse of pixel_center, continuous pixel coordinates.
Vec2 world_to_pixel(const TaskSpec& task, int view, Resolution resolution, Vec2 p);

}  // namespace dynabench::sim
