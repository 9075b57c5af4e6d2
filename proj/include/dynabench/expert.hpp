#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dynabench/episode.hpp"
#include "dynabench/rollout.hpp"

/// Scripted expert and the two-stage synchronization used to synthesize
/// demonstrations against moving targets.
namespace dynabench::expert {

struct ExpertConfig {
  double approach_speed = 0.15;
  /// Trapezoidal ramp acceleration; <= 0 means a pure constant-speed move.
  double approach_accel = 0.6;
  int settle_steps = 2;
  int max_retries = 20;
  bool randomized = false;
  /// Fraction of the approach (counted from the end) driven by live re-aiming.
  double terminal_fraction = 0.25;
  /// Fraction of the fov used for grasp-pose sampling.
  double grasp_region = 0.9;
  /// Close is also commanded once the object is within this multiple of
  /// contact_radius; 0 closes only at the planned step.
  double preclose_factor = 2.0;
  void validate(const sim::TaskSpec& task) const;
};

/// Straight-line trapezoidal move sampled at the control period.
struct ApproachPlan {
  Vec2 start;
  Vec2 goal;
  std::vector<Vec2> velocities;  ///< one command per step; lands exactly on goal
  int close_step = 0;            ///< step index at which Close is issued
  double t_exec = 0.0;           ///< close_step * dt
};

ApproachPlan plan_approach(const sim::TaskSpec& task, const ExpertConfig& cfg, Vec2 start, Vec2 goal);

/// Temporal dry run: executes the scripted grasp against a static object at
/// `grasp_pose` and returns the time of the Close command. Throws
/// DomainError if the pose is outside the workspace and std::runtime_error
/// if the static grasp does not succeed within t_max.
double dry_run(const sim::TaskSpec& task, const ExpertConfig& cfg, Vec2 grasp_pose);

/// One evaluation or demonstration draw: the task instance, the synchronized
/// trajectory, and the world seed.
struct Scenario {
  sim::TaskSpec task;
  traj::TrajectorySpec traj;
  std::uint64_t world_seed = 0;
  Vec2 grasp_pose;
  double t_exec = 0.0;
};

/// Samples grasp pose, dry-runs, samples a trajectory for task.level at
/// task.alpha and back-calculates it so the object reaches the grasp pose at
/// t_exec. Trajectories whose pre-grasp path leaves the fov are resampled.
Scenario sample_scenario(const sim::TaskSpec& task, const ExpertConfig& cfg, Rng& rng);

/// Privileged scripted controller: planned approach, live re-aim over the
/// terminal fraction, Close from the planned step on (or earlier, once the
/// object is within preclose range), then lift while still commanding Close.
class ScriptedExpert : public sim::Controller {
 public:
  ScriptedExpert(const Scenario& scenario, const ExpertConfig& cfg);
  sim::Action act(const sim::Observation& obs) override;

 private:
  sim::TaskSpec task_;
  traj::TrajectorySpec traj_;
  ExpertConfig cfg_;
  ApproachPlan plan_;
  int step_ = 0;
  Vec2 ee_;
};

struct RecordOptions {
  int views = 1;
  Resolution resolution;
  int mask_stride = 1;
};

struct SynthesisResult {
  std::optional<Episode> episode;
  int attempts = 0;  ///< rollouts executed, including the accepted one
};

SynthesisResult synthesize_episode(const sim::TaskSpec& task, const ExpertConfig& cfg, Rng& rng,
                                   const RecordOptions& record = {});

/// Runs a controller and records every observation/action pair.
Episode record_episode(const Scenario& scenario, sim::Controller& controller, const RecordOptions& record);

struct DatasetRequest {
  std::vector<sim::TaskSpec> tasks;
  int per_task_count = 0;
  ExpertConfig cfg;
  std::uint64_t seed = 0;
  RecordOptions record;
  std::filesystem::path out_dir;
};

struct TaskStats {
  std::string task;
  int draws = 0;
  int accepted = 0;
  int rollouts = 0;
  std::vector<std::uint64_t> failed_seeds;
  double acceptance_rate() const { return rollouts ? static_cast<double>(accepted) / rollouts : 0.0; }
  bool operator==(const TaskStats&) const = default;
};

struct ManifestEntry {
  std::string path;  ///< relative to the manifest directory
  std::string task;
  std::uint64_t draw_seed = 0;
  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> episodes;
  std::vector<TaskStats> stats;
  bool operator==(const DatasetManifest&) const = default;
};

inline constexpr const char* kManifestName = "manifest.json";

/// Synthesizes per_task_count draws per task in parallel and writes one
/// container per accepted episode plus manifest.json into out_dir.
DatasetManifest generate_dataset(const DatasetRequest& request);

/// Seed of draw `index` of task `task_index` under a dataset seed.
std::uint64_t draw_seed(std::uint64_t seed, std::size_t task_index, std::size_t index);

}  // namespace dynabench::expert
