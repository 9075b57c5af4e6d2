#pragma once

#include <optional>

#include "dynabench/rollout.hpp"

/// Non-learned reference controllers: memoryless visual pursuit and a
/// privileged oracle that leads the target using its true trajectory.
namespace dynabench::policy {

/// World-space center of the object disc drawn in view 0, estimated from the
/// bounding box of object-intensity pixels (robust to clipping at the border).
std::optional<Vec2> object_centroid(const sim::Observation& obs, const sim::TaskSpec& task);

/// Pursues the observed object centroid at a_max, closes within
/// 1.5 * contact_radius and lifts while holding. Uses the current frame only.
class ReactivePursuit : public sim::Controller {
 public:
  explicit ReactivePursuit(const sim::TaskSpec& task);
  sim::Action act(const sim::Observation& obs) override;

 protected:
  /// Believed current object position given the (possibly delayed) centroid.
  virtual Vec2 estimate(const sim::Observation& obs, Vec2 centroid);
  /// Point to steer toward.
  virtual Vec2 aim(const sim::Observation& obs, Vec2 ee, Vec2 estimate);
  sim::TaskSpec task_;
};

/// Interception time t* >= 0 with |p_obj(t + t*) - ee| = speed * t*, solved
/// with at most `iterations` Newton steps from t* = 0.
double intercept_time(const traj::TrajectorySpec& spec, double t, Vec2 ee, double speed, int iterations = 5);

/// Pursuit aimed at the predicted interception point, with the camera delay
/// compensated. The trajectory is privileged information handed over at
/// construction. On a static target it behaves exactly like ReactivePursuit.
class OraclePursuit : public ReactivePursuit {
 public:
  OraclePursuit(const sim::TaskSpec& task, traj::TrajectorySpec traj);

 protected:
  Vec2 estimate(const sim::Observation& obs, Vec2 centroid) override;
  Vec2 aim(const sim::Observation& obs, Vec2 ee, Vec2 estimate) override;

 private:
  traj::TrajectorySpec traj_;
};

/// Replays a fixed action list; holds still once it runs out.
class ActionReplay : public sim::Controller {
 public:
  explicit ActionReplay(std::vector<sim::Action> actions, int arms);
  sim::Action act(const sim::Observation& obs) override;

 private:
  std::vector<sim::Action> actions_;
  int arms_;
  std::size_t next_ = 0;
};

}  // namespace dynabench::policy
