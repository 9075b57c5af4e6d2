#include "dynabench/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace dynabench::policy {
namespace {

Vec2 clamp_speed(Vec2 v, double cap) {
  const double n = v.norm();
  return n > cap ? v * (cap / n) : v;
}

}  // namespace

std::optional<Vec2> object_centroid(const sim::Observation& obs, const sim::TaskSpec& task) {
  if (obs.frames.empty()) return std::nullopt;
  const GrayImage& img = obs.frames[0];
  int x0 = img.width, x1 = -1, y0 = img.height, y1 = -1;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (img.at(x, y) == sim::kObjectIntensity) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) return std::nullopt;
  const Rect region = sim::view_region(task, 0);
  const double pw = region.width() / img.width;
  const double ph = region.height() / img.height;
  // A disc cut by the image border is located from its visible far edge.
  const double rx = task.object_radius / pw - 0.5;
  const double ry = task.object_radius / ph - 0.5;
  double cx = 0.5 * (x0 + x1);
  double cy = 0.5 * (y0 + y1);
  if (x0 == 0 && x1 < img.width - 1) cx = x1 - rx;
  else if (x1 == img.width - 1 && x0 > 0) cx = x0 + rx;
  if (y0 == 0 && y1 < img.height - 1) cy = y1 - ry;
  else if (y1 == img.height - 1 && y0 > 0) cy = y0 + ry;
  return Vec2{region.min.x + (cx + 0.5) * pw, region.max.y - (cy + 0.5) * ph};
}

ReactivePursuit::ReactivePursuit(const sim::TaskSpec& task) : task_(task) {}

Vec2 ReactivePursuit::estimate(const sim::Observation&, Vec2 centroid) { return centroid; }

Vec2 ReactivePursuit::aim(const sim::Observation&, Vec2, Vec2 estimate) { return estimate; }

sim::Action ReactivePursuit::act(const sim::Observation& obs) {
  sim::Action action;
  action.arms.resize(task_.arm_count());
  if (obs.proprio.empty()) return action;
  for (std::size_t arm = 0; arm < obs.proprio.size(); ++arm) {
    if (!obs.proprio[arm].holding) continue;
    action.arms[arm].velocity = task_.lift_direction * (task_.a_max / task_.lift_direction.norm());
    return action;
  }
  const auto centroid = object_centroid(obs, task_);
  if (!centroid) return action;
  const Vec2 object = estimate(obs, *centroid);

  // The arm closest to the object pursues; the others stay put.
  std::size_t arm = 0;
  for (std::size_t i = 1; i < obs.proprio.size(); ++i)
    if (distance(obs.proprio[i].position, object) < distance(obs.proprio[arm].position, object)) arm = i;
  const Vec2 ee = obs.proprio[arm].position;
  sim::ArmCommand& cmd = action.arms[arm];
  cmd.velocity = clamp_speed((aim(obs, ee, object) - ee) / task_.dt, task_.a_max);
  if (distance(ee, object) <= 1.5 * task_.contact_radius) cmd.gripper = sim::GripperCommand::Close;
  return action;
}

double intercept_time(const traj::TrajectorySpec& spec, double t, Vec2 ee, double speed, int iterations) {
  if (!(speed > 0.0)) throw DomainError("intercept_time needs a positive speed");
  double tau = 0.0;
  for (int i = 0; i < iterations; ++i) {
    const Vec2 d = traj::position_at(spec, t + tau) - ee;
    const double dist = d.norm();
    const double f = dist - speed * tau;
    if (std::abs(f) < 1e-12) break;
    const double df = (dist > 0.0 ? d.dot(traj::velocity_at(spec, t + tau)) / dist : 0.0) - speed;
    // df < 0 whenever the target is slower than the pursuer.
    const double next = df < 0.0 ? tau - f / df : dist / speed;
    tau = std::max(0.0, next);
  }
  return tau;
}

OraclePursuit::OraclePursuit(const sim::TaskSpec& task, traj::TrajectorySpec traj)
    : ReactivePursuit(task), traj_(std::move(traj)) {}

Vec2 OraclePursuit::estimate(const sim::Observation& obs, Vec2 centroid) {
  // The frame shows the object camera_latency steps ago.
  const double seen = std::max(0.0, obs.t - task_.camera_latency * task_.dt);
  return centroid + (traj::position_at(traj_, obs.t) - traj::position_at(traj_, seen));
}

Vec2 OraclePursuit::aim(const sim::Observation& obs, Vec2 ee, Vec2 estimate) {
  const double tau = intercept_time(traj_, obs.t, ee, task_.a_max);
  return estimate + (traj::position_at(traj_, obs.t + std::max(tau, task_.dt)) - traj::position_at(traj_, obs.t));
}

ActionReplay::ActionReplay(std::vector<sim::Action> actions, int arms) : actions_(std::move(actions)), arms_(arms) {}

sim::Action ActionReplay::act(const sim::Observation&) {
  if (next_ < actions_.size()) return actions_[next_++];
  sim::Action idle;
  idle.arms.resize(arms_);
  return idle;
}

}  // namespace dynabench::policy
