#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dynabench/expert.hpp"

namespace dynabench::expert {
namespace {

// Arc length along a trapezoidal (or triangular) velocity profile.
struct Profile {
  double distance = 0.0;
  double speed = 0.0;
  double accel = 0.0;  // 0 = constant speed
  double t_ramp = 0.0;
  double peak = 0.0;
  double duration = 0.0;

  Profile(double d, double v, double a) : distance(d), speed(v), accel(a > 0.0 ? a : 0.0) {
    if (distance <= 0.0) return;
    if (accel == 0.0) {
      peak = speed;
      duration = distance / speed;
      return;
    }
    t_ramp = speed / accel;
    if (accel * t_ramp * t_ramp >= distance) {
      t_ramp = std::sqrt(distance / accel);
      peak = accel * t_ramp;
      duration = 2.0 * t_ramp;
    } else {
      peak = speed;
      duration = distance / speed + t_ramp;
    }
  }

  double arc(double t) const {
    if (t >= duration) return distance;
    if (accel == 0.0) return peak * t;
    if (t <= t_ramp) return 0.5 * accel * t * t;
    const double ramp = 0.5 * accel * t_ramp * t_ramp;
    const double t_down = duration - t_ramp;
    if (t <= t_down) return ramp + peak * (t - t_ramp);
    const double r = duration - t;
    return distance - 0.5 * accel * r * r;
  }
};

double pursuit_speed(const sim::TaskSpec& task, const ExpertConfig& cfg) {
  return std::min(1.5 * cfg.approach_speed, 0.9 * task.a_max);
}

Vec2 clamp_speed(Vec2 v, double cap) {
  const double n = v.norm();
  return n > cap ? v * (cap / n) : v;
}

}  // namespace

void ExpertConfig::validate(const sim::TaskSpec& task) const {
  if (!(approach_speed > 0.0) || approach_speed > task.a_max)
    throw DomainError("approach_speed must lie in (0, a_max]");
  if (settle_steps < 0) throw DomainError("settle_steps must be >= 0");
  if (max_retries < 1) throw DomainError("max_retries must be >= 1");
  if (!(terminal_fraction >= 0.0 && terminal_fraction <= 1.0)) throw DomainError("terminal_fraction must lie in [0, 1]");
  if (!(grasp_region > 0.0 && grasp_region <= 1.0)) throw DomainError("grasp_region must lie in (0, 1]");
  if (!(preclose_factor >= 0.0)) throw DomainError("preclose_factor must be >= 0");
}

ApproachPlan plan_approach(const sim::TaskSpec& task, const ExpertConfig& cfg, Vec2 start, Vec2 goal) {
  ApproachPlan plan;
  plan.start = start;
  plan.goal = goal;
  const Vec2 delta = goal - start;
  const double d = delta.norm();
  if (d > 0.0) {
    const Profile profile(d, cfg.approach_speed, cfg.approach_accel);
    const int n = static_cast<int>(std::ceil(profile.duration / task.dt - 1e-9));
    const Vec2 dir = delta / d;
    for (int k = 0; k < n; ++k) {
      const double ds = profile.arc((k + 1) * task.dt) - profile.arc(k * task.dt);
      plan.velocities.push_back(dir * (ds / task.dt));
    }
  }
  plan.close_step = static_cast<int>(plan.velocities.size()) + cfg.settle_steps;
  plan.t_exec = plan.close_step * task.dt;
  return plan;
}

ScriptedExpert::ScriptedExpert(const Scenario& scenario, const ExpertConfig& cfg)
    : task_(scenario.task),
      traj_(scenario.traj),
      cfg_(cfg),
      plan_(plan_approach(scenario.task, cfg, scenario.task.home[0], scenario.grasp_pose)),
      ee_(scenario.task.home[0]) {}

sim::Action ScriptedExpert::act(const sim::Observation& obs) {
  const int k = step_++;
  if (obs.proprio.empty()) throw DomainError("scripted expert needs proprioception");
  ee_ = obs.proprio[0].position;
  const double t = k * task_.dt;

  sim::Action action;
  action.arms.resize(task_.arm_count());
  sim::ArmCommand& cmd = action.arms[0];

  if (obs.proprio[0].holding) {
    const Vec2 dir = task_.lift_direction / task_.lift_direction.norm();
    cmd.velocity = dir * cfg_.approach_speed;
    cmd.gripper = sim::GripperCommand::Close;
    return action;
  }

  const int n = static_cast<int>(plan_.velocities.size());
  const int terminal_start = static_cast<int>(std::floor(n * (1.0 - cfg_.terminal_fraction)));
  if (k < terminal_start) {
    cmd.velocity = plan_.velocities[k];
  } else if (k <= plan_.close_step) {
    const Vec2 target = traj::position_at(traj_, (plan_.close_step + 1) * task_.dt);
    const int steps_left = plan_.close_step + 1 - k;
    cmd.velocity = clamp_speed((target - ee_) / (steps_left * task_.dt), pursuit_speed(task_, cfg_));
  } else {
    const Vec2 target = traj::position_at(traj_, t + task_.dt);
    cmd.velocity = clamp_speed((target - ee_) / task_.dt, pursuit_speed(task_, cfg_));
  }
  const bool in_range = distance(ee_, traj::position_at(traj_, t)) <= cfg_.preclose_factor * task_.contact_radius;
  if (k >= plan_.close_step || in_range) cmd.gripper = sim::GripperCommand::Close;
  return action;
}

double dry_run(const sim::TaskSpec& task, const ExpertConfig& cfg, Vec2 grasp_pose) {
  if (!task.workspace.contains(grasp_pose)) throw DomainError("dry_run: grasp pose outside the workspace");
  cfg.validate(task);
  sim::TaskSpec static_task = task;
  static_task.clutter_count = 0;
  Scenario scenario{static_task, traj::static_spec(grasp_pose, task.t_max), 0, grasp_pose, 0.0};
  ScriptedExpert expert(scenario, cfg);
  sim::RolloutOptions blind;
  blind.views = 0;
  const Outcome outcome = sim::run_episode(static_task, scenario.traj, 0, expert, blind);
  if (!outcome.success) throw std::runtime_error("dry run did not reach the grasp pose within t_max");
  return plan_approach(task, cfg, task.home[0], grasp_pose).t_exec;
}

}  // namespace dynabench::expert
