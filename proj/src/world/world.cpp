#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dynabench/world.hpp"

namespace dynabench {

std::string_view to_string(EventTag tag) {
  switch (tag) {
    case EventTag::Contact:
      return "contact";
    case EventTag::OutOfView:
      return "out_of_view";
    case EventTag::ClutterCollision:
      return "clutter_collision";
    case EventTag::Success:
      return "success";
    case EventTag::Timeout:
      return "timeout";
  }
  return "unknown";
}

EventTag event_tag_from_string(std::string_view name) {
  for (EventTag t : {EventTag::Contact, EventTag::OutOfView, EventTag::ClutterCollision, EventTag::Success,
                     EventTag::Timeout})
    if (to_string(t) == name) return t;
  throw DomainError("unknown event tag '" + std::string(name) + "'");
}

bool has_event(const std::vector<Event>& events, EventTag tag) {
  return std::any_of(events.begin(), events.end(), [tag](const Event& e) { return e.tag == tag; });
}

}  // namespace dynabench

namespace dynabench::sim {
namespace {

constexpr int kMaxClutterRejections = 1000;
constexpr double kSpeedCapTolerance = 1e-4;

bool inside_any_clutter(const std::vector<Clutter>& clutter, Vec2 p) {
  return std::any_of(clutter.begin(), clutter.end(),
                     [p](const Clutter& c) { return distance(p, c.position) <= c.radius; });
}

}  // namespace

SceneSnapshot WorldState::snapshot() const {
  SceneSnapshot s;
  for (const auto& e : ee) s.ee.push_back(e.position);
  s.object = object.pose;
  return s;
}

SceneSnapshot WorldState::camera_view() const { return camera_buffer.empty() ? snapshot() : camera_buffer.front(); }

int TaskSpec::max_steps() const { return static_cast<int>(std::ceil(t_max / dt - 1e-9)); }

int TaskSpec::hold_steps() const { return static_cast<int>(std::ceil(hold_window / dt - 1e-9)); }

void TaskSpec::validate() const {
  if (!(dt > 0.0)) throw DomainError("task dt must be positive");
  if (!(t_max >= dt)) throw DomainError("task t_max must be >= dt");
  if (workspace.empty() || fov.empty()) throw DomainError("task workspace and fov must be nonempty");
  if (!workspace.contains(fov)) throw DomainError("task fov must lie inside the workspace");
  if (!(contact_radius > 0.0)) throw DomainError("contact_radius must be positive");
  if (!(alpha >= 0.0)) throw DomainError("alpha must be >= 0");
  if (!(a_max > 0.0)) throw DomainError("a_max must be positive");
  if (clutter_count < 0) throw DomainError("clutter_count must be >= 0");
  if (taxonomy == Taxonomy::Tracking && !(hold_window > 0.0)) throw DomainError("tracking hold window must be positive");
  if (!(lift_height_proxy >= 0.0)) throw DomainError("lift_height_proxy must be >= 0");
  if (camera_latency < 0) throw DomainError("camera_latency must be >= 0");
}

WorldState reset(const TaskSpec& task, const traj::TrajectorySpec& traj, std::uint64_t seed) {
  task.validate();
  traj::validate(traj);
  if (traj::max_speed(traj) > task.alpha + kSpeedCapTolerance)
    throw DomainError("trajectory exceeds the task speed cap alpha");

  WorldState s;
  for (int arm = 0; arm < task.arm_count(); ++arm) {
    s.ee.push_back({task.home[arm], Gripper::Open});
    s.ee_initial.push_back(task.home[arm]);
  }
  s.object.pose = traj::position_at(traj, 0.0);

  Rng rng(seed);
  const Rect placement = task.fov.scaled(1.0 - 2.0 * task.clutter_radius / std::min(task.fov.width(), task.fov.height()));
  const double clearance = 2.0 * task.contact_radius;
  for (int i = 0; i < task.clutter_count; ++i) {
    int tries = 0;
    for (;;) {
      if (++tries > kMaxClutterRejections)
        throw ConfigError("clutter placement failed after " + std::to_string(kMaxClutterRejections) + " rejections");
      const Vec2 p = rng.uniform_in(placement);
      bool ok = distance(p, s.object.pose) >= clearance;
      for (const Vec2& h : s.ee_initial) ok = ok && distance(p, h) >= clearance + task.clutter_radius;
      if (ok) {
        s.clutter.push_back({p, task.clutter_radius});
        break;
      }
    }
  }
  return s;
}

StepResult step(const WorldState& state, const Action& action, const TaskSpec& task, const traj::TrajectorySpec& traj) {
  if (state.terminal) throw UsageError("step called on a terminal world state");
  if (static_cast<int>(action.arms.size()) != task.arm_count())
    throw DomainError("action arm count does not match the task");

  StepResult out{state, {}};
  WorldState& s = out.state;
  if (task.camera_latency > 0) {
    s.camera_buffer.push_back(state.snapshot());
    if (static_cast<int>(s.camera_buffer.size()) > task.camera_latency) s.camera_buffer.erase(s.camera_buffer.begin());
  }
  s.step = state.step + 1;
  s.t = s.step * task.dt;

  std::vector<bool> was_in_clutter;
  for (const auto& ee : state.ee) was_in_clutter.push_back(inside_any_clutter(s.clutter, ee.position));

  for (std::size_t arm = 0; arm < s.ee.size(); ++arm) {
    const ArmCommand& cmd = action.arms[arm];
    Vec2 v = cmd.velocity;
    const double speed = v.norm();
    if (speed > task.a_max) v = v * (task.a_max / speed);
    s.ee[arm].position += v * task.dt;
    const bool holding = s.object.attached && s.object.attached_arm == static_cast<int>(arm);
    if (cmd.gripper == GripperCommand::Close) s.ee[arm].gripper = Gripper::Closed;
    else if (cmd.gripper == GripperCommand::Open && !holding) s.ee[arm].gripper = Gripper::Open;
  }

  if (s.object.attached) {
    s.object.pose = s.ee[s.object.attached_arm].position + s.object.grasp_offset;
  } else {
    s.object.pose = traj::position_at(traj, s.t);
    int best_arm = -1;
    double best_dist = 0.0;
    for (std::size_t arm = 0; arm < s.ee.size(); ++arm) {
      if (s.ee[arm].gripper != Gripper::Closed) continue;
      const double d = distance(s.ee[arm].position, s.object.pose);
      if (d <= task.contact_radius && (best_arm < 0 || d < best_dist)) {
        best_arm = static_cast<int>(arm);
        best_dist = d;
      }
    }
    if (best_arm >= 0) {
      s.object.attached = true;
      s.object.attached_arm = best_arm;
      s.object.grasp_offset = s.object.pose - s.ee[best_arm].position;
      s.object.attach_pose = s.object.pose;
      s.object.attach_step = s.step;
      out.new_events.push_back({EventTag::Contact, s.t});
    }
  }

  for (std::size_t arm = 0; arm < s.ee.size(); ++arm) {
    if (!was_in_clutter[arm] && inside_any_clutter(s.clutter, s.ee[arm].position))
      out.new_events.push_back({EventTag::ClutterCollision, s.t});
  }

  if (!s.object.attached && !task.fov.contains(s.object.pose)) out.new_events.push_back({EventTag::OutOfView, s.t});

  s.events.insert(s.events.end(), out.new_events.begin(), out.new_events.end());
  if (auto outcome = check_termination(s, task)) {
    const Event terminal{outcome->success ? EventTag::Success : EventTag::Timeout, s.t};
    if (outcome->success || !has_event(s.events, EventTag::OutOfView)) {
      s.events.push_back(terminal);
      out.new_events.push_back(terminal);
    }
    s.terminal = true;
  }
  return out;
}

Outcome snapshot_outcome(const WorldState& state, bool success) {
  Outcome o;
  o.success = success;
  o.t_end = state.t;
  o.events = state.events;
  o.p_ee_initial = state.ee_initial;
  for (const auto& ee : state.ee) o.p_ee_final.push_back(ee.position);
  o.p_obj_final = state.object.pose;
  return o;
}

std::optional<Outcome> check_termination(const WorldState& state, const TaskSpec& task) {
  if (has_event(state.events, EventTag::OutOfView)) return snapshot_outcome(state, false);
  if (state.object.attached) {
    bool done = false;
    if (task.taxonomy == Taxonomy::Interception) {
      done = distance(state.object.pose, state.object.attach_pose) >= task.lift_height_proxy - 1e-12;
    } else {
      done = state.step - state.object.attach_step >= task.hold_steps();
    }
    if (done) {
      Outcome o = snapshot_outcome(state, true);
      if (!has_event(o.events, EventTag::Success)) o.events.push_back({EventTag::Success, state.t});
      return o;
    }
  }
  if (state.step >= task.max_steps()) {
    Outcome o = snapshot_outcome(state, false);
    if (!has_event(o.events, EventTag::Timeout)) o.events.push_back({EventTag::Timeout, state.t});
    return o;
  }
  return std::nullopt;
}

}  // namespace dynabench::sim
