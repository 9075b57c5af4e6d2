#include "dynabench/episode.hpp"

namespace dynabench {

double encode_gripper(sim::GripperCommand cmd) {
  switch (cmd) {
    case sim::GripperCommand::Hold:
      return 0.0;
    case sim::GripperCommand::Open:
      return 1.0;
    case sim::GripperCommand::Close:
      return 2.0;
  }
  return 0.0;
}

sim::GripperCommand decode_gripper(double code) {
  if (code == 0.0) return sim::GripperCommand::Hold;
  if (code == 1.0) return sim::GripperCommand::Open;
  if (code == 2.0) return sim::GripperCommand::Close;
  throw DomainError("invalid gripper command code");
}

std::vector<double> encode_proprio(const sim::WorldState& state) {
  std::vector<double> out;
  for (std::size_t arm = 0; arm < state.ee.size(); ++arm) {
    out.push_back(state.ee[arm].position.x);
    out.push_back(state.ee[arm].position.y);
    out.push_back(state.ee[arm].gripper == sim::Gripper::Closed ? 1.0 : 0.0);
    out.push_back(state.object.attached && state.object.attached_arm == static_cast<int>(arm) ? 1.0 : 0.0);
  }
  return out;
}

std::vector<double> encode_proprio(const std::vector<sim::ProprioArm>& proprio) {
  std::vector<double> out;
  for (const auto& arm : proprio) {
    out.push_back(arm.position.x);
    out.push_back(arm.position.y);
    out.push_back(arm.gripper_closed ? 1.0 : 0.0);
    out.push_back(arm.holding ? 1.0 : 0.0);
  }
  return out;
}

std::vector<double> encode_action(const sim::Action& action) {
  std::vector<double> out;
  for (const auto& arm : action.arms) {
    out.push_back(arm.velocity.x);
    out.push_back(arm.velocity.y);
    out.push_back(encode_gripper(arm.gripper));
  }
  return out;
}

sim::Action decode_action(const std::vector<double>& values) {
  if (values.size() % kActionPerArm != 0) throw DomainError("action vector length is not a multiple of 3");
  sim::Action a;
  for (std::size_t i = 0; i < values.size(); i += kActionPerArm)
    a.arms.push_back({{values[i], values[i + 1]}, decode_gripper(values[i + 2])});
  return a;
}

std::vector<sim::Action> Episode::actions() const {
  std::vector<sim::Action> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(decode_action(s.action));
  return out;
}

}  // namespace dynabench
