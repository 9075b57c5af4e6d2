#include "dynabench/policy.hpp"

namespace dynabench::policy {

ChunkPolicy::ChunkPolicy(PolicyCheckpoint ckpt, const sim::TaskSpec& task, int replan_every)
    : ckpt_(std::move(ckpt)),
      task_(task),
      replan_every_(replan_every),
      features_({ckpt_.history, ckpt_.history_stride, ckpt_.resolution, task.arm_count()}, task, ckpt_.flow) {
  const NetShape& s = ckpt_.params.shape;
  s.validate();
  if (replan_every < 1 || replan_every > s.chunk) throw DomainError("replan interval must lie in [1, K]");
  if (s.input_dim != features_.layout().input_dim() || s.action_dim != kActionPerArm * task.arm_count())
    throw DomainError("checkpoint shape does not match the task's observation layout");
}

sim::Action ChunkPolicy::act(const sim::Observation& obs) {
  if (obs.frames.empty()) throw DomainError("chunk policy needs camera view 0");
  const int t = step_++;
  frames_.push_back(obs.frames[0]);
  const int width = ckpt_.params.shape.action_dim;
  if (chunk_.empty() || t - chunk_start_ >= replan_every_) {
    std::vector<const GrayImage*> frames;
    frames.reserve(frames_.size());
    for (const auto& f : frames_) frames.push_back(&f);
    chunk_ = forward(ckpt_.params, features_.build(t, frames, encode_proprio(obs.proprio))).actions;
    chunk_start_ = t;
  }
  return decode_step(std::span(chunk_).subspan(static_cast<std::size_t>(t - chunk_start_) * width, width),
                     task_.arm_count(), task_.a_max);
}

}  // namespace dynabench::policy
