#include <algorithm>
#include <cmath>

#include "dynabench/policy.hpp"

namespace dynabench::policy {
namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

class DirectFlow : public FlowSource {
 public:
  explicit DirectFlow(const flow::FlowParams& p) : params_(p) {}
  flow::FlowMap get(int, int, const GrayImage& a, const GrayImage& b) override {
    return flow::flow_to_rgb(flow::dense_flow(a, b, params_), params_);
  }

 private:
  flow::FlowParams params_;
};

void append_dense(SparseInput& out, std::span<const double> values, std::uint32_t base) {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] != 0.0) out.push_back({base + static_cast<std::uint32_t>(i), values[i]});
}

}  // namespace

PatchFeatureGrid patch_features(const GrayImage& frame) {
  if (frame.width < 16 || frame.height < 16) throw DomainError("patch_features: frame must be at least 16x16");
  PatchFeatureGrid grid;
  grid.cols = ceil_div(frame.width, kPatchSize);
  grid.rows = ceil_div(frame.height, kPatchSize);
  grid.data.assign(static_cast<std::size_t>(grid.cols) * grid.rows * kDescriptorDim, 0.0);

  auto px = [&](int x, int y) -> double {
    return frame.at(std::clamp(x, 0, frame.width - 1), std::clamp(y, 0, frame.height - 1));
  };
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      double* d = grid.data.data() + (static_cast<std::size_t>(r) * grid.cols + c) * kDescriptorDim;
      double sum = 0.0;
      int count = 0;
      const int x_end = std::min(frame.width, (c + 1) * kPatchSize);
      const int y_end = std::min(frame.height, (r + 1) * kPatchSize);
      for (int y = r * kPatchSize; y < y_end; ++y) {
        for (int x = c * kPatchSize; x < x_end; ++x) {
          sum += frame.at(x, y);
          ++count;
          const double gx = px(x + 1, y) - px(x - 1, y);
          const double gy = px(x, y + 1) - px(x, y - 1);
          const double mag = std::hypot(gx, gy);
          if (mag == 0.0) continue;
          double deg = std::atan2(gy, gx) * 180.0 / M_PI;
          if (deg < 0.0) deg += 360.0;
          d[static_cast<int>(std::lround(deg / 45.0)) % 8] += mag;
        }
      }
      double norm = 0.0;
      for (int k = 0; k < 8; ++k) norm += d[k] * d[k];
      if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (int k = 0; k < 8; ++k) d[k] /= norm;
      }
      d[8] = sum / count / 255.0;
    }
  }
  return grid;
}

FutureFeature object_future_feature(const GrayImage& frame, const Mask& mask) {
  if (frame.width != mask.width || frame.height != mask.height)
    throw DomainError("object_future_feature: mask and frame dimensions differ");
  const PatchFeatureGrid grid = patch_features(frame);
  FutureFeature out;
  out.f.assign(kDescriptorDim, 0.0);
  int selected = 0;
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      int covered = 0, total = 0;
      for (int y = r * kPatchSize; y < std::min(frame.height, (r + 1) * kPatchSize); ++y)
        for (int x = c * kPatchSize; x < std::min(frame.width, (c + 1) * kPatchSize); ++x) {
          covered += mask.at(x, y) != 0;
          ++total;
        }
      if (2 * covered <= total) continue;
      const auto p = grid.patch(c, r);
      for (int k = 0; k < kDescriptorDim; ++k) out.f[k] += p[k];
      ++selected;
    }
  }
  if (selected == 0) return out;
  for (double& v : out.f) v /= selected;
  out.valid = true;
  return out;
}

std::vector<int> history_indices(int t, int history, int stride) {
  std::vector<int> idx;
  for (int k = 0; k <= history; ++k) idx.push_back(std::max(0, t - k * stride));
  return idx;
}

int FeatureLayout::frame_dim() const {
  return ceil_div(resolution.width, kPatchSize) * ceil_div(resolution.height, kPatchSize) * kDescriptorDim;
}

int FeatureLayout::input_dim() const { return frame_dim() * (1 + 3 * history) + kPositionInputsPerArm * arms; }

FeatureBuilder::FeatureBuilder(const FeatureLayout& layout, const sim::TaskSpec& task, const flow::FlowParams& flow)
    : layout_(layout), task_(task), flow_(flow) {
  if (layout.history < 0 || layout.history_stride < 1) throw DomainError("feature layout: history must be >= 0, stride >= 1");
}

const SparseInput& FeatureBuilder::frame_block(int step, const GrayImage& frame) {
  auto it = frames_.find(step);
  if (it != frames_.end()) return it->second;
  SparseInput block;
  append_dense(block, patch_features(frame).data, 0);
  return frames_.emplace(step, std::move(block)).first->second;
}

const SparseInput& FeatureBuilder::flow_block(int from, int to, const GrayImage& a, const GrayImage& b,
                                              FlowSource* source) {
  const auto key = std::make_pair(from, to);
  auto it = flows_.find(key);
  if (it != flows_.end()) return it->second;
  SparseInput block;
  // Identical frames give an exactly zero field, hence an all-black map.
  if (from != to) {
    DirectFlow direct(flow_);
    const flow::FlowMap map = (source ? source : &direct)->get(from, to, a, b);
    const std::uint32_t fd = layout_.frame_dim();
    for (int ch = 0; ch < 3; ++ch) append_dense(block, patch_features(map.channel(ch)).data, ch * fd);
  }
  return flows_.emplace(key, std::move(block)).first->second;
}

SparseInput FeatureBuilder::build(int t, const std::vector<const GrayImage*>& frames, const std::vector<double>& proprio,
                                  FlowSource* source) {
  if (proprio.size() != static_cast<std::size_t>(kProprioPerArm * layout_.arms))
    throw DomainError("feature builder: proprio length does not match the arm count");
  const auto idx = history_indices(t, layout_.history, layout_.history_stride);
  for (int i : idx)
    if (i >= static_cast<int>(frames.size()) || !frames[i]) throw DomainError("feature builder: missing history frame");

  SparseInput x = frame_block(t, *frames[idx[0]]);
  const std::uint32_t fd = layout_.frame_dim();
  for (int k = 0; k < layout_.history; ++k) {
    const int to = idx[k], from = idx[k + 1];
    const std::uint32_t base = fd * (1 + 3 * k);
    for (const Feature& f : flow_block(from, to, *frames[from], *frames[to], source))
      x.push_back({base + f.index, f.value});
  }

  const std::uint32_t base = fd * (1 + 3 * layout_.history);
  const Vec2 c = task_.fov.center();
  const double hx = task_.fov.width() * 0.5, hy = task_.fov.height() * 0.5;
  for (int arm = 0; arm < layout_.arms; ++arm) {
    const double* p = proprio.data() + kProprioPerArm * arm;
    // Position only; the gripper flags are not inputs.
    const double v[kPositionInputsPerArm] = {(p[0] - c.x) / hx, (p[1] - c.y) / hy};
    append_dense(x, v, base + kPositionInputsPerArm * arm);
  }
  return x;
}

double velocity_target(double v, double a_max) { return std::atanh(std::clamp(v / a_max, -0.995, 0.995)); }

sim::Action decode_step(std::span<const double> raw, int arms, double a_max) {
  if (raw.size() != static_cast<std::size_t>(kActionPerArm * arms)) throw DomainError("decode_step: wrong action width");
  sim::Action a;
  for (int arm = 0; arm < arms; ++arm) {
    const double* r = raw.data() + kActionPerArm * arm;
    sim::ArmCommand cmd;
    cmd.velocity = {a_max * std::tanh(r[0]), a_max * std::tanh(r[1])};
    cmd.gripper = r[2] > 0.0 ? sim::GripperCommand::Close : sim::GripperCommand::Hold;
    a.arms.push_back(cmd);
  }
  return a;
}

}  // namespace dynabench::policy
