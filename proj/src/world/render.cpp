#include <algorithm>
#include <cmath>

#include "dynabench/world.hpp"

namespace dynabench::sim {
namespace {

constexpr int kMinResolution = 16;

void check_resolution(Resolution r) {
  if (r.width < kMinResolution || r.height < kMinResolution)
    throw DomainError("render resolution must be at least 16x16");
}

// Sets every pixel whose center lies within the disc. Pixel centers are
// computed with the same expression as pixel_center so that the mask and the
// image agree exactly.
template <class F>
void for_disc_pixels(const TaskSpec& task, int view, Resolution res, Vec2 center, double radius, F&& f) {
  const Rect region = view_region(task, view);
  const double pw = region.width() / res.width;
  const double ph = region.height() / res.height;
  const int x0 = std::max(0, static_cast<int>(std::floor((center.x - radius - region.min.x) / pw)) - 1);
  const int x1 = std::min(res.width - 1, static_cast<int>(std::ceil((center.x + radius - region.min.x) / pw)) + 1);
  const int y0 = std::max(0, static_cast<int>(std::floor((region.max.y - center.y - radius) / ph)) - 1);
  const int y1 = std::min(res.height - 1, static_cast<int>(std::ceil((region.max.y - center.y + radius) / ph)) + 1);
  const double r2 = radius * radius;
  for (int py = y0; py <= y1; ++py) {
    for (int px = x0; px <= x1; ++px) {
      const Vec2 c = pixel_center(task, view, res, px, py);
      if ((c - center).squared_norm() <= r2) f(px, py);
    }
  }
}

}  // namespace

Rect view_region(const TaskSpec& task, int view) {
  switch (view) {
    case 0:
      return task.fov;
    case 1:
      return task.fov.scaled(0.5);
    default:
      throw DomainError("unknown camera view " + std::to_string(view));
  }
}

Vec2 pixel_center(const TaskSpec& task, int view, Resolution res, int px, int py) {
  const Rect region = view_region(task, view);
  const double pw = region.width() / res.width;
  const double ph = region.height() / res.height;
  // Row 0 is the top of the image (largest y).
  return {region.min.x + (px + 0.5) * pw, region.max.y - (py + 0.5) * ph};
}

Vec2 world_to_pixel(const TaskSpec& task, int view, Resolution res, Vec2 p) {
  const Rect region = view_region(task, view);
  return {(p.x - region.min.x) / region.width() * res.width - 0.5,
          (region.max.y - p.y) / region.height() * res.height - 0.5};
}

GrayImage render(const WorldState& state, const TaskSpec& task, int view, Resolution res) {
  check_resolution(res);
  GrayImage img(res.width, res.height, 0);
  const SceneSnapshot scene = state.camera_view();
  auto paint = [&](std::uint8_t value) { return [&img, value](int x, int y) { img.at(x, y) = value; }; };
  for (const auto& c : state.clutter) for_disc_pixels(task, view, res, c.position, c.radius, paint(kClutterIntensity));
  for (Vec2 ee : scene.ee) for_disc_pixels(task, view, res, ee, task.ee_radius, paint(kEndEffectorIntensity));
  for_disc_pixels(task, view, res, scene.object, task.object_radius, paint(kObjectIntensity));
  return img;
}

Mask ground_truth_mask(const WorldState& state, const TaskSpec& task, int view, Resolution res) {
  check_resolution(res);
  Mask mask(res.width, res.height, 0);
  for_disc_pixels(task, view, res, state.camera_view().object, task.object_radius, [&mask](int x, int y) { mask.at(x, y) = 1; });
  return mask;
}

Observation observe(const WorldState& state, const TaskSpec& task, int views, Resolution res) {
  Observation obs;
  obs.t = state.t;
  for (int v = 0; v < views; ++v) obs.frames.push_back(render(state, task, v, res));
  for (std::size_t arm = 0; arm < state.ee.size(); ++arm) {
    const bool holding = state.object.attached && state.object.attached_arm == static_cast<int>(arm);
    obs.proprio.push_back({state.ee[arm].position, state.ee[arm].gripper == Gripper::Closed, holding});
  }
  return obs;
}

}  // namespace dynabench::sim
