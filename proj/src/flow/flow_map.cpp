#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dynabench/flow.hpp"

namespace dynabench::flow {

void FlowParams::validate() const {
  if (pyramid_levels < 1 || window < 1 || iterations < 1 || poly_n < 1)
    throw DomainError("flow params: levels, window, iterations and poly_n must be positive");
  if (!(poly_sigma > 0.0)) throw DomainError("flow params: poly_sigma must be positive");
  if (!(mag_percentile > 0.0 && mag_percentile <= 100.0)) throw DomainError("flow params: mag_percentile must lie in (0, 100]");
  if (!(zero_threshold > 0.0)) throw DomainError("flow params: zero_threshold must be positive");
}

std::string FlowParams::canonical() const {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "farneback;levels=%d;window=%d;iterations=%d;poly_n=%d;poly_sigma=%.17g;percentile=%.17g;"
                "zero_threshold=%.17g",
                pyramid_levels, window, iterations, poly_n, poly_sigma, mag_percentile, zero_threshold);
  return buf;
}

GrayImage FlowMap::channel(int c) const {
  if (c < 0 || c > 2) throw DomainError("flow map channel must be 0, 1 or 2");
  GrayImage out(width, height);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = rgb[3 * i + c];
  return out;
}

namespace {

std::uint8_t to_byte(double x) { return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0)); }

// Saturation 1: the smallest channel is always 0.
void hsv_to_rgb(double hue_deg, double value, std::uint8_t* out) {
  const double hp = hue_deg / 60.0;
  const double x = value * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp) % 6) {
    case 0: r = value, g = x; break;
    case 1: r = x, g = value; break;
    case 2: g = value, b = x; break;
    case 3: g = x, b = value; break;
    case 4: r = x, b = value; break;
    default: r = value, b = x; break;
  }
  out[0] = to_byte(r);
  out[1] = to_byte(g);
  out[2] = to_byte(b);
}

}  // namespace

FlowMap flow_to_rgb(const FlowField& field, const FlowParams& params) {
  params.validate();
  const std::size_t n = static_cast<std::size_t>(field.width) * field.height;
  if (field.width < 0 || field.height < 0 || field.u.size() != n || field.v.size() != n)
    throw DomainError("flow_to_rgb: field planes do not match its dimensions");
  FlowMap map(field.width, field.height);
  if (n == 0) return map;

  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = std::hypot(static_cast<double>(field.u[i]), static_cast<double>(field.v[i]));
  // Nearest-rank percentile.
  std::vector<double> sorted = mag;
  const auto rank = static_cast<std::size_t>(std::ceil(params.mag_percentile / 100.0 * n));
  const std::size_t idx = std::clamp<std::size_t>(rank, 1, n) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + idx, sorted.end());
  const double scale = sorted[idx];
  if (scale < params.zero_threshold) return map;

  for (std::size_t i = 0; i < n; ++i) {
    double hue = std::atan2(static_cast<double>(field.v[i]), static_cast<double>(field.u[i])) * 180.0 / M_PI;
    if (hue < 0.0) hue += 360.0;
    if (hue >= 360.0) hue -= 360.0;
    hsv_to_rgb(hue, std::min(mag[i] / scale, 1.0), &map.rgb[3 * i]);
  }
  return map;
}

std::vector<FlowMap> flow_history(const std::vector<GrayImage>& frames, const FlowParams& params) {
  if (frames.size() < 2) throw DomainError("flow_history needs at least two frames");
  std::vector<FlowMap> maps;
  maps.reserve(frames.size() - 1);
  for (std::size_t i = 0; i + 1 < frames.size(); ++i)
    maps.push_back(flow_to_rgb(dense_flow(frames[i], frames[i + 1], params), params));
  return maps;
}

}  // namespace dynabench::flow
