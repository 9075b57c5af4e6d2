#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "farneback_detail.hpp"

namespace dynabench::flow::detail {
namespace {

// Basis (1, x, y, x^2, y^2, xy) evaluated at an offset.
std::array<double, 6> basis(double x, double y) { return {1.0, x, y, x * x, y * y, x * y}; }

std::array<std::array<double, 6>, 6> invert6(std::array<std::array<double, 6>, 6> a) {
  std::array<std::array<double, 6>, 6> inv{};
  for (int i = 0; i < 6; ++i) inv[i][i] = 1.0;
  for (int c = 0; c < 6; ++c) {
    int pivot = c;
    for (int r = c + 1; r < 6; ++r)
      if (std::abs(a[r][c]) > std::abs(a[pivot][c])) pivot = r;
    if (std::abs(a[pivot][c]) < 1e-300) throw std::logic_error("singular polynomial moment matrix");
    std::swap(a[c], a[pivot]);
    std::swap(inv[c], inv[pivot]);
    const double s = 1.0 / a[c][c];
    for (int k = 0; k < 6; ++k) {
      a[c][k] *= s;
      inv[c][k] *= s;
    }
    for (int r = 0; r < 6; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      if (f == 0.0) continue;
      for (int k = 0; k < 6; ++k) {
        a[r][k] -= f * a[c][k];
        inv[r][k] -= f * inv[c][k];
      }
    }
  }
  return inv;
}

}  // namespace

PolyOperator::PolyOperator(const FlowParams& p) : n(p.poly_n), g(2 * p.poly_n + 1) {
  for (int i = -n; i <= n; ++i) g[i + n] = std::exp(-(i * i) / (2.0 * p.poly_sigma * p.poly_sigma));
  std::array<std::array<double, 6>, 6> m{};
  for (int dy = -n; dy <= n; ++dy) {
    for (int dx = -n; dx <= n; ++dx) {
      const double w = g[dx + n] * g[dy + n];
      const auto phi = basis(dx, dy);
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) m[a][b] += w * phi[a] * phi[b];
    }
  }
  ginv = invert6(m);
}

void PolyOperator::solve(const std::array<double, 6>& moments, Expansion& out, int x, int y) const {
  std::array<double, 6> c{};
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) c[a] += ginv[a][b] * moments[b];
  out.b1.at(x, y) = c[1];
  out.b2.at(x, y) = c[2];
  out.a11.at(x, y) = c[3];
  out.a22.at(x, y) = c[4];
  out.a12.at(x, y) = 0.5 * c[5];
}

double border_weight(int x, int y, int w, int h) {
  static constexpr double kTable[] = {0.14, 0.14, 0.4472, 0.8, 1.0};
  auto edge = [](int i, int size) { return kTable[std::min({i, size - 1 - i, 4})]; };
  return edge(x, w) * edge(y, h);
}

double sample(const Plane& p, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(p.w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(p.h - 1));
  const int x0 = std::min(static_cast<int>(x), p.w - 2 < 0 ? 0 : p.w - 2);
  const int y0 = std::min(static_cast<int>(y), p.h - 2 < 0 ? 0 : p.h - 2);
  const int x1 = std::min(x0 + 1, p.w - 1), y1 = std::min(y0 + 1, p.h - 1);
  const double fx = x - x0, fy = y - y0;
  return (1 - fy) * ((1 - fx) * p.at(x0, y0) + fx * p.at(x1, y0)) + fy * ((1 - fx) * p.at(x0, y1) + fx * p.at(x1, y1));
}

void pixel_constraint(const Expansion& r0, const Expansion& r1, double fu, double fv, int x, int y,
                      std::array<double, 5>& out) {
  const double sx = x + fu, sy = y + fv;
  const double a11 = 0.5 * (r0.a11.at(x, y) + sample(r1.a11, sx, sy));
  const double a22 = 0.5 * (r0.a22.at(x, y) + sample(r1.a22, sx, sy));
  const double a12 = 0.5 * (r0.a12.at(x, y) + sample(r1.a12, sx, sy));
  const double db1 = -0.5 * (sample(r1.b1, sx, sy) - r0.b1.at(x, y)) + a11 * fu + a12 * fv;
  const double db2 = -0.5 * (sample(r1.b2, sx, sy) - r0.b2.at(x, y)) + a12 * fu + a22 * fv;
  const double w = border_weight(x, y, r0.b1.w, r0.b1.h);
  out[0] = w * (a11 * a11 + a12 * a12);
  out[1] = w * (a12 * (a11 + a22));
  out[2] = w * (a12 * a12 + a22 * a22);
  out[3] = w * (a11 * db1 + a12 * db2);
  out[4] = w * (a12 * db1 + a22 * db2);
}

Plane to_plane(const GrayImage& img) {
  Plane p(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) p.d[i] = img.data[i];
  return p;
}

Plane pyr_down(const Plane& src) {
  static constexpr double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  Plane rows(src.w, src.h);
  for (int y = 0; y < src.h; ++y)
    for (int x = 0; x < src.w; ++x) {
      double s = 0.0;
      for (int i = -2; i <= 2; ++i) s += k[i + 2] * src.clamped(x + i, y);
      rows.at(x, y) = s;
    }
  Plane out((src.w + 1) / 2, (src.h + 1) / 2);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      double s = 0.0;
      for (int i = -2; i <= 2; ++i) s += k[i + 2] * rows.clamped(2 * x, 2 * y + i);
      out.at(x, y) = s;
    }
  return out;
}

FlowPlanes upsample_flow(const FlowPlanes& coarse, int w, int h) {
  FlowPlanes out(w, h);
  const double sx = static_cast<double>(coarse.u.w) / w, sy = static_cast<double>(coarse.u.h) / h;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double cx = (x + 0.5) * sx - 0.5, cy = (y + 0.5) * sy - 0.5;
      out.u.at(x, y) = sample(coarse.u, cx, cy) / sx;
      out.v.at(x, y) = sample(coarse.v, cx, cy) / sy;
    }
  return out;
}

int usable_levels(int w, int h, int requested) {
  int levels = 1;
  while (levels < requested && std::min(w, h) >> levels >= 16) ++levels;
  return levels;
}

}  // namespace dynabench::flow::detail
