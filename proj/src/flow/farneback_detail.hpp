#pragma once

// Pieces shared by the parallel and the reference Farneback implementations:
// image planes, the Gaussian-weighted least-squares operator for the
// quadratic fit, the pyramid, and the coarse-to-fine driver.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "dynabench/flow.hpp"

namespace dynabench::flow::detail {

struct Plane {
  int w = 0;
  int h = 0;
  std::vector<double> d;

  Plane() = default;
  Plane(int w_, int h_) : w(w_), h(h_), d(static_cast<std::size_t>(w_) * h_, 0.0) {}
  double& at(int x, int y) { return d[static_cast<std::size_t>(y) * w + x]; }
  double at(int x, int y) const { return d[static_cast<std::size_t>(y) * w + x]; }
  double clamped(int x, int y) const { return at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)); }
};

/// Quadratic fit f(p) ~ p^T A p + b^T p + c around every pixel, p = (x, y).
struct Expansion {
  Plane b1, b2, a11, a22, a12;
  Expansion() = default;
  Expansion(int w, int h) : b1(w, h), b2(w, h), a11(w, h), a22(w, h), a12(w, h) {}
};

/// Entries of the normal equations G d = h, per pixel: g11, g12, g22, h1, h2.
struct Constraints {
  std::array<Plane, 5> m;
  Constraints() = default;
  Constraints(int w, int h) : m{Plane(w, h), Plane(w, h), Plane(w, h), Plane(w, h), Plane(w, h)} {}
};

struct FlowPlanes {
  Plane u, v;
  FlowPlanes() = default;
  FlowPlanes(int w, int h) : u(w, h), v(w, h) {}
};

/// 1-D Gaussian weights g[-n..n] and the inverse of the 6x6 moment matrix for
/// the basis (1, x, y, x^2, y^2, xy) under weights g(x) g(y).
struct PolyOperator {
  int n = 0;
  std::vector<double> g;  ///< index i corresponds to offset i - n
  std::array<std::array<double, 6>, 6> ginv{};
  explicit PolyOperator(const FlowParams& p);
  /// Maps the six weighted moments (f, xf, yf, x^2 f, y^2 f, xyf) to the
  /// expansion coefficients at one pixel.
  void solve(const std::array<double, 6>& moments, Expansion& out, int x, int y) const;
};

/// Weight applied to constraints near the image border.
double border_weight(int x, int y, int w, int h);

/// Bilinear sample with coordinates clamped to the plane.
double sample(const Plane& p, double x, double y);

/// Per-pixel displacement constraint for the current flow estimate.
void pixel_constraint(const Expansion& r0, const Expansion& r1, double fu, double fv, int x, int y,
                      std::array<double, 5>& out);

/// Regularized 2x2 solve.
inline void solve_pixel(const std::array<double, 5>& m, double& u, double& v) {
  const double idet = 1.0 / (m[0] * m[2] - m[1] * m[1] + 1e-3);
  u = (m[2] * m[3] - m[1] * m[4]) * idet;
  v = (m[0] * m[4] - m[1] * m[3]) * idet;
}

Plane to_plane(const GrayImage& img);
Plane pyr_down(const Plane& src);
FlowPlanes upsample_flow(const FlowPlanes& coarse, int w, int h);
int usable_levels(int w, int h, int requested);

/// Coarse-to-fine driver, parameterized over the kernel implementations.
template <class Kernels>
FlowField run_farneback(const GrayImage& prev, const GrayImage& next, const FlowParams& params) {
  params.validate();
  if (prev.width != next.width || prev.height != next.height)
    throw DomainError("dense_flow: frame dimensions differ");
  if (prev.width < 16 || prev.height < 16) throw DomainError("dense_flow: frames must be at least 16x16");

  const PolyOperator op(params);
  const int levels = usable_levels(prev.width, prev.height, params.pyramid_levels);
  std::vector<Plane> p0{to_plane(prev)}, p1{to_plane(next)};
  for (int l = 1; l < levels; ++l) {
    p0.push_back(pyr_down(p0.back()));
    p1.push_back(pyr_down(p1.back()));
  }

  FlowPlanes flow;
  for (int l = levels - 1; l >= 0; --l) {
    const int w = p0[l].w, h = p0[l].h;
    flow = l == levels - 1 ? FlowPlanes(w, h) : upsample_flow(flow, w, h);
    const Expansion r0 = Kernels::expand(p0[l], op);
    const Expansion r1 = Kernels::expand(p1[l], op);
    for (int it = 0; it < params.iterations; ++it) {
      Constraints c = Kernels::constraints(r0, r1, flow);
      c = Kernels::box_average(c, params.window);
      Kernels::solve(c, flow);
    }
  }

  FlowField out(prev.width, prev.height);
  for (std::size_t i = 0; i < out.u.size(); ++i) {
    out.u[i] = static_cast<float>(flow.u.d[i]);
    out.v[i] = static_cast<float>(flow.v.d[i]);
  }
  return out;
}

}  // namespace dynabench::flow::detail
