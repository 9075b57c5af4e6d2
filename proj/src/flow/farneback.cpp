#include "farneback_detail.hpp"

namespace dynabench::flow {
namespace {

using namespace detail;

struct SeparableKernels {
  static Expansion expand(const Plane& img, const PolyOperator& op) {
    const int w = img.w, h = img.h, n = op.n;
    Plane r0(w, h), r1(w, h), r2(w, h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (int i = -n; i <= n; ++i) {
          const double f = op.g[i + n] * img.clamped(x + i, y);
          s0 += f;
          s1 += i * f;
          s2 += i * i * f;
        }
        r0.at(x, y) = s0;
        r1.at(x, y) = s1;
        r2.at(x, y) = s2;
      }
    Expansion out(w, h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        std::array<double, 6> m{};
        for (int j = -n; j <= n; ++j) {
          const double g = op.g[j + n];
          const double c0 = r0.clamped(x, y + j), c1 = r1.clamped(x, y + j), c2 = r2.clamped(x, y + j);
          m[0] += g * c0;
          m[1] += g * c1;
          m[2] += g * j * c0;
          m[3] += g * c2;
          m[4] += g * j * j * c0;
          m[5] += g * j * c1;
        }
        op.solve(m, out, x, y);
      }
    return out;
  }

  static Constraints constraints(const Expansion& r0, const Expansion& r1, const FlowPlanes& flow) {
    const int w = flow.u.w, h = flow.u.h;
    Constraints c(w, h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        std::array<double, 5> e;
        pixel_constraint(r0, r1, flow.u.at(x, y), flow.v.at(x, y), x, y, e);
        for (int k = 0; k < 5; ++k) c.m[k].at(x, y) = e[k];
      }
    return c;
  }

  static Constraints box_average(const Constraints& c, int window) {
    const int w = c.m[0].w, h = c.m[0].h, r = window / 2;
    const double norm = 1.0 / (static_cast<double>(2 * r + 1) * (2 * r + 1));
    Constraints out(w, h);
    for (int k = 0; k < 5; ++k) {
      Plane rows(w, h);
#pragma omp parallel for schedule(static)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double s = 0.0;
          for (int i = -r; i <= r; ++i) s += c.m[k].clamped(x + i, y);
          rows.at(x, y) = s;
        }
#pragma omp parallel for schedule(static)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double s = 0.0;
          for (int j = -r; j <= r; ++j) s += rows.clamped(x, y + j);
          out.m[k].at(x, y) = s * norm;
        }
    }
    return out;
  }

  static void solve(const Constraints& c, FlowPlanes& flow) {
    const int w = flow.u.w, h = flow.u.h;
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::array<double, 5> m{c.m[0].at(x, y), c.m[1].at(x, y), c.m[2].at(x, y), c.m[3].at(x, y),
                                      c.m[4].at(x, y)};
        solve_pixel(m, flow.u.at(x, y), flow.v.at(x, y));
      }
  }
};

}  // namespace

FlowField dense_flow(const GrayImage& prev, const GrayImage& next, const FlowParams& params) {
  return run_farneback<SeparableKernels>(prev, next, params);
}

}  // namespace dynabench::flow
