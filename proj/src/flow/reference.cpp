#include "farneback_detail.hpp"

namespace dynabench::flow {
namespace {

using namespace detail;

// Direct 2-D sums, single thread.
struct DirectKernels {
  static Expansion expand(const Plane& img, const PolyOperator& op) {
    const int n = op.n;
    Expansion out(img.w, img.h);
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) {
        std::array<double, 6> m{};
        for (int dy = -n; dy <= n; ++dy)
          for (int dx = -n; dx <= n; ++dx) {
            const double f = op.g[dx + n] * op.g[dy + n] * img.clamped(x + dx, y + dy);
            m[0] += f;
            m[1] += dx * f;
            m[2] += dy * f;
            m[3] += dx * dx * f;
            m[4] += dy * dy * f;
            m[5] += dx * dy * f;
          }
        op.solve(m, out, x, y);
      }
    return out;
  }

  static Constraints constraints(const Expansion& r0, const Expansion& r1, const FlowPlanes& flow) {
    Constraints c(flow.u.w, flow.u.h);
    for (int y = 0; y < flow.u.h; ++y)
      for (int x = 0; x < flow.u.w; ++x) {
        std::array<double, 5> e;
        pixel_constraint(r0, r1, flow.u.at(x, y), flow.v.at(x, y), x, y, e);
        for (int k = 0; k < 5; ++k) c.m[k].at(x, y) = e[k];
      }
    return c;
  }

  static Constraints box_average(const Constraints& c, int window) {
    const int w = c.m[0].w, h = c.m[0].h, r = window / 2;
    const double count = static_cast<double>(2 * r + 1) * (2 * r + 1);
    Constraints out(w, h);
    for (int k = 0; k < 5; ++k)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double s = 0.0;
          for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) s += c.m[k].clamped(x + dx, y + dy);
          out.m[k].at(x, y) = s / count;
        }
    return out;
  }

  static void solve(const Constraints& c, FlowPlanes& flow) {
    for (std::size_t i = 0; i < flow.u.d.size(); ++i) {
      const std::array<double, 5> m{c.m[0].d[i], c.m[1].d[i], c.m[2].d[i], c.m[3].d[i], c.m[4].d[i]};
      solve_pixel(m, flow.u.d[i], flow.v.d[i]);
    }
  }
};

}  // namespace

FlowField dense_flow_reference(const GrayImage& prev, const GrayImage& next, const FlowParams& params) {
  return run_farneback<DirectKernels>(prev, next, params);
}

}  // namespace dynabench::flow
