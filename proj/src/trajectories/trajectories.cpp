#include "dynabench/trajectories.hpp"

#include <algorithm>
#include <array>
#include <numbers>
#include <string>

namespace dynabench::traj {
namespace {

constexpr int kSpeedSamples = 1024;
constexpr double kDurationTolerance = 1e-9;
constexpr double kContinuityTolerance = 1e-9;

// Solves the (n+1)x(n+1) Vandermonde system at knots j/n for one axis, by
// Gaussian elimination with partial pivoting.
std::vector<double> solve_vandermonde(const std::vector<double>& values) {
  const int m = static_cast<int>(values.size());
  const int n = m - 1;
  std::vector<std::vector<double>> a(m, std::vector<double>(m + 1));
  for (int j = 0; j < m; ++j) {
    const double t = static_cast<double>(j) / n;
    double p = 1.0;
    for (int k = 0; k < m; ++k) {
      a[j][k] = p;
      p *= t;
    }
    a[j][m] = values[j];
  }
  for (int col = 0; col < m; ++col) {
    int pivot = col;
    for (int r = col + 1; r < m; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-14) throw std::logic_error("singular interpolation system");
    std::swap(a[col], a[pivot]);
    for (int r = col + 1; r < m; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int k = col; k <= m; ++k) a[r][k] -= f * a[col][k];
    }
  }
  std::vector<double> x(m);
  for (int r = m - 1; r >= 0; --r) {
    double s = a[r][m];
    for (int k = r + 1; k < m; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return x;
}

Polynomial interpolate(const std::vector<Vec2>& points) {
  std::vector<double> xs, ys;
  for (const Vec2& p : points) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  const auto bx = solve_vandermonde(xs);
  const auto by = solve_vandermonde(ys);
  Polynomial poly;
  for (std::size_t k = 0; k < points.size(); ++k) poly.coeffs.push_back({bx[k], by[k]});
  return poly;
}

double polynomial_speed(const Polynomial& poly, double duration, double s) {
  Vec2 d{};
  for (int k = poly.degree(); k >= 1; --k) d = d * s + poly.coeffs[k] * static_cast<double>(k);
  return d.norm() / duration;
}

Segment constant_velocity_segment(const SamplerConfig& cfg, Rng& rng, Vec2 start, double duration) {
  Vec2 v{};
  if (cfg.alpha > 0.0) {
    const double speed = rng.uniform(cfg.v_min, cfg.alpha);
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    v = {speed * std::cos(angle), speed * std::sin(angle)};
  }
  return Segment{ConstantVelocity{start, v}, duration};
}

Segment polynomial_segment(const SamplerConfig& cfg, Rng& rng, double duration, std::vector<Vec2>* control_points) {
  const int n = rng.uniform_int(2, 5);
  std::vector<Vec2> points;
  for (int j = 0; j <= n; ++j) points.push_back(rng.uniform_in(cfg.workspace));
  if (control_points) *control_points = points;
  Polynomial poly;
  if (cfg.alpha > 0.0) {
    poly = interpolate(points);
  } else {
    // Static case: keep the degree but freeze the curve at its first point.
    poly.coeffs.assign(n + 1, Vec2{});
    poly.coeffs[0] = points[0];
  }
  return Segment{std::move(poly), duration};
}

void translate_segment(Segment& seg, Vec2 delta) {
  if (auto* cv = std::get_if<ConstantVelocity>(&seg.kind)) {
    cv->start += delta;
  } else {
    std::get<Polynomial>(seg.kind).coeffs[0] += delta;
  }
}

double sum_durations(const std::vector<Segment>& segments) {
  double total = 0.0;
  for (const auto& s : segments) total += s.duration;
  return total;
}

// Returns segment index and local time; t is already clamped to [0, total].
std::pair<std::size_t, double> locate(const TrajectorySpec& spec, double t) {
  double start = 0.0;
  for (std::size_t i = 0; i + 1 < spec.segments.size(); ++i) {
    const double end = start + spec.segments[i].duration;
    if (t < end) return {i, t - start};
    start = end;
  }
  const std::size_t last = spec.segments.size() - 1;
  return {last, std::min(t - start, spec.segments[last].duration)};
}

void require_segments(const TrajectorySpec& spec) {
  if (spec.segments.empty()) throw DomainError("trajectory has no segments");
}

}  // namespace

DynamicsLevel level_from_int(int level) {
  if (level < 1 || level > 3) throw DomainError("dynamics level must be 1, 2 or 3, got " + std::to_string(level));
  return static_cast<DynamicsLevel>(level);
}

Vec2 Segment::position(double tau) const {
  if (const auto* cv = std::get_if<ConstantVelocity>(&kind)) return cv->start + cv->velocity * tau;
  const auto& poly = std::get<Polynomial>(kind);
  const double s = tau / duration;
  Vec2 p{};
  for (int k = poly.degree(); k >= 0; --k) p = p * s + poly.coeffs[k];
  return p;
}

Vec2 Segment::velocity(double tau) const {
  if (const auto* cv = std::get_if<ConstantVelocity>(&kind)) return cv->velocity;
  const auto& poly = std::get<Polynomial>(kind);
  const double s = tau / duration;
  Vec2 d{};
  for (int k = poly.degree(); k >= 1; --k) d = d * s + poly.coeffs[k] * static_cast<double>(k);
  return d / duration;
}

SamplerConfig SamplerConfig::with_alpha(double alpha, Rect workspace, std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.alpha = alpha;
  cfg.v_min = 0.2 * alpha;
  cfg.workspace = workspace;
  cfg.rng_seed = seed;
  return cfg;
}

void SamplerConfig::validate() const {
  if (!(alpha >= 0.0)) throw DomainError("alpha must be >= 0");
  if (!(v_min >= 0.0) || v_min > alpha) throw DomainError("v_min must lie in [0, alpha]");
  if (workspace.empty()) throw DomainError("sampler workspace is empty");
  if (!(dirichlet_concentration > 0.0)) throw DomainError("dirichlet concentration must be positive");
}

TrajectorySpec sample_level1(const SamplerConfig& cfg, double duration) {
  cfg.validate();
  if (!(duration > 0.0)) throw DomainError("duration must be positive");
  Rng rng(cfg.rng_seed);
  const Vec2 start = rng.uniform_in(cfg.workspace);
  TrajectorySpec spec;
  spec.level = DynamicsLevel::Level1;
  spec.segments.push_back(constant_velocity_segment(cfg, rng, start, duration));
  spec.total_duration = duration;
  return spec;
}

namespace {

TrajectorySpec sample_level2_impl(const SamplerConfig& cfg, double duration, std::vector<Vec2>* control_points) {
  cfg.validate();
  if (!(duration > 0.0)) throw DomainError("duration must be positive");
  Rng rng(cfg.rng_seed);
  Segment seg = polynomial_segment(cfg, rng, duration, control_points);
  const double peak = max_speed(seg);
  if (peak > cfg.alpha && cfg.alpha > 0.0) seg.duration *= peak / cfg.alpha;
  TrajectorySpec spec;
  spec.level = DynamicsLevel::Level2;
  spec.total_duration = seg.duration;
  spec.segments.push_back(std::move(seg));
  return spec;
}

}  // namespace

TrajectorySpec sample_level2(const SamplerConfig& cfg, double duration) { return sample_level2_impl(cfg, duration, nullptr); }

TrajectorySpec sample_level2_with_points(const SamplerConfig& cfg, double duration, std::vector<Vec2>& control_points) {
  return sample_level2_impl(cfg, duration, &control_points);
}

TrajectorySpec sample_level3(const SamplerConfig& cfg, double duration) {
  cfg.validate();
  if (!(duration > 0.0)) throw DomainError("duration must be positive");
  Rng rng(cfg.rng_seed);
  const int count = rng.uniform_int(2, 3);

  std::array<double, 3> weights{};
  double total_weight = 0.0;
  do {
    total_weight = 0.0;
    for (int i = 0; i < count; ++i) {
      weights[i] = rng.gamma(cfg.dirichlet_concentration);
      total_weight += weights[i];
    }
  } while (!(std::all_of(weights.begin(), weights.begin() + count, [](double w) { return w > 0.0; })));

  TrajectorySpec spec;
  spec.level = DynamicsLevel::Level3;
  Vec2 cursor = rng.uniform_in(cfg.workspace);
  for (int i = 0; i < count; ++i) {
    const double seg_duration = duration * weights[i] / total_weight;
    Segment seg = rng.uniform() < 0.5 ? constant_velocity_segment(cfg, rng, cursor, seg_duration)
                                      : polynomial_segment(cfg, rng, seg_duration, nullptr);
    translate_segment(seg, cursor - seg.start());
    cursor = seg.end();
    spec.segments.push_back(std::move(seg));
  }
  spec.total_duration = sum_durations(spec.segments);

  // The composite, not each piece, is held to the speed cap.
  const double peak = max_speed(spec);
  if (peak > cfg.alpha && cfg.alpha > 0.0) spec = time_rescaled(spec, peak / cfg.alpha);
  return spec;
}

TrajectorySpec sample(DynamicsLevel level, const SamplerConfig& cfg, double duration) {
  switch (level) {
    case DynamicsLevel::Level1:
      return sample_level1(cfg, duration);
    case DynamicsLevel::Level2:
      return sample_level2(cfg, duration);
    case DynamicsLevel::Level3:
      return sample_level3(cfg, duration);
  }
  throw DomainError("unknown dynamics level");
}

TrajectorySpec static_spec(Vec2 pose, double duration) {
  TrajectorySpec spec;
  spec.level = DynamicsLevel::Level1;
  spec.segments.push_back(Segment{ConstantVelocity{pose, {}}, duration});
  spec.total_duration = duration;
  return spec;
}

Vec2 position_at(const TrajectorySpec& spec, double t) {
  if (t < 0.0) throw DomainError("position_at: negative time");
  require_segments(spec);
  const auto [index, tau] = locate(spec, std::min(t, spec.total_duration));
  return spec.segments[index].position(tau) + spec.origin_offset;
}

Vec2 velocity_at(const TrajectorySpec& spec, double t) {
  if (t < 0.0) throw DomainError("velocity_at: negative time");
  require_segments(spec);
  if (t > spec.total_duration) return {};
  const auto [index, tau] = locate(spec, t);
  return spec.segments[index].velocity(tau);
}

double max_speed(const Segment& segment) {
  if (const auto* cv = std::get_if<ConstantVelocity>(&segment.kind)) return cv->velocity.norm();
  const auto& poly = std::get<Polynomial>(segment.kind);
  const double d = segment.duration;

  std::array<double, kSpeedSamples + 1> speeds{};
  for (int i = 0; i <= kSpeedSamples; ++i) speeds[i] = polynomial_speed(poly, d, static_cast<double>(i) / kSpeedSamples);

  // Refine around every sampled local maximum with golden-section search.
  double best = *std::max_element(speeds.begin(), speeds.end());
  const double h = 1.0 / kSpeedSamples;
  for (int i = 0; i <= kSpeedSamples; ++i) {
    const bool left_ok = i == 0 || speeds[i] >= speeds[i - 1];
    const bool right_ok = i == kSpeedSamples || speeds[i] >= speeds[i + 1];
    if (!left_ok || !right_ok) continue;
    double lo = std::max(0.0, (i - 1) * h);
    double hi = std::min(1.0, (i + 1) * h);
    constexpr double kInvPhi = 0.6180339887498949;
    double a = hi - kInvPhi * (hi - lo);
    double b = lo + kInvPhi * (hi - lo);
    double fa = polynomial_speed(poly, d, a);
    double fb = polynomial_speed(poly, d, b);
    for (int it = 0; it < 40; ++it) {
      if (fa < fb) {
        lo = a;
        a = b;
        fa = fb;
        b = lo + kInvPhi * (hi - lo);
        fb = polynomial_speed(poly, d, b);
      } else {
        hi = b;
        b = a;
        fb = fa;
        a = hi - kInvPhi * (hi - lo);
        fa = polynomial_speed(poly, d, a);
      }
    }
    best = std::max({best, fa, fb});
  }
  return best;
}

double max_speed(const TrajectorySpec& spec) {
  double best = 0.0;
  for (const auto& seg : spec.segments) best = std::max(best, max_speed(seg));
  return best;
}

TrajectorySpec back_calculate_initial(const TrajectorySpec& spec, double t_exec, Vec2 target_pose) {
  if (!(t_exec >= 0.0) || t_exec > spec.total_duration)
    throw DomainError("back_calculate_initial: t_exec outside [0, total_duration]");
  TrajectorySpec out = spec;
  out.origin_offset += target_pose - position_at(spec, t_exec);
  return out;
}

TrajectorySpec time_rescaled(const TrajectorySpec& spec, double factor) {
  if (!(factor > 0.0)) throw DomainError("time rescale factor must be positive");
  TrajectorySpec out = spec;
  for (auto& seg : out.segments) {
    seg.duration *= factor;
    if (auto* cv = std::get_if<ConstantVelocity>(&seg.kind)) cv->velocity = cv->velocity / factor;
  }
  out.total_duration = sum_durations(out.segments);
  return out;
}

void validate(const TrajectorySpec& spec) {
  require_segments(spec);
  const std::size_t n = spec.segments.size();
  switch (spec.level) {
    case DynamicsLevel::Level1:
      if (n != 1 || spec.segments[0].is_polynomial()) throw DomainError("Level1 needs one constant-velocity segment");
      break;
    case DynamicsLevel::Level2:
      if (n != 1 || !spec.segments[0].is_polynomial()) throw DomainError("Level2 needs one polynomial segment");
      break;
    case DynamicsLevel::Level3:
      if (n < 2 || n > 3) throw DomainError("Level3 needs 2-3 segments");
      break;
  }
  for (const auto& seg : spec.segments) {
    if (!(seg.duration > 0.0)) throw DomainError("segment durations must be positive");
    if (const auto* poly = std::get_if<Polynomial>(&seg.kind)) {
      if (poly->degree() < 2 || poly->degree() > 5) throw DomainError("polynomial degree must be in [2, 5]");
    }
  }
  if (std::abs(sum_durations(spec.segments) - spec.total_duration) > kDurationTolerance)
    throw DomainError("segment durations do not sum to total_duration");
  for (std::size_t i = 1; i < n; ++i) {
    if (distance(spec.segments[i - 1].end(), spec.segments[i].start()) > kContinuityTolerance)
      throw DomainError("position discontinuity at segment junction " + std::to_string(i));
  }
}

}  // namespace dynabench::traj
