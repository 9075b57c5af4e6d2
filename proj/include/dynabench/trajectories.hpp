#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "dynabench/core.hpp"

/// Target motion: the three hierarchical dynamics levels, their analytic
/// evaluation, and back-calculation of the initial pose.
namespace dynabench::traj {

enum class DynamicsLevel : int { Level1 = 1, Level2 = 2, Level3 = 3 };

DynamicsLevel level_from_int(int level);

/// Straight-line motion from `start` at constant `velocity`.
struct ConstantVelocity {
  Vec2 start;
  Vec2 velocity;
  bool operator==(const ConstantVelocity&) const = default;
};

/// x(tau) = sum_k coeffs[k] * (tau / duration)^k, with coeffs[0] the start point.
struct Polynomial {
  std::vector<Vec2> coeffs;
  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  bool operator==(const Polynomial&) const = default;
};

struct Segment {
  std::variant<ConstantVelocity, Polynomial> kind;
  double duration = 0.0;

  Vec2 position(double tau) const;
  Vec2 velocity(double tau) const;
  Vec2 start() const { return position(0.0); }
  Vec2 end() const { return position(duration); }
  bool is_polynomial() const { return std::holds_alternative<Polynomial>(kind); }
  bool operator==(const Segment&) const = default;
};

struct TrajectorySpec {
  DynamicsLevel level = DynamicsLevel::Level1;
  std::vector<Segment> segments;
  double total_duration = 0.0;
  Vec2 origin_offset;
  bool operator==(const TrajectorySpec&) const = default;
};

struct SamplerConfig {
  double alpha = 0.1;  ///< maximum target speed, m/s
  double v_min = 0.02;
  Rect workspace{{-0.3, -0.3}, {0.3, 0.3}};
  double dirichlet_concentration = 1.0;
  std::uint64_t rng_seed = 0;

  /// v_min defaults to 0.2 * alpha.
  static SamplerConfig with_alpha(double alpha, Rect workspace, std::uint64_t seed);
  void validate() const;
};

inline constexpr double kDefaultLevel1Duration = 10.0;

TrajectorySpec sample_level1(const SamplerConfig& cfg, double duration = kDefaultLevel1Duration);
TrajectorySpec sample_level2(const SamplerConfig& cfg, double duration);
/// Same draw as sample_level2, also reporting the interpolated control points.
TrajectorySpec sample_level2_with_points(const SamplerConfig& cfg, double duration, std::vector<Vec2>& control_points);
TrajectorySpec sample_level3(const SamplerConfig& cfg, double duration);
TrajectorySpec sample(DynamicsLevel level, const SamplerConfig& cfg, double duration);

/// A parked object: Level1 spec with zero velocity at `pose`.
TrajectorySpec static_spec(Vec2 pose, double duration);

/// Throws DomainError for t < 0; clamps to the terminal pose past the end.
Vec2 position_at(const TrajectorySpec& spec, double t);
/// Right-hand derivative at junctions; zero after total_duration.
Vec2 velocity_at(const TrajectorySpec& spec, double t);
double max_speed(const TrajectorySpec& spec);
double max_speed(const Segment& segment);

/// Translates the spec so position_at(result, t_exec) == target_pose.
TrajectorySpec back_calculate_initial(const TrajectorySpec& spec, double t_exec, Vec2 target_pose);

/// Time-rescales so the path is unchanged but traversed `factor` times slower.
TrajectorySpec time_rescaled(const TrajectorySpec& spec, double factor);

/// Checks the structural invariants; throws DomainError on violation.
void validate(const TrajectorySpec& spec);

}  // namespace dynabench::traj
