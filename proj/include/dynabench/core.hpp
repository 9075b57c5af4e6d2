#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynabench {

/// Planar vector in meters (or m/s, depending on context).
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;

  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  constexpr double squared_norm() const { return x * x + y * y; }
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// Axis-aligned rectangle, closed on all sides.
struct Rect {
  Vec2 min;
  Vec2 max;

  constexpr double width() const { return max.x - min.x; }
  constexpr double height() const { return max.y - min.y; }
  constexpr Vec2 center() const { return {(min.x + max.x) * 0.5, (min.y + max.y) * 0.5}; }
  constexpr bool empty() const { return !(max.x > min.x && max.y > min.y); }
  constexpr bool contains(Vec2 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
  constexpr bool contains(const Rect& r) const { return contains(r.min) && contains(r.max); }
  /// Scales the rectangle about its center; 0.9 shrinks each extent by 10%.
  constexpr Rect scaled(double factor) const {
    const Vec2 c = center();
    const Vec2 half{width() * 0.5 * factor, height() * 0.5 * factor};
    return {c - half, c + half};
  }
  constexpr bool operator==(const Rect&) const = default;
};

// Error taxonomy. Domain errors are caller mistakes on values, usage errors are
// protocol violations (e.g. stepping a finished world), parse errors carry the
// byte offset where decoding failed.
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"), offset(offset) {}
  std::uint64_t offset;
};

struct UnsupportedVersion : ParseError {
  UnsupportedVersion(std::uint32_t found, std::uint32_t expected)
      : ParseError("unsupported container version " + std::to_string(found) + " (expected " +
                       std::to_string(expected) + ")",
                   4),
        found(found) {}
  std::uint32_t found;
};

/// Deterministic random source. All sampling in the project goes through this
/// so that a seed fully determines every draw.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi);
  Vec2 uniform_in(const Rect& r) { return {uniform(r.min.x, r.max.x), uniform(r.min.y, r.max.y)}; }
  double normal();
  double gamma(double shape);
  std::uint64_t fork() { return mix_seed(engine_(), 0x9e3779b97f4a7c15ULL); }

  /// Stateless seed derivation (splitmix64 finalizer over the pair).
  static std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
};

/// Row-major 2-D grid.
template <class T>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  T& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return data.size(); }
  bool operator==(const Grid&) const = default;
};

using GrayImage = Grid<std::uint8_t>;
using Mask = Grid<std::uint8_t>;

struct Resolution {
  int width = 64;
  int height = 64;
  bool operator==(const Resolution&) const = default;
};

}  // namespace dynabench
