#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace adbench {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;

inline constexpr double kPi = 3.14159265358979323846;

// Wrap an angle to (-pi, pi]. Every angle subtraction in the project goes
// through this helper so the convention cannot drift.
double wrap_angle(double a);

// wrap_angle(a - b)
double angle_diff(double a, double b);

inline Vec2 heading_vector(double heading) {
  return {std::cos(heading), std::sin(heading)};
}

// Unit normal pointing to the left of the heading.
inline Vec2 left_normal(double heading) {
  return {-std::sin(heading), std::cos(heading)};
}

// Planar oriented rectangle: center, heading of the long axis, half extents
// (half.x along the heading, half.y lateral).
struct OrientedBox {
  Vec2 center{0.0, 0.0};
  double heading = 0.0;
  Vec2 half{0.0, 0.0};

  std::array<Vec2, 4> corners() const;
  bool contains(const Vec2& point) const;
  double radius() const { return half.norm(); }
};

// Separating-axis overlap test for two oriented rectangles. Touching boxes
// count as overlapping.
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b);

// Closest point on segment [a, b] to p.
Vec2 closest_point_on_segment(const Vec2& a, const Vec2& b, const Vec2& p);

// True when segments [a0,a1] and [b0,b1] intersect (including endpoints).
bool segments_intersect(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1);

double polyline_length(const std::vector<Vec2>& pts);

// Deterministic 64-bit generator (splitmix64). Used wherever scenario
// randomness must replay bit-exactly from a seed.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }
};

// FNV-1a content hash, used for the run manifest.
std::uint64_t fnv1a64(const void* data, std::size_t size);

}  // namespace adbench
