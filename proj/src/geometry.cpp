#include "adbench/geometry.hpp"

#include "adbench/error.hpp"

namespace adbench {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Unsupported: return "unsupported feature";
    case ErrorKind::Topology: return "topology error";
    case ErrorKind::Geometry: return "geometry error";
    case ErrorKind::NoRoute: return "no route";
    case ErrorKind::Placement: return "placement error";
    case ErrorKind::Lifecycle: return "lifecycle error";
    case ErrorKind::Numeric: return "numeric error";
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::InfeasibleDetour: return "infeasible detour";
    case ErrorKind::Partition: return "partition error";
    case ErrorKind::Io: return "io error";
  }
  return "error";
}

double wrap_angle(double a) {
  if (a > -kPi && a <= kPi) return a;  // already in range; keep bits intact
  double y = std::fmod(a + kPi, 2.0 * kPi);
  if (y <= 0.0) y += 2.0 * kPi;
  return y - kPi;
}

double angle_diff(double a, double b) { return wrap_angle(a - b); }

std::array<Vec2, 4> OrientedBox::corners() const {
  const Vec2 u = heading_vector(heading);
  const Vec2 n = left_normal(heading);
  const Vec2 du = u * half.x();
  const Vec2 dn = n * half.y();
  return {center + du + dn, center + du - dn, center - du - dn, center - du + dn};
}

bool OrientedBox::contains(const Vec2& point) const {
  const Vec2 d = point - center;
  const Vec2 u = heading_vector(heading);
  const Vec2 n = left_normal(heading);
  return std::abs(d.dot(u)) <= half.x() && std::abs(d.dot(n)) <= half.y();
}

namespace {

// Projects both boxes onto `axis` and reports whether the intervals are
// disjoint.
bool separated_on_axis(const Vec2& axis, const OrientedBox& a, const OrientedBox& b) {
  const auto project = [&axis](const OrientedBox& box, double& lo, double& hi) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (const Vec2& c : box.corners()) {
      const double t = c.dot(axis);
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  };
  double alo, ahi, blo, bhi;
  project(a, alo, ahi);
  project(b, blo, bhi);
  return ahi < blo || bhi < alo;
}

}  // namespace

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  const std::array<Vec2, 4> axes = {heading_vector(a.heading), left_normal(a.heading),
                                    heading_vector(b.heading), left_normal(b.heading)};
  for (const Vec2& axis : axes) {
    if (separated_on_axis(axis, a, b)) return false;
  }
  return true;
}

Vec2 closest_point_on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return a;
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

namespace {
double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }
}  // namespace

bool segments_intersect(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1) {
  const Vec2 r = a1 - a0;
  const Vec2 s = b1 - b0;
  const double denom = cross2(r, s);
  const Vec2 qp = b0 - a0;
  if (std::abs(denom) < 1e-12) {
    if (std::abs(cross2(qp, r)) > 1e-12) return false;  // parallel, not collinear
    // Collinear: check interval overlap along r.
    const double rlen2 = r.squaredNorm();
    if (rlen2 <= 0.0) return (b0 - a0).squaredNorm() <= 0.0;
    double t0 = qp.dot(r) / rlen2;
    double t1 = (b1 - a0).dot(r) / rlen2;
    if (t0 > t1) std::swap(t0, t1);
    return t1 >= 0.0 && t0 <= 1.0;
  }
  const double t = cross2(qp, s) / denom;
  const double u = cross2(qp, r) / denom;
  return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

double polyline_length(const std::vector<Vec2>& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += (pts[i] - pts[i - 1]).norm();
  return len;
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace adbench
