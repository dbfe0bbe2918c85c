#include "gr3dkit/geom3d.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>
#include <vector>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "gr3dkit/error.h"

namespace gr3dkit {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGimbalEps = 1e-12;
constexpr double kTraceTieEps = 1e-9;
constexpr double kClipEps = 1e-12;
constexpr double kMergeEps = 1e-10;

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

}  // namespace

double wrap_normalized(double t) {
  if (t >= -1.0 && t < 1.0) return t;
  double r = std::fmod(t + 1.0, 2.0);
  if (r < 0) r += 2.0;
  r -= 1.0;
  return r >= 1.0 ? -1.0 : r;
}

bool is_rotation(const Mat3& m, double tol) {
  if (!m.allFinite()) return false;
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(m.determinant() - 1.0) <= tol;
}

RotationMatrix RotationMatrix::checked(const Mat3& m) {
  if (!is_rotation(m)) {
    throw Error(ErrorCode::kInvalidRotation, "matrix is not a proper rotation");
  }
  return RotationMatrix(m);
}

RotationMatrix euler_to_rotation(const EulerAngles& angles) {
  return RotationMatrix::unchecked(rot_y(kPi * angles.yaw) *
                                   rot_x(kPi * angles.pitch) *
                                   rot_z(kPi * angles.roll));
}

EulerAngles rotation_to_euler(const Mat3& r) {
  if (!is_rotation(r)) {
    throw Error(ErrorCode::kInvalidRotation, "matrix is not a proper rotation");
  }
  // R(1,2) = -sin(pitch); R(0,2), R(2,2) = sin/cos(yaw) * cos(pitch).
  const double cos_pitch = std::hypot(r(0, 2), r(2, 2));
  const double pitch = std::atan2(-r(1, 2), cos_pitch);
  double yaw = 0;
  double roll = 0;
  if (cos_pitch < kGimbalEps) {
    yaw = std::atan2(-r(2, 0), r(0, 0));
  } else {
    yaw = std::atan2(r(0, 2), r(2, 2));
    // Recover roll from the residual so it absorbs errors in yaw/pitch.
    const Mat3 rz = rot_x(pitch).transpose() * rot_y(yaw).transpose() * r;
    roll = std::atan2(rz(1, 0), rz(0, 0));
  }
  return {wrap_normalized(pitch / kPi), wrap_normalized(roll / kPi),
          wrap_normalized(yaw / kPi)};
}

EulerAngles rotation_to_euler(const RotationMatrix& r) {
  return rotation_to_euler(r.matrix());
}

bool Box3D::valid() const {
  if (!center.allFinite() || !size.allFinite()) return false;
  if (!(size.minCoeff() > 0)) return false;
  for (double a : {angles.pitch, angles.roll, angles.yaw}) {
    if (!(a >= -1.0 && a < 1.0)) return false;
  }
  return true;
}

void check_box(const Box3D& b) {
  if (!b.valid()) {
    throw Error(ErrorCode::kInvalidArgument, "invalid 3D box");
  }
}

std::array<Vec3, 8> corners(const Box3D& b) {
  const Mat3 r = b.rotation().matrix();
  const Vec3 half = 0.5 * b.size;
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    const Vec3 local((i & 4) ? half.x() : -half.x(),
                     (i & 2) ? half.y() : -half.y(),
                     (i & 1) ? half.z() : -half.z());
    out[i] = b.center + r * local;
  }
  return out;
}

Box3D canonicalize(const Box3D& b) {
  const Mat3 r = b.rotation().matrix();
  struct Candidate {
    double trace;
    Box3D box;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(24);
  std::array<int, 3> perm = {0, 1, 2};
  do {
    for (int signs = 0; signs < 8; ++signs) {
      // Column j of the relabeled frame is +-(column perm[j] of r).
      Mat3 p = Mat3::Zero();
      for (int j = 0; j < 3; ++j) {
        p(perm[j], j) = (signs >> j) & 1 ? -1.0 : 1.0;
      }
      if (p.determinant() < 0) continue;
      const Mat3 relabeled = r * p;
      Box3D out;
      out.center = b.center;
      out.size = Vec3(b.size[perm[0]], b.size[perm[1]], b.size[perm[2]]);
      // The identity relabeling keeps the input angles bit for bit, which
      // makes canonicalize idempotent.
      const bool identity = perm == std::array<int, 3>{0, 1, 2} && signs == 0;
      out.angles = identity ? b.angles : rotation_to_euler(relabeled);
      candidates.push_back({relabeled.trace(), out});
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  double best_trace = candidates.front().trace;
  for (const auto& c : candidates) best_trace = std::max(best_trace, c.trace);

  auto key = [](const Box3D& x) {
    return std::make_tuple(x.size.x(), x.size.y(), x.size.z(), x.angles.pitch,
                           x.angles.roll, x.angles.yaw);
  };
  const Candidate* chosen = nullptr;
  for (const auto& c : candidates) {
    if (c.trace < best_trace - kTraceTieEps) continue;
    if (chosen == nullptr || key(c.box) < key(chosen->box)) chosen = &c;
  }
  return chosen->box;
}

namespace {

using Polygon = std::vector<Vec3>;

// Closed convex polytope as outward-oriented (counter-clockwise seen from
// outside) faces.
struct Polytope {
  std::vector<Polygon> faces;
};

Polytope box_polytope(const std::array<Vec3, 8>& c) {
  static constexpr int kFaces[6][4] = {{0, 1, 3, 2}, {4, 6, 7, 5},
                                       {0, 4, 5, 1}, {2, 3, 7, 6},
                                       {0, 2, 6, 4}, {1, 5, 7, 3}};
  Polytope p;
  p.faces.reserve(6);
  for (const auto& f : kFaces) {
    p.faces.push_back({c[f[0]], c[f[1]], c[f[2]], c[f[3]]});
  }
  return p;
}

// Point where the segment from `in` (inside) to `out` crosses the plane.
// Always parameterized from the inside vertex so both faces sharing the
// edge produce the same point.
Vec3 crossing(const Vec3& in, double d_in, const Vec3& out, double d_out) {
  const double t = d_in / (d_in - d_out);
  return in + t * (out - in);
}

void append_unique(std::vector<Vec3>& pts, const Vec3& p) {
  for (const auto& q : pts) {
    if ((q - p).cwiseAbs().maxCoeff() <= kMergeEps) return;
  }
  pts.push_back(p);
}

// Keeps the part of `poly` with normal . x <= offset.
Polytope clip(const Polytope& poly, const Vec3& normal, double offset) {
  double dmin = 0, dmax = 0;
  bool first = true;
  for (const auto& f : poly.faces) {
    for (const auto& v : f) {
      const double d = normal.dot(v) - offset;
      if (first) {
        dmin = dmax = d;
        first = false;
      } else {
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
      }
    }
  }
  if (first || dmin >= -kClipEps) return {};
  if (dmax <= kClipEps) return poly;

  Polytope out;
  out.faces.reserve(poly.faces.size() + 1);
  std::vector<Vec3> cap;
  std::vector<double> dist;
  for (const auto& f : poly.faces) {
    const std::size_t n = f.size();
    dist.resize(n);
    for (std::size_t i = 0; i < n; ++i) dist[i] = normal.dot(f[i]) - offset;
    Polygon kept;
    kept.reserve(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = (i + 1) % n;
      const bool p_in = dist[i] <= kClipEps;
      const bool q_in = dist[j] <= kClipEps;
      if (q_in) {
        if (!p_in) {
          const Vec3 x = crossing(f[j], dist[j], f[i], dist[i]);
          kept.push_back(x);
          append_unique(cap, x);
        }
        kept.push_back(f[j]);
        if (std::abs(dist[j]) <= kClipEps) append_unique(cap, f[j]);
      } else if (p_in) {
        const Vec3 x = crossing(f[i], dist[i], f[j], dist[j]);
        kept.push_back(x);
        append_unique(cap, x);
      }
    }
    if (kept.size() >= 3) out.faces.push_back(std::move(kept));
  }

  if (cap.size() >= 3) {
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : cap) centroid += p;
    centroid /= static_cast<double>(cap.size());
    const Vec3 u = normal.unitOrthogonal();
    const Vec3 v = normal.normalized().cross(u);
    std::vector<std::pair<double, Vec3>> ordered;
    ordered.reserve(cap.size());
    for (const auto& p : cap) {
      const Vec3 d = p - centroid;
      ordered.emplace_back(std::atan2(d.dot(v), d.dot(u)), p);
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    Polygon face;
    face.reserve(ordered.size());
    for (auto& [angle, p] : ordered) face.push_back(p);
    out.faces.push_back(std::move(face));
  }
  return out;
}

double volume(const Polytope& poly) {
  if (poly.faces.empty()) return 0.0;
  const Vec3 ref = poly.faces.front().front();
  double six_v = 0;
  for (const auto& f : poly.faces) {
    const Vec3 a = f[0] - ref;
    for (std::size_t i = 1; i + 1 < f.size(); ++i) {
      six_v += a.dot((f[i] - ref).cross(f[i + 1] - ref));
    }
  }
  return std::max(six_v / 6.0, 0.0);
}

}  // namespace

double intersection_volume(const Box3D& a, const Box3D& b) {
  const double ra = 0.5 * a.size.norm();
  const double rb = 0.5 * b.size.norm();
  if ((a.center - b.center).norm() > ra + rb) return 0.0;

  Polytope poly = box_polytope(corners(a));
  const Mat3 rb_mat = b.rotation().matrix();
  for (int k = 0; k < 3 && !poly.faces.empty(); ++k) {
    const Vec3 axis = rb_mat.col(k);
    const double c = axis.dot(b.center);
    const double half = 0.5 * b.size[k];
    poly = clip(poly, axis, c + half);
    if (poly.faces.empty()) break;
    poly = clip(poly, -axis, -c + half);
  }
  return volume(poly);
}

namespace {

bool box_less(const Box3D& a, const Box3D& b) {
  auto key = [](const Box3D& x) {
    return std::make_tuple(x.center.x(), x.center.y(), x.center.z(),
                           x.size.x(), x.size.y(), x.size.z(), x.angles.pitch,
                           x.angles.roll, x.angles.yaw);
  };
  return key(a) < key(b);
}

}  // namespace

double iou3d(const Box3D& a_in, const Box3D& b_in) {
  // Clip in a fixed argument order so iou3d(a, b) == iou3d(b, a) bitwise.
  const bool swap = box_less(b_in, a_in);
  const Box3D& a = swap ? b_in : a_in;
  const Box3D& b = swap ? a_in : b_in;
  const double va = a.volume();
  const double vb = b.volume();
  if (!(va + vb > 1e-18)) {
    throw Error(ErrorCode::kDegenerateGeometry, "iou3d of zero-volume boxes");
  }
  const double inter = std::min({intersection_volume(a, b), va, vb});
  return std::clamp(inter / (va + vb - inter), 0.0, 1.0);
}

}  // namespace gr3dkit
