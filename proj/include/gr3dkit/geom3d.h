#ifndef GR3DKIT_GEOM3D_H_
#define GR3DKIT_GEOM3D_H_

#include <array>

#include <Eigen/Core>

namespace gr3dkit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Euler angles normalized by pi, each in [-1, 1).
//
// Convention (fixed for the lifetime of the text format):
//   R = R_y(pi * yaw) * R_x(pi * pitch) * R_z(pi * roll)
// in the camera frame (+x right, +y down, +z forward).
struct EulerAngles {
  double pitch = 0;
  double roll = 0;
  double yaw = 0;

  friend bool operator==(const EulerAngles&, const EulerAngles&) = default;
};

// Wraps an angle (in half-turns) into [-1, 1).
double wrap_normalized(double t);

// Orthonormal 3x3 matrix with det +1.
class RotationMatrix {
 public:
  RotationMatrix() : m_(Mat3::Identity()) {}

  // Throws InvalidRotation if |R^T R - I| or |det R - 1| exceeds 1e-9.
  static RotationMatrix checked(const Mat3& m);
  // For matrices that are rotations by construction.
  static RotationMatrix unchecked(const Mat3& m) { return RotationMatrix(m); }

  const Mat3& matrix() const { return m_; }
  RotationMatrix operator*(const RotationMatrix& o) const {
    return RotationMatrix(m_ * o.m_);
  }

 private:
  explicit RotationMatrix(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

bool is_rotation(const Mat3& m, double tol = 1e-9);

RotationMatrix euler_to_rotation(const EulerAngles& angles);

// Inverse of euler_to_rotation. At gimbal lock (pitch = +-0.5) the roll is
// set to exactly 0 and the yaw absorbs the coupled angle.
EulerAngles rotation_to_euler(const Mat3& r);
EulerAngles rotation_to_euler(const RotationMatrix& r);

// Oriented box in the camera frame. size = (w, h, l) is the extent along the
// box's local x, y and z axes, which are the columns of its rotation.
struct Box3D {
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Ones();
  EulerAngles angles;

  RotationMatrix rotation() const { return euler_to_rotation(angles); }
  double volume() const { return size.prod(); }

  // w, h, l > 0, angles in [-1, 1), everything finite.
  bool valid() const;

  friend bool operator==(const Box3D& a, const Box3D& b) {
    return a.center == b.center && a.size == b.size && a.angles == b.angles;
  }
};

// Throws InvalidArgument unless `b.valid()`.
void check_box(const Box3D& b);

// Corner i is center + R * (sx w/2, sy h/2, sz l/2) where sx is the sign of
// bit 2 of i, sy of bit 1, sz of bit 0 (clear bit = negative).
std::array<Vec3, 8> corners(const Box3D& b);

// Of the 24 proper relabelings of the box axes, returns the one whose
// rotation has the largest trace. Ties within 1e-9 go to the
// lexicographically smallest (size, angles).
Box3D canonicalize(const Box3D& b);

// Exact intersection over union via convex polytope clipping.
// Throws DegenerateGeometry when both volumes are ~0.
double iou3d(const Box3D& a, const Box3D& b);

// Volume of the intersection of the two boxes.
double intersection_volume(const Box3D& a, const Box3D& b);

}  // namespace gr3dkit

#endif  // GR3DKIT_GEOM3D_H_
