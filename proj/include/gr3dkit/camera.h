#ifndef GR3DKIT_CAMERA_H_
#define GR3DKIT_CAMERA_H_

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "gr3dkit/geom2d.h"
#include "gr3dkit/geom3d.h"

namespace gr3dkit {

using Vec2 = Eigen::Vector2d;

// Pinhole camera. Pixel (i, j) has its center at (i + 0.5, j + 0.5).
struct CameraIntrinsics {
  double fx = 1000;
  double fy = 1000;
  double cx = 0;
  double cy = 0;
  int width = 1;
  int height = 1;

  bool valid() const;
  friend bool operator==(const CameraIntrinsics&,
                         const CameraIntrinsics&) = default;
};

void check_intrinsics(const CameraIntrinsics& k);

// Focal length every image is rescaled to.
inline constexpr double kReferenceFocal = 1000.0;

// The exact rational kReferenceFocal / fx. Products are evaluated in
// long double, where 1000 * x is exact for any double x, so apply(fx)
// returns exactly 1000.
class IntrinsicScale {
 public:
  explicit IntrinsicScale(double fx);

  double focal() const { return fx_; }
  // Correctly rounded value of 1000 / fx.
  double value() const { return value_; }
  long double apply_exact(double x) const;
  double apply(double x) const { return static_cast<double>(apply_exact(x)); }

 private:
  double fx_;
  double value_;
};

struct NormalizedSize {
  int width = 0;
  int height = 0;
  double scale = 1.0;
};

// W' = 1000 / fx * W and H' = 1000 / fx * H, rounded half away from zero
// and at least 1. H also scales by fx, not fy.
NormalizedSize normalize_intrinsics(const CameraIntrinsics& k);

// Intrinsics of the rescaled image: fx becomes exactly 1000 and fy, cx, cy
// scale by the same factor.
CameraIntrinsics rescale_intrinsics(const CameraIntrinsics& k);

// Throws BehindCamera when p.z <= 0.
Vec2 project(const CameraIntrinsics& k, const Vec3& p);

// Throws InvalidDepth when depth <= 0.
Vec3 backproject(const CameraIntrinsics& k, const Vec2& uv, double depth);

// Metric depth raster with a per-pixel validity flag. Read-only after
// construction. A pixel is usable when its flag is set and its depth is
// finite and positive.
class DepthMap {
 public:
  DepthMap(int width, int height, std::vector<float> depth,
           std::vector<std::uint8_t> valid = {});

  int width() const { return width_; }
  int height() const { return height_; }
  float at(int u, int v) const { return depth_[index(u, v)]; }
  bool usable(int u, int v) const;

 private:
  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * width_ + u;
  }

  int width_;
  int height_;
  std::vector<float> depth_;
  std::vector<std::uint8_t> valid_;
};

// Draws up to `n` usable pixels whose centers lie inside `region`, uniformly
// without replacement (seeded partial Fisher-Yates over the row-major list
// of usable pixels), and backprojects them. Returns all usable pixels when
// fewer than n exist. Throws NoValidDepth when there are none.
std::vector<Vec3> sample_region_points(const DepthMap& depth,
                                       const CameraIntrinsics& k,
                                       const Box2D& region, std::size_t n,
                                       std::uint64_t seed);

// Rigid map from a view's camera frame into the reference (first view)
// camera frame: x_ref = rotation * x + translation.
struct Pose {
  RotationMatrix rotation;
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& x) const {
    return rotation.matrix() * x + translation;
  }
};

// (outer o inner)(x) = outer(inner(x)).
Pose compose(const Pose& outer, const Pose& inner);

Box3D transform_to_reference(const Pose& pose, const Box3D& b);

}  // namespace gr3dkit

#endif  // GR3DKIT_CAMERA_H_
