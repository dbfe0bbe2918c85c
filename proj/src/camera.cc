#include "gr3dkit/camera.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gr3dkit/error.h"
#include "gr3dkit/rng.h"

namespace gr3dkit {

static_assert(std::numeric_limits<long double>::digits >= 64,
              "IntrinsicScale needs a 64-bit long double mantissa");

bool CameraIntrinsics::valid() const {
  return std::isfinite(fx) && std::isfinite(fy) && std::isfinite(cx) &&
         std::isfinite(cy) && fx > 0 && fy > 0 && width > 0 && height > 0 &&
         cx >= 0 && cx <= width && cy >= 0 && cy <= height;
}

void check_intrinsics(const CameraIntrinsics& k) {
  if (!k.valid()) {
    throw Error(ErrorCode::kInvalidArgument, "invalid camera intrinsics");
  }
}

IntrinsicScale::IntrinsicScale(double fx) : fx_(fx), value_(kReferenceFocal / fx) {
  if (!(fx > 0) || !std::isfinite(fx)) {
    throw Error(ErrorCode::kInvalidArgument, "focal length must be positive");
  }
}

long double IntrinsicScale::apply_exact(double x) const {
  return static_cast<long double>(x) * static_cast<long double>(kReferenceFocal) /
         static_cast<long double>(fx_);
}

namespace {

int round_dimension(long double v) {
  return static_cast<int>(std::max(1LL, std::llround(v)));
}

}  // namespace

NormalizedSize normalize_intrinsics(const CameraIntrinsics& k) {
  check_intrinsics(k);
  const IntrinsicScale s(k.fx);
  return {round_dimension(s.apply_exact(k.width)),
          round_dimension(s.apply_exact(k.height)), s.value()};
}

CameraIntrinsics rescale_intrinsics(const CameraIntrinsics& k) {
  const NormalizedSize size = normalize_intrinsics(k);
  const IntrinsicScale s(k.fx);
  CameraIntrinsics out;
  out.fx = s.apply(k.fx);
  out.fy = s.apply(k.fy);
  out.cx = std::min(s.apply(k.cx), static_cast<double>(size.width));
  out.cy = std::min(s.apply(k.cy), static_cast<double>(size.height));
  out.width = size.width;
  out.height = size.height;
  return out;
}

Vec2 project(const CameraIntrinsics& k, const Vec3& p) {
  if (!(p.z() > 0)) {
    throw Error(ErrorCode::kBehindCamera, "point is not in front of the camera");
  }
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

Vec3 backproject(const CameraIntrinsics& k, const Vec2& uv, double depth) {
  if (!(depth > 0) || !std::isfinite(depth)) {
    throw Error(ErrorCode::kInvalidDepth, "depth must be positive");
  }
  return {(uv.x() - k.cx) * depth / k.fx, (uv.y() - k.cy) * depth / k.fy, depth};
}

DepthMap::DepthMap(int width, int height, std::vector<float> depth,
                   std::vector<std::uint8_t> valid)
    : width_(width), height_(height), depth_(std::move(depth)), valid_(std::move(valid)) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "depth map size must be positive");
  }
  const auto count = static_cast<std::size_t>(width) * height;
  if (depth_.size() != count) {
    throw Error(ErrorCode::kInvalidArgument, "depth raster size mismatch");
  }
  if (valid_.empty()) valid_.assign(count, 1);
  if (valid_.size() != count) {
    throw Error(ErrorCode::kInvalidArgument, "validity mask size mismatch");
  }
}

bool DepthMap::usable(int u, int v) const {
  const std::size_t i = index(u, v);
  const float d = depth_[i];
  return valid_[i] != 0 && std::isfinite(d) && d > 0;
}

std::vector<Vec3> sample_region_points(const DepthMap& depth,
                                       const CameraIntrinsics& k,
                                       const Box2D& region, std::size_t n,
                                       std::uint64_t seed) {
  check_intrinsics(k);
  check_box(region);
  if (depth.width() != k.width || depth.height() != k.height) {
    throw Error(ErrorCode::kInvalidArgument,
                "depth map and intrinsics disagree on image size");
  }
  if (region.x1 < 0 || region.y1 < 0 || region.x2 > k.width ||
      region.y2 > k.height) {
    throw Error(ErrorCode::kInvalidArgument, "region extends outside the image");
  }

  // Pixels whose centers i + 0.5 fall in [x1, x2].
  const int u0 = std::max(0, static_cast<int>(std::ceil(region.x1 - 0.5)));
  const int u1 = std::min(k.width - 1, static_cast<int>(std::floor(region.x2 - 0.5)));
  const int v0 = std::max(0, static_cast<int>(std::ceil(region.y1 - 0.5)));
  const int v1 = std::min(k.height - 1, static_cast<int>(std::floor(region.y2 - 0.5)));

  std::vector<std::pair<int, int>> pixels;
  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) {
      if (depth.usable(u, v)) pixels.emplace_back(u, v);
    }
  }
  if (pixels.empty()) {
    throw Error(ErrorCode::kNoValidDepth, "no valid depth inside the region");
  }

  const std::size_t take = std::min(n, pixels.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + rng.below(pixels.size() - i);
    std::swap(pixels[i], pixels[j]);
  }

  std::vector<Vec3> points;
  points.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const auto [u, v] = pixels[i];
    points.push_back(backproject(k, Vec2(u + 0.5, v + 0.5), depth.at(u, v)));
  }
  return points;
}

Pose compose(const Pose& outer, const Pose& inner) {
  return {outer.rotation * inner.rotation, outer.apply(inner.translation)};
}

Box3D transform_to_reference(const Pose& pose, const Box3D& b) {
  Box3D out;
  out.center = pose.apply(b.center);
  out.size = b.size;
  out.angles = pose.rotation.matrix() == Mat3::Identity()
                   ? b.angles
                   : rotation_to_euler(pose.rotation * b.rotation());
  return out;
}

}  // namespace gr3dkit
