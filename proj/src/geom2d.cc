#include "gr3dkit/geom2d.h"

#include <algorithm>
#include <cmath>

#include "gr3dkit/error.h"
#include "gr3dkit/rng.h"

namespace gr3dkit {

bool Box2D::valid() const {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
         std::isfinite(y2) && x1 <= x2 && y1 <= y2;
}

void check_box(const Box2D& b) {
  if (!b.valid()) {
    throw Error(ErrorCode::kInvalidArgument, "invalid 2D box");
  }
}

void check_jitter(const JitterParams& p) {
  if (!(p.center_frac >= 0 && p.center_frac < 1 && p.size_frac >= 0 &&
        p.size_frac < 1)) {
    throw Error(ErrorCode::kInvalidArgument,
                "jitter fractions must lie in [0, 1)");
  }
}

double iou2d(const Box2D& a, const Box2D& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double inter = (iw > 0 && ih > 0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0)) {
    throw Error(ErrorCode::kDegenerateGeometry, "iou2d of zero-area boxes");
  }
  return std::clamp(inter / uni, 0.0, 1.0);
}

Box2D clamp_to_image(const Box2D& b, double w, double h) {
  if (b.x2 <= 0 || b.y2 <= 0 || b.x1 >= w || b.y1 >= h) {
    throw Error(ErrorCode::kEmptyAfterClamp, "box lies outside the image");
  }
  return {std::clamp(b.x1, 0.0, w), std::clamp(b.y1, 0.0, h),
          std::clamp(b.x2, 0.0, w), std::clamp(b.y2, 0.0, h)};
}

Box2D jitter_unclamped(const Box2D& b, const JitterParams& p) {
  check_jitter(p);
  if (p.is_zero()) return b;
  Rng rng(p.seed);
  const double w = b.width();
  const double h = b.height();
  const double dx = rng.uniform(-1, 1) * p.center_frac * w;
  const double dy = rng.uniform(-1, 1) * p.center_frac * h;
  const double sx = rng.uniform(-1, 1) * p.size_frac;
  const double sy = rng.uniform(-1, 1) * p.size_frac;
  // Written as edge offsets so that zero draws reproduce `b` bit for bit.
  return {b.x1 + dx - 0.5 * sx * w, b.y1 + dy - 0.5 * sy * h,
          b.x2 + dx + 0.5 * sx * w, b.y2 + dy + 0.5 * sy * h};
}

namespace {

// Clamp [lo, hi] to [0, extent]; an empty result becomes one pixel wide.
void clamp_axis(double& lo, double& hi, double extent) {
  lo = std::clamp(lo, 0.0, extent);
  hi = std::clamp(hi, 0.0, extent);
  if (hi <= lo) {
    lo = std::min(lo, std::max(extent - 1.0, 0.0));
    hi = std::min(lo + 1.0, extent);
  }
}

}  // namespace

Box2D jitter(const Box2D& b, const JitterParams& p, int image_w, int image_h) {
  if (image_w <= 0 || image_h <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "image size must be positive");
  }
  Box2D out = jitter_unclamped(b, p);
  if (p.is_zero()) return out;
  clamp_axis(out.x1, out.x2, image_w);
  clamp_axis(out.y1, out.y2, image_h);
  return out;
}

}  // namespace gr3dkit
