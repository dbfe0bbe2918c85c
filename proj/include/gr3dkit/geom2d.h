#ifndef GR3DKIT_GEOM2D_H_
#define GR3DKIT_GEOM2D_H_

#include <cstdint>

namespace gr3dkit {

// Axis-aligned pixel rectangle, origin at the top-left of the image.
// Coordinates are continuous; rounding only happens when text is emitted.
struct Box2D {
  double x1 = 0;
  double y1 = 0;
  double x2 = 0;
  double y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x1 + x2); }
  double center_y() const { return 0.5 * (y1 + y2); }

  // x1 <= x2, y1 <= y2, all finite.
  bool valid() const;

  friend bool operator==(const Box2D&, const Box2D&) = default;
};

// Throws InvalidArgument unless `b.valid()`.
void check_box(const Box2D& b);

struct JitterParams {
  double center_frac = 0.1;  // max center shift, relative to box w/h
  double size_frac = 0.1;    // max relative size change
  std::uint64_t seed = 0;

  bool is_zero() const { return center_frac == 0 && size_frac == 0; }
};

// Throws InvalidArgument unless 0 <= center_frac, size_frac < 1.
void check_jitter(const JitterParams& p);

// Intersection over union. Throws DegenerateGeometry if the union is empty.
double iou2d(const Box2D& a, const Box2D& b);

// Intersects with [0,w]x[0,h]. Throws EmptyAfterClamp when `b` does not
// overlap the open image rectangle.
Box2D clamp_to_image(const Box2D& b, double w, double h);

// The jittered box before clamping: center shifted by U(-c, c) * (w, h),
// width and height scaled by U(1-s, 1+s), each axis drawn independently.
Box2D jitter_unclamped(const Box2D& b, const JitterParams& p);

// jitter_unclamped() followed by clamping to the image. A collapsed axis
// becomes a 1-pixel extent at the clamp side, so the result is always valid.
Box2D jitter(const Box2D& b, const JitterParams& p, int image_w, int image_h);

}  // namespace gr3dkit

#endif  // GR3DKIT_GEOM2D_H_
