#include "gr3dkit/geom3d.h"

#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "gr3dkit/error.h"
#include "gr3dkit/rng.h"
#include "oracles.h"

namespace gr3dkit {
namespace {

Box3D unit_cube() { return Box3D{}; }

TEST(EulerTest, IdentityAndYaw) {
  EXPECT_TRUE(euler_to_rotation({0, 0, 0}).matrix().isApprox(Mat3::Identity()));
  // Quarter turn about +y maps +z to +x.
  const Mat3 r = euler_to_rotation({0, 0, 0.5}).matrix();
  EXPECT_NEAR((r * Vec3::UnitZ() - Vec3::UnitX()).norm(), 0, 1e-15);
  EXPECT_NEAR((r * Vec3::UnitY() - Vec3::UnitY()).norm(), 0, 1e-15);
}

TEST(EulerTest, InverseExamples) {
  const EulerAngles zero = rotation_to_euler(Mat3::Identity());
  EXPECT_EQ(zero.pitch, 0);
  EXPECT_EQ(zero.roll, 0);
  EXPECT_EQ(zero.yaw, 0);
  const EulerAngles a = rotation_to_euler(euler_to_rotation({0.25, 0, 0}));
  EXPECT_NEAR(a.pitch, 0.25, 1e-12);
  EXPECT_NEAR(a.roll, 0, 1e-12);
  EXPECT_NEAR(a.yaw, 0, 1e-12);
}

TEST(EulerTest, GimbalLockRollIsZero) {
  for (double pitch : {0.5, -0.5}) {
    const Mat3 r = euler_to_rotation({pitch, 0.3, -0.2}).matrix();
    const EulerAngles e = rotation_to_euler(r);
    EXPECT_EQ(e.roll, 0.0);
    EXPECT_TRUE(euler_to_rotation(e).matrix().isApprox(r, 1e-9));
  }
}

TEST(EulerTest, RoundTripRandom) {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const EulerAngles e{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const Mat3 r = euler_to_rotation(e).matrix();
    const Mat3 back = euler_to_rotation(rotation_to_euler(r)).matrix();
    ASSERT_LT((r - back).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(EulerTest, RejectsNonRotation) {
  Mat3 m = Mat3::Identity();
  m(0, 0) = -1;  // reflection
  EXPECT_THROW(rotation_to_euler(m), Error);
  EXPECT_THROW(RotationMatrix::checked(2 * Mat3::Identity()), Error);
}

TEST(WrapTest, HalfOpenRange) {
  EXPECT_EQ(wrap_normalized(1.0), -1.0);
  EXPECT_EQ(wrap_normalized(-1.0), -1.0);
  EXPECT_NEAR(wrap_normalized(2.25), 0.25, 1e-15);
  EXPECT_NEAR(wrap_normalized(-1.5), 0.5, 1e-15);
}

TEST(CornersTest, UnitCube) {
  const auto c = corners(unit_cube());
  for (int i = 0; i < 8; ++i) {
    EXPECT_EQ(c[i].x(), (i & 4) ? 0.5 : -0.5);
    EXPECT_EQ(c[i].y(), (i & 2) ? 0.5 : -0.5);
    EXPECT_EQ(c[i].z(), (i & 1) ? 0.5 : -0.5);
  }
}

TEST(CornersTest, TranslationAndCentroid) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    Box3D b = oracle::random_box3d(rng);
    const auto c0 = corners(b);
    Vec3 sum = Vec3::Zero();
    for (const auto& p : c0) sum += p;
    EXPECT_LT((sum / 8 - b.center).norm(), 1e-12);
    const Vec3 t(1.5, -2, 3);
    b.center += t;
    const auto c1 = corners(b);
    for (int k = 0; k < 8; ++k) EXPECT_LT((c1[k] - c0[k] - t).norm(), 1e-12);
  }
}

TEST(CanonicalizeTest, IdentityUnchanged) {
  Box3D b;
  b.size = Vec3(1, 2, 3);
  EXPECT_EQ(canonicalize(b), b);
}

TEST(CanonicalizeTest, QuarterYawSwapsSize) {
  Box3D b;
  b.size = Vec3(1, 1, 2);
  b.angles.yaw = 0.5;
  const Box3D c = canonicalize(b);
  EXPECT_NEAR(c.angles.yaw, 0, 1e-12);
  EXPECT_NEAR(c.angles.pitch, 0, 1e-12);
  EXPECT_NEAR(c.angles.roll, 0, 1e-12);
  EXPECT_EQ(c.size, Vec3(2, 1, 1));
}

TEST(CanonicalizeTest, MaxTraceCornersIdempotent) {
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    const Box3D b = oracle::random_box3d(rng);
    const Box3D c = canonicalize(b);
    const double trace = c.rotation().matrix().trace();
    for (const auto& v : oracle::all_relabelings(b)) {
      ASSERT_GE(trace, v.rotation.trace() - 1e-9);
    }
    auto ca = corners(b), cb = corners(c);
    for (const auto& p : ca) {
      double best = INFINITY;
      for (const auto& q : cb) best = std::min(best, (p - q).norm());
      ASSERT_LT(best, 1e-9);
    }
    ASSERT_EQ(canonicalize(c), c);
  }
}

TEST(Iou3dTest, ClosedForms) {
  const Box3D a = unit_cube();
  EXPECT_EQ(iou3d(a, a), 1.0);
  Box3D b = a;
  b.center.x() = 0.5;
  EXPECT_NEAR(iou3d(a, b), 1.0 / 3.0, 1e-12);
  b.center.x() = 2;
  EXPECT_EQ(iou3d(a, b), 0.0);
}

// Octagonal cross-section of two unit squares 45 degrees apart:
// area 2(sqrt 2 - 1), so IoU = a / (2 - a).
TEST(Iou3dTest, FortyFiveDegreeYaw) {
  Box3D b = unit_cube();
  b.angles.yaw = 0.25;
  const double area = 2 * (std::numbers::sqrt2 - 1);
  const double expected = area / (2 - area);
  EXPECT_NEAR(iou3d(unit_cube(), b), expected, 1e-12);
  EXPECT_NEAR(expected, 0.70711, 0.001);
  EXPECT_NEAR(oracle::monte_carlo_iou3d(unit_cube(), b, 1000000, 1), expected, 0.003);
}

TEST(Iou3dTest, SymmetricAndBounded) {
  Rng rng(17);
  for (int i = 0; i < 500; ++i) {
    const Box3D a = oracle::random_box3d(rng);
    const Box3D b = oracle::perturbed_box3d(rng, a, 0.4);
    const double v = iou3d(a, b);
    ASSERT_EQ(v, iou3d(b, a));
    ASSERT_GE(v, 0);
    ASSERT_LE(v, 1);
  }
}

TEST(Iou3dTest, InvariantUnderCanonicalization) {
  Rng rng(19);
  for (int i = 0; i < 200; ++i) {
    const Box3D a = oracle::random_box3d(rng);
    const Box3D b = oracle::perturbed_box3d(rng, a, 0.3);
    ASSERT_NEAR(iou3d(a, b), iou3d(canonicalize(a), b), 1e-9);
  }
}

TEST(Iou3dTest, MonteCarloAgreement) {
  Rng rng(23);
  for (int i = 0; i < 20; ++i) {
    const Box3D a = oracle::random_box3d(rng);
    const Box3D b = oracle::perturbed_box3d(rng, a, 0.5);
    ASSERT_NEAR(iou3d(a, b), oracle::monte_carlo_iou3d(a, b, 200000, i), 0.01);
  }
}

TEST(Iou3dTest, NestedAndSharedFaces) {
  Box3D big;
  big.size = Vec3(2, 2, 2);
  EXPECT_NEAR(iou3d(big, unit_cube()), 1.0 / 8.0, 1e-12);
  Box3D half = unit_cube();
  half.size.x() = 0.5;
  half.center.x() = 0.25;
  EXPECT_NEAR(iou3d(unit_cube(), half), 0.5, 1e-12);
}

TEST(Iou3dTest, DegenerateBoth) {
  Box3D flat = unit_cube();
  flat.size.z() = 0;
  EXPECT_THROW(iou3d(flat, flat), Error);
}

}  // namespace
}  // namespace gr3dkit
