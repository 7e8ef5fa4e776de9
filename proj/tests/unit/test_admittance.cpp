#include <gtest/gtest.h>

#include <cmath>

#include "rcmteleop/admittance.hpp"
#include "rcmteleop/errors.hpp"
#include "test_util.hpp"

using namespace rcmteleop;

TEST(Admittance, ShaftDirection) {
  EXPECT_LT((shaft_direction(Vec3(0, 0, 2)) - Vec3(0, 0, 1)).norm(), 1e-15);
  EXPECT_LT((shaft_direction(Vec3(3, 4, 0)) - Vec3(0.6, 0.8, 0)).norm(), 1e-15);
  std::mt19937_64 rng(23);
  for (int i = 0; i < 50; ++i) {
    const Vec3 d = testutil::random_vec(rng);
    EXPECT_NEAR(shaft_direction(d).norm(), 1.0, 1e-12);
    EXPECT_LT((shaft_direction(3.7 * d) - shaft_direction(d)).norm(), 1e-15);
  }
  EXPECT_THROW(shaft_direction(Vec3(0, 0, 1e-4)), DegenerateShaft);
}

TEST(Admittance, ProjectorOnAxis) {
  const Mat3 omega = projector(Vec3::UnitZ());
  EXPECT_EQ(omega, Mat3(Vec3(0, 0, 1).asDiagonal()));
  const Vec3 n = Vec3(1, 2, 2) / 3.0;
  const Mat3 p = projector(n);
  EXPECT_LT((p * n - n).norm(), 1e-15);
  EXPECT_LT(((Mat3::Identity() - p) * n).norm(), 1e-15);
  EXPECT_THROW(projector(Vec3(0, 0, 1.01)), InvalidInput);
}

TEST(Admittance, ProjectorIsIdempotentWithUnitTrace) {
  std::mt19937_64 rng(24);
  for (int i = 0; i < 100; ++i) {
    const Mat3 p = projector(testutil::random_unit(rng));
    EXPECT_LT(testutil::max_abs(p * p - p), 1e-12);
    EXPECT_NEAR(p.trace(), 1.0, 1e-12);
    EXPECT_LT(testutil::max_abs(p - p.transpose()), 1e-15);
  }
}

TEST(Admittance, ForceError) {
  const Vec3 f(1, 2, 3);
  EXPECT_EQ(force_error(f, Vec3::Zero()), f);
  EXPECT_EQ(force_error(f, f), Vec3::Zero());
  EXPECT_EQ(force_error(f, Vec3(0.5, 0, 1)), Vec3(0.5, 2, 2));
}

TEST(Admittance, AxisAlignedVelocity) {
  AdmittanceConfig cfg;
  cfg.k_adm = 0.002;
  const Vec3 v = admittance_velocity(cfg, projector(Vec3::UnitZ()), Vec3(2, -1, 5));
  EXPECT_LT((v - Vec3(0.004, -0.002, 0)).norm(), 1e-15);
}

TEST(Admittance, ForceAlongShaftGivesNoMotion) {
  AdmittanceConfig cfg;
  const Vec3 n = Vec3(1, -1, 2).normalized();
  EXPECT_LT(admittance_velocity(cfg, projector(n), 4.2 * n).norm(), 1e-15);
}

TEST(Admittance, ScalarProjectionOracle) {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> gain(0.0, 0.1);
  for (int i = 0; i < 200; ++i) {
    AdmittanceConfig cfg;
    cfg.k_adm = gain(rng);
    const Vec3 n = testutil::random_unit(rng);
    const Vec3 f = testutil::random_vec(rng, 10.0);
    const Vec3 v = admittance_velocity(cfg, projector(n), f);
    const double along = n.x() * f.x() + n.y() * f.y() + n.z() * f.z();
    const Vec3 expected = cfg.k_adm * f - cfg.k_adm * along * n;
    EXPECT_LT((v - expected).cwiseAbs().maxCoeff(), 1e-12);
    // Orthogonal to the shaft.
    EXPECT_LT(std::abs(n.dot(v)), 1e-10 * v.norm() + 1e-12);
  }
}

TEST(Admittance, LinearInForceError) {
  std::mt19937_64 rng(26);
  AdmittanceConfig cfg;
  for (int i = 0; i < 50; ++i) {
    const Mat3 omega = projector(testutil::random_unit(rng));
    const Vec3 f1 = testutil::random_vec(rng, 5.0);
    const Vec3 f2 = testutil::random_vec(rng, 5.0);
    const double a = 1.7, b = -0.3;
    const Vec3 lhs = admittance_velocity(cfg, omega, a * f1 + b * f2);
    const Vec3 rhs = a * admittance_velocity(cfg, omega, f1) + b * admittance_velocity(cfg, omega, f2);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Admittance, ZeroGainGivesZeroVelocity) {
  AdmittanceConfig cfg;
  cfg.k_adm = 0.0;
  std::mt19937_64 rng(27);
  const Vec3 v = admittance_velocity(cfg, projector(testutil::random_unit(rng)), Vec3(3, 1, -2));
  EXPECT_EQ(v, Vec3::Zero());
}

TEST(Admittance, ProjectedGain) {
  AdmittanceConfig cfg;
  cfg.k_adm = 1.0;
  EXPECT_EQ(projected_gain(cfg, projector(Vec3::UnitZ())), Mat3(Vec3(1, 1, 0).asDiagonal()));
  std::mt19937_64 rng(28);
  for (int i = 0; i < 50; ++i) {
    cfg.k_adm = 0.02;
    const Vec3 n = testutil::random_unit(rng);
    const Mat3 g = projected_gain(cfg, projector(n));
    const Vec3 f = testutil::random_vec(rng);
    EXPECT_LT((g * f - admittance_velocity(cfg, projector(n), f)).norm(), 1e-15);
    Eigen::SelfAdjointEigenSolver<Mat3> eig(g);
    const Vec3 ev = eig.eigenvalues();  // ascending
    EXPECT_NEAR(ev[0], 0.0, 1e-14);
    EXPECT_NEAR(ev[1], cfg.k_adm, 1e-14);
    EXPECT_NEAR(ev[2], cfg.k_adm, 1e-14);
  }
}

TEST(Admittance, ForceFilter) {
  ForceFilter off(0.0);
  EXPECT_FALSE(off.enabled());
  EXPECT_EQ(off.update(Vec3(1, 2, 3), 0.005), Vec3(1, 2, 3));

  ForceFilter lp(10.0);
  EXPECT_TRUE(lp.enabled());
  EXPECT_EQ(lp.update(Vec3(1, 0, 0), 0.005), Vec3(1, 0, 0));  // primed with the first sample
  const double rc = 1.0 / (2.0 * M_PI * 10.0);
  const double alpha = 0.005 / (rc + 0.005);
  const Vec3 y = lp.update(Vec3(0, 0, 0), 0.005);
  EXPECT_NEAR(y.x(), 1.0 - alpha, 1e-15);
  // Step response settles.
  Vec3 out;
  for (int i = 0; i < 400; ++i) {
    out = lp.update(Vec3(0, 2, 0), 0.005);
  }
  EXPECT_LT((out - Vec3(0, 2, 0)).norm(), 1e-9);
  lp.reset();
  EXPECT_EQ(lp.update(Vec3(5, 5, 5), 0.005), Vec3(5, 5, 5));
}

TEST(Admittance, ConfigValidation) {
  AdmittanceConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.k_adm = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = AdmittanceConfig{};
  cfg.filter_cutoff_hz = -2;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
