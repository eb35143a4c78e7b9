#include <gtest/gtest.h>

#include <cmath>

#include "contactdyn/error.hpp"
#include "contactdyn/sim/dataset.hpp"
#include "contactdyn/sim/env.hpp"

using namespace contactdyn;
using namespace contactdyn::sim;

namespace {

EnvState far_fingers_state(const EnvConfig& cfg) {
  Eigen::VectorXd fingers(cfg.action_dim());
  for (int i = 0; i < fingers.size(); ++i) fingers[i] = 1.0 + i;
  return make_state(cfg, geom::Pose::identity(), fingers);
}

}  // namespace

TEST(Env, FingerContactGeometryFace) {
  const EnvConfig cfg = EnvConfig::sim();
  const EnvState s = far_fingers_state(cfg);
  const auto g = finger_contact(s, Eigen::Vector2d(cfg.half_x + cfg.finger_radius - 0.002, 0.0), cfg.finger_radius);
  EXPECT_NEAR(g.penetration, 0.002, 1e-15);
  EXPECT_NEAR(g.normal.x(), 1.0, 1e-15);
  EXPECT_NEAR(g.normal.y(), 0.0, 1e-15);
  EXPECT_NEAR(g.point.x(), cfg.half_x, 1e-15);
}

TEST(Env, FingerContactGeometryCorner) {
  const EnvConfig cfg = EnvConfig::sim();
  const EnvState s = far_fingers_state(cfg);
  const Eigen::Vector2d finger(cfg.half_x + 0.003, cfg.half_y + 0.004);
  const auto g = finger_contact(s, finger, cfg.finger_radius);
  EXPECT_NEAR(g.penetration, cfg.finger_radius - 0.005, 1e-15);
  EXPECT_NEAR(g.normal.x(), 0.6, 1e-12);
  EXPECT_NEAR(g.normal.y(), 0.8, 1e-12);
}

TEST(Env, FingerContactFollowsRotation) {
  const EnvConfig cfg = EnvConfig::sim();
  EnvState s = far_fingers_state(cfg);
  s.theta = std::numbers::pi / 2;
  s.pose = geom::planar_pose(0.0, 0.0, s.theta);
  // the long axis now points along +y
  const auto g = finger_contact(s, Eigen::Vector2d(0.0, cfg.half_x + cfg.finger_radius - 0.001), cfg.finger_radius);
  EXPECT_NEAR(g.penetration, 0.001, 1e-12);
  EXPECT_NEAR(g.normal.y(), 1.0, 1e-12);
}

TEST(Env, StaticContactForceIsStiffnessTimesPenetration) {
  const EnvConfig cfg = EnvConfig::sim();
  EnvState s = far_fingers_state(cfg);
  s.fingers[0] = -(cfg.half_x + cfg.finger_radius - 0.001);
  s.fingers[1] = 0.0;
  const auto f = contact_forces(s, Eigen::VectorXd::Zero(cfg.action_dim()), cfg);
  ASSERT_EQ(f.size(), 2u);
  // the object pushes the finger along -x with k_n * 1 mm
  EXPECT_NEAR(f[0].x(), -cfg.k_n * 0.001, 1e-9);
  EXPECT_NEAR(f[0].y(), 0.0, 1e-12);
  EXPECT_EQ(f[1], tactile::FingerForce::Zero());
  EXPECT_EQ(geometric_label(s, cfg), 1);
}

TEST(Env, FreeSlideDeceleratesByCoulombFriction) {
  EnvConfig cfg = EnvConfig::sim();
  EnvState s = far_fingers_state(cfg);
  s.velocity = Eigen::Vector2d(0.3, 0.0);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(cfg.action_dim());
  const auto r = step_env(s, zero, zero, cfg);
  EXPECT_NEAR(r.state.velocity.x(), 0.3 - cfg.mu * cfg.gravity * cfg.dt, 1e-12);
  // x = sum over substeps of h * v_k, with v_k = v0 - k * mu g h
  const double h = cfg.dt / cfg.substeps;
  double x = 0.0;
  for (int k = 1; k <= cfg.substeps; ++k) x += h * (0.3 - k * cfg.mu * cfg.gravity * h);
  EXPECT_NEAR(r.state.pose.p.x(), x, 1e-14);
  EXPECT_EQ(geometric_label(r.state, cfg), 0);
}

TEST(Env, FrictionStopsWithoutReversal) {
  const EnvConfig cfg = EnvConfig::sim();
  EnvState s = far_fingers_state(cfg);
  s.velocity = Eigen::Vector2d(0.01, -0.01);
  s.angular_velocity = 0.1;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(cfg.action_dim());
  EnvState cur = s;
  for (int i = 0; i < 10; ++i) cur = step_env(cur, zero, zero, cfg).state;
  EXPECT_EQ(cur.velocity, Eigen::Vector2d::Zero());
  EXPECT_EQ(cur.angular_velocity, 0.0);
  EXPECT_EQ(kinetic_energy(cur, cfg), 0.0);
}

TEST(Env, KineticEnergyNonIncreasingWithoutContact) {
  const EnvConfig cfg = EnvConfig::sim();
  EnvState s = far_fingers_state(cfg);
  s.velocity = Eigen::Vector2d(0.2, 0.1);
  s.angular_velocity = -2.0;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(cfg.action_dim());
  double e = kinetic_energy(s, cfg);
  for (int i = 0; i < 20; ++i) {
    s = step_env(s, zero, zero, cfg).state;
    const double e2 = kinetic_energy(s, cfg);
    EXPECT_LE(e2, e + 1e-15);
    e = e2;
  }
}

TEST(Env, PushMovesObjectAlongPush) {
  const EnvConfig cfg = EnvConfig::sim();
  EnvState s = far_fingers_state(cfg);
  s.fingers << -(cfg.half_x + cfg.finger_radius), 0.01, -(cfg.half_x + cfg.finger_radius), -0.01;
  Eigen::VectorXd push(cfg.action_dim());
  push << 0.2, 0.0, 0.2, 0.0;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(cfg.action_dim());
  for (int i = 0; i < 25; ++i) s = step_env(s, push, zero, cfg).state;
  EXPECT_GT(s.pose.p.x(), 0.05);
  EXPECT_NEAR(s.pose.p.y(), 0.0, 1e-9);
  EXPECT_NEAR(s.theta, 0.0, 1e-9);
  EXPECT_TRUE(geom::is_rotation(s.pose.R));
}

TEST(Env, LatencyDelaysAction) {
  EnvConfig cfg = EnvConfig::sim();
  cfg.latency = 1;
  EnvState s = far_fingers_state(cfg);
  Eigen::VectorXd a = Eigen::VectorXd::Constant(cfg.action_dim(), 0.1);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(cfg.action_dim());
  const auto r1 = step_env(s, a, zero, cfg);
  EXPECT_EQ(r1.state.fingers, s.fingers);
  const auto r2 = step_env(r1.state, zero, zero, cfg);
  EXPECT_NEAR(r2.state.fingers[0], s.fingers[0] + 0.1 * cfg.dt, 1e-12);
}

TEST(Env, ActionDimensionChecked) {
  const EnvConfig cfg = EnvConfig::sim();
  const EnvState s = far_fingers_state(cfg);
  const Eigen::VectorXd bad = Eigen::VectorXd::Zero(3);
  EXPECT_THROW(step_env(s, bad, bad, cfg), Error);
}

TEST(Env, InvalidConfigRejected) {
  EnvConfig cfg = EnvConfig::sim();
  cfg.dt = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = EnvConfig::sim();
  cfg.k_n = -1.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Env, RealTwinDiffersFromSim) {
  const EnvConfig sim = EnvConfig::sim(), real = EnvConfig::real_twin();
  EXPECT_NEAR(real.mu, 1.4 * sim.mu, 1e-12);
  EXPECT_NEAR(real.k_n, 0.5 * sim.k_n, 1e-9);
  EXPECT_EQ(real.latency, 1);
  EXPECT_EQ(real.label_mode, LabelMode::kForceThreshold);
  EXPECT_EQ(sim.label_mode, LabelMode::kGeometric);
}

TEST(Dataset, TrajectoryShapesAndDeterminism) {
  const EnvConfig cfg = EnvConfig::real_twin();
  const auto a = generate_trajectory(cfg, 30, PolicyConfig{}, 7);
  const auto b = generate_trajectory(cfg, 30, PolicyConfig{}, 7);
  const auto c = generate_trajectory(cfg, 30, PolicyConfig{}, 8);
  EXPECT_NO_THROW(a.validate());
  EXPECT_EQ(a.steps(), 31u);
  EXPECT_EQ(a.contacts.size(), 31u);
  EXPECT_EQ(a.forces.front().size(), 2u);
  EXPECT_EQ(a.cloud->size(), static_cast<std::size_t>(cfg.cloud_points));
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
  for (const auto& p : a.poses) EXPECT_NO_THROW(geom::validate_pose(p));
}

TEST(Dataset, RealTwinForcesArePlanar) {
  const auto t = generate_trajectory(EnvConfig::real_twin(), 20, PolicyConfig{}, 3);
  for (const auto& step : t.forces)
    for (const auto& f : step) EXPECT_EQ(f.z(), 0.0);
}

TEST(Dataset, SimLabelsAreGeometric) {
  const EnvConfig cfg = EnvConfig::sim();
  const auto t = generate_trajectory(cfg, 40, PolicyConfig{}, 11);
  for (std::size_t k = 0; k < t.steps(); ++k) {
    EnvState s = make_state(cfg, t.poses[k], t.joints[k]);
    s.theta = geom::planar_angle(t.poses[k]);
    EXPECT_EQ(t.contacts[k], geometric_label(s, cfg)) << "step " << k;
  }
}

TEST(Dataset, PushingProducesContactAndMotion) {
  const auto d = generate_dataset(EnvConfig::sim(), 20, 60, PolicyConfig{}, 100);
  EXPECT_GT(contact_fraction(d), 0.1);
  EXPECT_LT(contact_fraction(d), 0.9);
  double moved = 0.0;
  for (const auto& t : d) moved += (t.poses.back().p - t.poses.front().p).norm();
  EXPECT_GT(moved / 20.0, 0.01);
}

TEST(Dataset, BoxCloudOnSurface) {
  Rng rng(5);
  const auto cloud = sample_box_cloud(0.05, 0.03, 0.02, 500, rng);
  ASSERT_EQ(cloud.size(), 500u);
  for (const auto& p : cloud) {
    const double m = std::max({std::abs(p.x()) / 0.05, std::abs(p.y()) / 0.03, std::abs(p.z()) / 0.02});
    EXPECT_NEAR(m, 1.0, 1e-12);
  }
}

TEST(Dataset, WindowCountAndContents) {
  const auto t = generate_trajectory(EnvConfig::sim(), 60, PolicyConfig{}, 4);
  const int K = 9, H = 8, stride = 4;
  const auto w = build_history_windows(t, K, H, stride);
  EXPECT_EQ(w.size(), static_cast<std::size_t>((60 - K - H) / stride + 1));
  const auto& first = w.front();
  EXPECT_EQ(first.t, 9u);
  EXPECT_EQ(first.history(), 10u);
  EXPECT_EQ(first.horizon(), 8u);
  EXPECT_EQ(first.anchor(), t.poses[9]);
  EXPECT_EQ(first.target_poses.back(), t.poses[17]);
  EXPECT_EQ(first.target_contacts.front(), t.contacts[10]);
  const auto rebuilt = geom::apply_increments(first.anchor(), first.target_increments);
  for (int k = 0; k < H; ++k) EXPECT_LE((rebuilt[k].p - first.target_poses[k].p).norm(), 1e-12);
  EXPECT_THROW(window_at(t, 5, K, H), Error);
  EXPECT_THROW(window_at(t, 55, K, H), Error);
}

TEST(Dataset, LabelAgreementOfIdenticalDatasets) {
  const auto d = generate_dataset(EnvConfig::sim(), 3, 20, PolicyConfig{}, 9);
  const auto r = label_agreement(d, d);
  EXPECT_DOUBLE_EQ(r.agree, 1.0);
  EXPECT_DOUBLE_EQ(r.disagree, 0.0);
  EXPECT_EQ(r.steps, 63u);
}

TEST(Dataset, PairedDomainsShareScripts) {
  const auto s = generate_trajectory(EnvConfig::sim(), 20, PolicyConfig{}, 42);
  const auto r = generate_trajectory(EnvConfig::real_twin(), 20, PolicyConfig{}, 42);
  EXPECT_EQ(s.actions, r.actions);
  EXPECT_EQ(s.domain, Domain::kSim);
  EXPECT_EQ(r.domain, Domain::kRealTwin);
}
