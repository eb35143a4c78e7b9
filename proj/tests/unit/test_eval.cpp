#include <gtest/gtest.h>

#include <cmath>

#include "contactdyn/error.hpp"
#include "contactdyn/eval/baselines.hpp"
#include "contactdyn/eval/metrics.hpp"
#include "contactdyn/eval/rollout.hpp"

using namespace contactdyn;
using namespace contactdyn::eval;

namespace {

model::ModelConfig small_model(model::ModelKind kind) {
  model::ModelConfig c = model::ModelConfig::desk();
  c.kind = kind;
  c.K = 3;
  c.H = 4;
  c.latent = 8;
  c.temporal_hidden = 8;
  c.point_dim = 4;
  c.point_hidden = 4;
  c.contact_dim = 4;
  c.cond_dim = 4;
  c.diffusion_steps = 5;
  c.unet_c1 = 4;
  c.unet_c2 = 4;
  return c;
}

std::vector<sim::Trajectory> trajs(int n, std::uint64_t seed, sim::Domain d = sim::Domain::kRealTwin) {
  sim::EnvConfig env = d == sim::Domain::kSim ? sim::EnvConfig::sim() : sim::EnvConfig::real_twin();
  env.cloud_points = 16;
  return sim::generate_dataset(env, n, 30, sim::PolicyConfig{}, seed, 3, 4);
}

void zero_weights(num::ParameterSet& ps) {
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (ps.trainable(i)) ps.value(i).fill(0.0);
}

}  // namespace

TEST(Metrics, PerfectPrediction) {
  const geom::PointCloud cloud{geom::Vec3(0.01, 0, 0), geom::Vec3(0, 0.02, 0)};
  SequencePair p;
  p.anchor = geom::planar_pose(0, 0, 0);
  for (int k = 1; k <= 5; ++k) p.gt.push_back(geom::planar_pose(0.01 * k, 0.0, 0.05 * k));
  p.pred = p.gt;
  p.cloud = &cloud;
  const auto m = sequence_metrics(p, MetricsConfig{});
  EXPECT_EQ(m.mse, 0.0);
  EXPECT_DOUBLE_EQ(m.auc, 100.0);
  EXPECT_TRUE(m.success);
  const std::vector<SequencePair> v{p};
  const auto r = compute_metrics(v, MetricsConfig{});
  EXPECT_DOUBLE_EQ(r.success, 100.0);
  EXPECT_EQ(r.frames, 5u);
}

TEST(Metrics, ConstantOffsetFixture) {
  const geom::PointCloud cloud{geom::Vec3::Zero()};
  SequencePair p;
  p.cloud = &cloud;
  for (int k = 1; k <= 4; ++k) {
    p.gt.push_back(geom::planar_pose(0.0, 0.0, 0.0));
    p.pred.push_back(geom::planar_pose(0.01, 0.0, 0.0));
  }
  const auto m = sequence_metrics(p, MetricsConfig{});
  EXPECT_NEAR(m.auc, 80.0, 1e-9);
  EXPECT_TRUE(m.success);
  EXPECT_NEAR(m.endpoint_error, 0.01, 1e-15);
  // increments: first step off by 1 cm in dp_x, later steps exact
  EXPECT_NEAR(m.mse, (0.01 * 0.01) / (4 * 6), 1e-18);
}

TEST(Metrics, SuccessThresholdIsStrict) {
  const geom::PointCloud cloud{geom::Vec3::Zero()};
  SequencePair p;
  p.cloud = &cloud;
  p.gt.push_back(geom::planar_pose(0.0, 0.0, 0.0));
  p.pred.push_back(geom::planar_pose(0.03, 0.0, 0.0));
  EXPECT_FALSE(sequence_metrics(p, MetricsConfig{}).success);
  p.pred[0] = geom::planar_pose(0.02, 0.0, 0.0);
  EXPECT_TRUE(sequence_metrics(p, MetricsConfig{}).success);
}

TEST(Metrics, WorkspaceScaling) {
  const auto c = MetricsConfig::for_workspace(0.5);
  EXPECT_DOUBLE_EQ(c.d_max, 0.05);
  EXPECT_DOUBLE_EQ(c.success_threshold, 0.025);
}

TEST(Metrics, FormatCell) {
  EXPECT_EQ(format_cell(0.0082, 88.23), "0.0082 MSE / 88.23 ADD-S");
}

TEST(Metrics, LengthMismatch) {
  const geom::PointCloud cloud{geom::Vec3::Zero()};
  SequencePair p;
  p.cloud = &cloud;
  p.gt.resize(3);
  p.pred.resize(2);
  EXPECT_THROW(sequence_metrics(p, MetricsConfig{}), Error);
}

TEST(Rollout, ConfigValidation) {
  const auto d = RolloutConfig::defaults(8);
  EXPECT_EQ(d.total_horizon, 40);
  EXPECT_EQ(d.h_apply, 4);
  RolloutConfig c = d;
  c.h_apply = 9;
  EXPECT_THROW(c.validate(8), Error);
  c.h_apply = 0;
  EXPECT_THROW(c.validate(8), Error);
}

TEST(Rollout, ZeroIncrementModelStaysAtStart) {
  const auto t = trajs(2, 1);
  model::DynamicsModel m(small_model(model::ModelKind::kDirectMlp), 1);
  zero_weights(m.params());
  RolloutConfig c;
  c.total_horizon = 10;
  c.h_apply = 2;
  for (const auto& traj : t) {
    const auto r = rollout_long_horizon(m, traj, c);
    EXPECT_EQ(r.start, 3u);
    ASSERT_EQ(r.poses.size(), 10u);
    for (const auto& p : r.poses) EXPECT_LE((p.p - traj.poses[3].p).norm(), 1e-15);
  }
}

TEST(Rollout, ApplyHorizonsGiveSameLengthAndValidPoses) {
  const auto t = trajs(1, 2);
  model::DynamicsModel m(small_model(model::ModelKind::kDiffusionContact), 1);
  for (int h : {1, 4}) {
    RolloutConfig c;
    c.total_horizon = 12;
    c.h_apply = h;
    c.seed = 3;
    const auto r = rollout_long_horizon(m, t[0], c);
    ASSERT_EQ(r.poses.size(), 12u);
    ASSERT_EQ(r.probabilities.size(), 12u);
    for (const auto& p : r.poses) EXPECT_NO_THROW(geom::validate_pose(p));
  }
}

TEST(Rollout, DeterministicPerSeed) {
  const auto t = trajs(3, 4);
  model::DynamicsModel m(small_model(model::ModelKind::kDiffusion), 1);
  RolloutConfig c;
  c.total_horizon = 8;
  c.h_apply = 2;
  c.seed = 9;
  std::vector<const sim::Trajectory*> ptr;
  for (const auto& x : t) ptr.push_back(&x);
  const auto a = rollout_long_horizon(m, ptr, c);
  const auto b = rollout_long_horizon(m, ptr, c);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a[i].poses, b[i].poses);
  c.seed = 10;
  EXPECT_NE(rollout_long_horizon(m, ptr, c)[0].poses, a[0].poses);
}

TEST(Rollout, OracleFeedbackUsesLoggedLabels) {
  const auto t = trajs(1, 5);
  model::DynamicsModel m(small_model(model::ModelKind::kDiffusionContact), 1);
  RolloutConfig c;
  c.total_horizon = 8;
  c.h_apply = 2;
  c.feedback = ContactFeedback::kOracle;
  const auto r = rollout_long_horizon(m, t[0], c);
  for (int k = 0; k < 8; ++k) EXPECT_EQ(r.contacts[k], t[0].contacts[4 + k]);
}

TEST(Rollout, TooShortTrajectoryRejected) {
  const auto t = trajs(1, 6);
  model::DynamicsModel m(small_model(model::ModelKind::kDiffusion), 1);
  RolloutConfig c;
  c.total_horizon = 40;
  c.h_apply = 2;
  EXPECT_THROW(rollout_long_horizon(m, t[0], c), Error);
}

TEST(Rollout, EvaluatorsReportSaneMetrics) {
  const auto t = trajs(3, 7);
  model::DynamicsModel m(small_model(model::ModelKind::kDiffusionContact), 1);
  RolloutConfig c;
  c.total_horizon = 12;
  c.h_apply = 2;
  const auto r = evaluate_rollouts(m, t, c, MetricsConfig{});
  EXPECT_EQ(r.sequences, 3u);
  EXPECT_EQ(r.frames, 36u);
  EXPECT_GE(r.auc, 0.0);
  EXPECT_LE(r.auc, 100.0);
  const auto o = evaluate_open_loop(m, t, 4, 1, MetricsConfig{});
  EXPECT_EQ(o.sequences, 3u * ((30 - 3 - 4) / 4 + 1));
  EXPECT_EQ(o.frames, o.sequences * 4);
  EXPECT_EQ(o.auc, evaluate_open_loop(m, t, 4, 1, MetricsConfig{}).auc);
}

TEST(Baselines, RegimeNamesRoundTrip) {
  for (const Regime r : kAllRegimes) EXPECT_EQ(regime_from_string(to_string(r)), r);
  EXPECT_THROW(regime_from_string("zero-shot"), Error);
}

TEST(Baselines, TinySuiteFillsEveryCell) {
  SuiteConfig cfg;
  cfg.model = small_model(model::ModelKind::kDiffusionContact);
  cfg.pretrain.epochs = 1;
  cfg.pretrain.stride = 4;
  cfg.finetune.epochs = 1;
  cfg.finetune.stride = 4;
  cfg.rollout.total_horizon = 8;
  cfg.rollout.h_apply = 2;
  cfg.seeds = {0, 1};
  const auto sim_train = trajs(4, 10, sim::Domain::kSim);
  const auto real_train = trajs(3, 20);
  const auto test = trajs(2, 30);
  const std::vector<model::ModelKind> kinds{model::ModelKind::kDirectMlp, model::ModelKind::kDiffusionContact};
  const auto table = baseline_suite(sim_train, real_train, test, kinds, cfg);
  EXPECT_EQ(table.cells.size(), 2u * 3u * 2u);
  for (const auto& c : table.cells) EXPECT_TRUE(c.ok) << c.diagnostic;
  const auto med = table.median(model::ModelKind::kDirectMlp, Regime::kRealFinetune);
  ASSERT_TRUE(med.has_value());
  EXPECT_EQ(med->seeds, 2u);
  EXPECT_FALSE(table.median(model::ModelKind::kDiffusion, Regime::kSimOnly).has_value());
}

TEST(Baselines, MedianOfThreeSeeds) {
  BaselineTable t;
  t.kinds = {model::ModelKind::kDiffusion};
  for (const double v : {3.0, 1.0, 2.0}) {
    CellResult c;
    c.kind = model::ModelKind::kDiffusion;
    c.regime = Regime::kRealOnly;
    c.ok = true;
    c.rollout.mse = v;
    c.rollout.auc = 10 * v;
    c.rollout.success = 100 - v;
    t.cells.push_back(c);
  }
  CellResult failed;
  failed.kind = model::ModelKind::kDiffusion;
  failed.regime = Regime::kRealOnly;
  failed.ok = false;
  t.cells.push_back(failed);
  const auto m = t.median(model::ModelKind::kDiffusion, Regime::kRealOnly);
  ASSERT_TRUE(m.has_value());
  EXPECT_DOUBLE_EQ(m->mse, 2.0);
  EXPECT_DOUBLE_EQ(m->auc, 20.0);
  EXPECT_DOUBLE_EQ(m->success, 98.0);
  EXPECT_EQ(m->seeds, 3u);
}
