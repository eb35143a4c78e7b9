#include "contactdyn/io/selfcheck.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "contactdyn/geometry/add_s.hpp"
#include "contactdyn/geometry/se3.hpp"
#include "contactdyn/model/model.hpp"
#include "contactdyn/model/schedule.hpp"
#include "contactdyn/rng.hpp"
#include "contactdyn/sim/dataset.hpp"
#include "contactdyn/tactile/tactile.hpp"
#include "contactdyn/training/training.hpp"

namespace contactdyn::io {

namespace {

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << v;
  return ss.str();
}

geom::Vec3 random_axis_angle(Rng& rng, double max_angle) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, max_angle);
  geom::Vec3 axis(g(rng), g(rng), g(rng));
  return axis.normalized() * u(rng);
}

CheckResult check_gradients(std::uint64_t seed) {
  model::ModelConfig mc;
  mc.K = 2;
  mc.H = 4;
  mc.latent = 8;
  mc.contact_dim = 4;
  mc.point_dim = 4;
  mc.point_hidden = 4;
  mc.temporal_hidden = 6;
  mc.contact_seq_dim = 3;
  mc.cond_dim = 5;
  mc.time_embed_dim = 4;
  mc.diffusion_steps = 10;
  mc.unet_c1 = 3;
  mc.unet_c2 = 4;
  mc.contact_proj_hidden = 3;
  sim::EnvConfig env = sim::EnvConfig::real_twin();
  env.cloud_points = 8;
  const auto trajs = sim::generate_dataset(env, 2, 12, sim::PolicyConfig{}, derive_seed(seed, "data"), mc.K, mc.H);
  const auto windows = sim::build_history_windows(trajs, mc.K, mc.H, 3);
  std::vector<const sim::HistoryWindow*> batch;
  for (std::size_t i = 0; i < 4 && i < windows.size(); ++i) batch.push_back(&windows[i]);

  model::DynamicsModel m(mc, derive_seed(seed, "init"));
  m.fit_normalization(batch);
  const std::uint64_t ls = derive_seed(seed, "loss");
  training::joint_loss(m, batch, 1.0, ls, true);
  auto& ps = m.params();
  Rng rng = make_rng(seed, "probe");
  double worst = 0.0;
  std::size_t probes = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (!ps.trainable(i)) continue;
    const num::Tensor analytic = ps.grad(i);
    std::uniform_int_distribution<std::size_t> pick(0, ps.value(i).size() - 1);
    for (int r = 0; r < 2; ++r) {
      const std::size_t j = pick(rng);
      const double h = 1e-6;
      const double x = ps.value(i)[j];
      ps.value(i)[j] = x + h;
      const double fp = training::joint_loss(m, batch, 1.0, ls, false).total;
      ps.value(i)[j] = x - h;
      const double fm = training::joint_loss(m, batch, 1.0, ls, false).total;
      ps.value(i)[j] = x;
      const double numeric = (fp - fm) / (2 * h);
      const double a = analytic[j];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      worst = std::max(worst, rel);
      ++probes;
    }
  }
  return {"joint-loss gradients", worst <= 1e-4, std::to_string(probes) + " probes, max rel err " + fmt(worst)};
}

CheckResult check_exp_log(std::uint64_t seed) {
  Rng rng = make_rng(seed, "exp-log");
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const geom::Vec3 w = random_axis_angle(rng, std::numbers::pi - 1e-3);
    worst = std::max(worst, (geom::log_map(geom::exp_map(w)) - w).norm());
  }
  return {"exp/log round trip", worst <= 1e-9, "max err " + fmt(worst)};
}

CheckResult check_increments(std::uint64_t seed) {
  Rng rng = make_rng(seed, "increments");
  std::normal_distribution<double> g(0.0, 0.05);
  double worst = 0.0;
  for (int s = 0; s < 200; ++s) {
    std::vector<geom::Pose> poses(9);
    for (auto& p : poses) {
      p.p = geom::Vec3(g(rng), g(rng), g(rng));
      p.R = geom::exp_map(random_axis_angle(rng, 3.0));
    }
    const auto inc = geom::encode_increments(poses);
    const auto back = geom::apply_increments(poses[0], inc);
    for (std::size_t k = 0; k < back.size(); ++k) {
      worst = std::max({worst, (back[k].p - poses[k + 1].p).norm(), (back[k].R - poses[k + 1].R).norm()});
    }
  }
  return {"increment round trip", worst <= 1e-9, "max err " + fmt(worst)};
}

CheckResult check_add_s(std::uint64_t seed) {
  Rng rng = make_rng(seed, "add-s");
  std::normal_distribution<double> g(0.0, 0.03);
  double worst = 0.0;
  for (int s = 0; s < 20; ++s) {
    geom::PointCloud cloud(64);
    for (auto& q : cloud) q = geom::Vec3(g(rng), g(rng), g(rng));
    geom::Pose a{geom::Vec3(g(rng), g(rng), g(rng)), geom::exp_map(random_axis_angle(rng, 1.0))};
    geom::Pose b{geom::Vec3(g(rng), g(rng), g(rng)), geom::exp_map(random_axis_angle(rng, 1.0))};
    const geom::NearestNeighbor index(cloud);
    const double fast = geom::add_s(a, b, cloud, index);
    double brute = 0.0;
    for (const auto& q : cloud) {
      const geom::Vec3 x = b.R * q + b.p;
      double best = INFINITY;
      for (const auto& r : cloud) best = std::min(best, (x - (a.R * r + a.p)).squaredNorm());
      brute += std::sqrt(best);
    }
    brute /= static_cast<double>(cloud.size());
    worst = std::max(worst, std::abs(fast - brute));
  }
  return {"ADD-S vs brute force", worst <= 1e-12, "max err " + fmt(worst)};
}

CheckResult check_diffusion(std::uint64_t seed) {
  const model::NoiseSchedule s(100);
  bool ok = true;
  for (int t = 1; t <= s.steps(); ++t) ok = ok && s.alpha_bar(t) < s.alpha_bar(t - 1);
  Rng rng = make_rng(seed, "diffusion");
  std::normal_distribution<double> g(0.0, 1.0);
  const int n = 10000;
  std::string detail;
  for (int t : {1, 50, 100}) {
    const double x0 = 0.7;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const num::Tensor eps({1}, g(rng));
      const double x = model::forward_diffuse(num::Tensor({1}, x0), t, eps, s)[0];
      sum += x;
      sq += x * x;
    }
    const double mean = sum / n;
    const double var = (sq - n * mean * mean) / (n - 1);
    const double want_var = 1.0 - s.alpha_bar(t);
    const double se = std::sqrt(want_var / n);
    const bool pass = std::abs(mean - std::sqrt(s.alpha_bar(t)) * x0) <= 4 * se &&
                      std::abs(var - want_var) <= 0.05 * want_var;
    ok = ok && pass;
    detail += "t=" + std::to_string(t) + (pass ? " ok " : " FAIL ");
  }
  return {"forward diffusion statistics", ok, detail};
}

CheckResult check_tactile() {
  tactile::TactileConfig cfg;
  const bool below = !tactile::finger_in_contact(tactile::FingerForce(0.1, 0.1, 0.05), cfg);
  const bool above = tactile::finger_in_contact(tactile::FingerForce(0.15, 0.1, 0.1), cfg);
  return {"tactile threshold fixtures", below && above, "0.25 N -> 0, 0.35 N -> 1"};
}

}  // namespace

std::vector<CheckResult> run_selfcheck(std::uint64_t seed) {
  return {check_gradients(seed), check_exp_log(seed), check_increments(seed),
          check_add_s(seed),     check_diffusion(seed), check_tactile()};
}

}  // namespace contactdyn::io
