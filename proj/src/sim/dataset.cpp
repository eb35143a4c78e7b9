#include "contactdyn/sim/dataset.hpp"

#include <cmath>
#include <numbers>

#include "contactdyn/error.hpp"

namespace contactdyn::sim {

namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

}  // namespace

void Trajectory::validate() const {
  const std::size_t n = poses.size();
  if (joints.size() != n || actions.size() != n || contacts.size() != n || forces.size() != n) {
    fail(ErrorCode::kFormat, "trajectory arrays have unequal lengths");
  }
  if (!cloud || cloud->empty()) fail(ErrorCode::kFormat, "trajectory has no point cloud");
  for (std::size_t t = 0; t < n; ++t) {
    geom::validate_pose(poses[t]);
    if (!joints[t].allFinite() || !actions[t].allFinite()) fail(ErrorCode::kNonFinite, "trajectory joints/actions");
    if (contacts[t] != 0 && contacts[t] != 1) fail(ErrorCode::kFormat, "contact labels must be 0 or 1");
    for (const auto& f : forces[t]) {
      if (!f.allFinite()) fail(ErrorCode::kNonFinite, "trajectory forces");
    }
  }
}

bool Trajectory::operator==(const Trajectory& o) const {
  const bool clouds = (cloud == o.cloud) || (cloud && o.cloud && *cloud == *o.cloud);
  return domain == o.domain && seed == o.seed && clouds && poses == o.poses && joints == o.joints &&
         actions == o.actions && contacts == o.contacts && forces == o.forces;
}

PolicyParams sample_policy(const PolicyConfig& cfg, Rng& rng) {
  PolicyParams p;
  p.direction = uniform(rng, -std::numbers::pi, std::numbers::pi);
  p.approach_distance = uniform(rng, cfg.approach_min, cfg.approach_max);
  p.lateral_offset = uniform(rng, -cfg.lateral_max, cfg.lateral_max);
  p.speed = uniform(rng, cfg.speed_min, cfg.speed_max);
  p.start_step = std::uniform_int_distribution<int>(0, cfg.start_max)(rng);
  p.release_step = std::uniform_int_distribution<int>(cfg.release_min, cfg.release_max)(rng);
  return p;
}

Eigen::VectorXd initial_fingers(const PolicyParams& params, const geom::Pose& object, int fingers) {
  const Eigen::Vector2d u(std::cos(params.direction), std::sin(params.direction));
  const Eigen::Vector2d v(-u.y(), u.x());
  const Eigen::Vector2d center =
      Eigen::Vector2d(object.p.x(), object.p.y()) - params.approach_distance * u + params.lateral_offset * v;
  Eigen::VectorXd q(2 * fingers);
  for (int f = 0; f < fingers; ++f) {
    q.segment<2>(2 * f) = center + (f - 0.5 * (fingers - 1)) * params.finger_spacing * v;
  }
  return q;
}

Eigen::VectorXd policy_action(const PolicyParams& params, int t, int fingers) {
  const Eigen::Vector2d u(std::cos(params.direction), std::sin(params.direction));
  Eigen::Vector2d vel = Eigen::Vector2d::Zero();
  if (t >= params.release_step) {
    vel = -params.retract_speed * u;
  } else if (t >= params.start_step) {
    vel = params.speed * u;
  }
  Eigen::VectorXd a(2 * fingers);
  for (int f = 0; f < fingers; ++f) a.segment<2>(2 * f) = vel;
  return a;
}

geom::PointCloud sample_box_cloud(double hx, double hy, double hz, int n, Rng& rng) {
  std::discrete_distribution<int> face({hy * hz, hy * hz, hx * hz, hx * hz, hx * hy, hx * hy});
  geom::PointCloud cloud;
  cloud.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int f = face(rng);
    const double sign = (f % 2 == 0) ? 1.0 : -1.0;
    const double a = uniform(rng, -1.0, 1.0);
    const double b = uniform(rng, -1.0, 1.0);
    switch (f / 2) {
      case 0: cloud.emplace_back(sign * hx, a * hy, b * hz); break;
      case 1: cloud.emplace_back(a * hx, sign * hy, b * hz); break;
      default: cloud.emplace_back(a * hx, b * hy, sign * hz); break;
    }
  }
  return cloud;
}

Trajectory generate_trajectory(const EnvConfig& cfg, int T, const PolicyParams& params, const geom::Pose& object,
                               std::uint64_t seed) {
  cfg.validate();
  if (T < 1) fail(ErrorCode::kInvalidArgument, "trajectory length must be >= 1");
  Rng dyn_rng = make_rng(seed, "actuation");
  Rng perturb_rng = make_rng(seed, "perturb");
  Rng sensor_rng = make_rng(seed, "sensor");
  Rng cloud_rng = make_rng(seed, "cloud");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution kick(1.0 / cfg.perturb_interval);
  const bool real = cfg.domain == Domain::kRealTwin;

  Trajectory traj;
  traj.domain = cfg.domain;
  traj.seed = seed;
  traj.cloud = std::make_shared<const geom::PointCloud>(
      sample_box_cloud(cfg.half_x, cfg.half_y, cfg.half_z, cfg.cloud_points, cloud_rng));

  EnvState state = make_state(cfg, object, initial_fingers(params, object, cfg.fingers));
  const Eigen::VectorXd still = Eigen::VectorXd::Zero(cfg.action_dim());

  // Tactile sensor: static per-finger bias plus white noise on the in-plane axes.
  std::vector<tactile::FingerForce> bias(static_cast<std::size_t>(cfg.fingers), tactile::FingerForce::Zero());
  auto read_sensor = [&](const std::vector<tactile::FingerForce>& true_forces) {
    std::vector<tactile::FingerForce> out = true_forces;
    for (std::size_t f = 0; f < out.size(); ++f) {
      out[f] += bias[f];
      out[f].x() += cfg.tactile.noise_sigma * gauss(sensor_rng);
      out[f].y() += cfg.tactile.noise_sigma * gauss(sensor_rng);
    }
    return out;
  };
  tactile::CalibrationOffset offset;
  offset.per_finger.assign(static_cast<std::size_t>(cfg.fingers), tactile::FingerForce::Zero());
  if (real) {
    for (auto& b : bias) b = tactile::FingerForce(cfg.tactile.bias_sigma * gauss(sensor_rng),
                                                  cfg.tactile.bias_sigma * gauss(sensor_rng), 0.0);
    // stationary pre-roll: the script has not started moving yet
    const std::size_t n = tactile::window_samples(cfg.tactile, cfg.dt);
    std::vector<std::vector<tactile::FingerForce>> window;
    window.reserve(n);
    for (std::size_t i = 0; i < n; ++i) window.push_back(read_sensor(contact_forces(state, still, cfg)));
    offset = tactile::calibrate_offset(window, cfg.dt, cfg.tactile);
  }

  std::vector<tactile::FingerForce> forces = contact_forces(state, still, cfg);
  for (int t = 0;; ++t) {
    geom::Pose observed = state.pose;
    if (real) {
      observed = geom::planar_pose(state.pose.p.x() + cfg.sigma_s_pos * gauss(sensor_rng),
                                   state.pose.p.y() + cfg.sigma_s_pos * gauss(sensor_rng),
                                   state.theta + cfg.sigma_s_rot * gauss(sensor_rng));
    }
    std::vector<tactile::FingerForce> recorded = forces;
    int label = 0;
    if (real) {
      const auto raw = read_sensor(forces);
      label = label_contact(state, raw, cfg, offset);
      for (std::size_t f = 0; f < raw.size(); ++f) recorded[f] = raw[f] - offset.per_finger[f];
    } else {
      label = label_contact(state, forces, cfg, offset);
    }
    const Eigen::VectorXd action = policy_action(params, t, cfg.fingers);
    traj.poses.push_back(observed);
    traj.joints.push_back(state.fingers);
    traj.actions.push_back(action);
    traj.contacts.push_back(label);
    traj.forces.push_back(std::move(recorded));
    if (t == T) break;

    if (cfg.perturb) {
      if (kick(perturb_rng)) {
        const double dx = cfg.perturb_pos * gauss(perturb_rng);
        const double dy = cfg.perturb_pos * gauss(perturb_rng);
        const double dth = cfg.perturb_rot * gauss(perturb_rng);
        state.theta += dth;
        state.pose = geom::planar_pose(state.pose.p.x() + dx, state.pose.p.y() + dy, state.theta);
      }
      if (kick(perturb_rng)) {
        for (Eigen::Index i = 0; i < state.fingers.size(); ++i) state.fingers[i] += cfg.perturb_pos * gauss(perturb_rng);
      }
    }
    StepResult r = step_env(state, action, cfg, dyn_rng);
    state = std::move(r.state);
    forces = std::move(r.forces);
  }
  traj.validate();
  return traj;
}

Trajectory generate_trajectory(const EnvConfig& cfg, int T, const PolicyConfig& policy, std::uint64_t seed) {
  Rng rng = make_rng(seed, "episode");
  EnvConfig local = cfg;
  if (cfg.randomize_extents) {
    local.half_x *= uniform(rng, 0.6, 1.2);
    local.half_y *= uniform(rng, 0.6, 1.2);
  }
  const double x = uniform(rng, -policy.object_offset, policy.object_offset);
  const double y = uniform(rng, -policy.object_offset, policy.object_offset);
  const double theta = uniform(rng, -std::numbers::pi, std::numbers::pi);
  const PolicyParams params = sample_policy(policy, rng);
  return generate_trajectory(local, T, params, geom::planar_pose(x, y, theta), seed);
}

std::vector<Trajectory> generate_dataset(const EnvConfig& cfg, int n_traj, int T, const PolicyConfig& policy,
                                         std::uint64_t seed, int K, int H) {
  if (n_traj < 0) fail(ErrorCode::kInvalidArgument, "trajectory count must be >= 0");
  if (K < 0 || H < 1 || T < K + H + 1) {
    fail(ErrorCode::kInvalidArgument, "trajectory length T must satisfy T >= K + H + 1");
  }
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(n_traj));
  for (int i = 0; i < n_traj; ++i) out.push_back(generate_trajectory(cfg, T, policy, seed + static_cast<std::uint64_t>(i)));
  return out;
}

HistoryWindow window_at(const Trajectory& traj, std::size_t t, int K, int H, std::size_t traj_index) {
  if (K < 0 || H < 1) fail(ErrorCode::kInvalidArgument, "window: K >= 0 and H >= 1 required");
  if (t < static_cast<std::size_t>(K) || t + static_cast<std::size_t>(H) >= traj.steps()) {
    fail(ErrorCode::kInvalidArgument, "window: trajectory too short for anchor " + std::to_string(t));
  }
  HistoryWindow w;
  w.trajectory = traj_index;
  w.t = t;
  w.cloud = traj.cloud;
  const std::size_t lo = t - static_cast<std::size_t>(K);
  for (std::size_t k = lo; k <= t; ++k) {
    w.poses.push_back(traj.poses[k]);
    w.joints.push_back(traj.joints[k]);
    w.actions.push_back(traj.actions[k]);
    w.contacts.push_back(traj.contacts[k]);
  }
  for (std::size_t k = t + 1; k <= t + static_cast<std::size_t>(H); ++k) {
    w.target_contacts.push_back(traj.contacts[k]);
    w.target_poses.push_back(traj.poses[k]);
  }
  w.target_increments = geom::encode_increments(
      std::span<const geom::Pose>(traj.poses.data() + t, static_cast<std::size_t>(H) + 1));
  return w;
}

std::vector<HistoryWindow> build_history_windows(const Trajectory& traj, int K, int H, int stride,
                                                 std::size_t traj_index) {
  if (stride < 1) fail(ErrorCode::kInvalidArgument, "window stride must be >= 1");
  if (K < 0 || H < 1 || traj.steps() < static_cast<std::size_t>(K + H + 2)) {
    fail(ErrorCode::kInvalidArgument, "trajectory too short: need T >= K + H + 1");
  }
  std::vector<HistoryWindow> out;
  for (std::size_t t = static_cast<std::size_t>(K); t + static_cast<std::size_t>(H) < traj.steps();
       t += static_cast<std::size_t>(stride)) {
    out.push_back(window_at(traj, t, K, H, traj_index));
  }
  return out;
}

std::vector<HistoryWindow> build_history_windows(const std::vector<Trajectory>& trajs, int K, int H, int stride) {
  std::vector<HistoryWindow> out;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    auto w = build_history_windows(trajs[i], K, H, stride, i);
    out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  return out;
}

double contact_fraction(const std::vector<Trajectory>& trajs) {
  std::size_t on = 0, total = 0;
  for (const auto& t : trajs) {
    for (int c : t.contacts) on += static_cast<std::size_t>(c);
    total += t.contacts.size();
  }
  return total ? static_cast<double>(on) / static_cast<double>(total) : 0.0;
}

LabelAgreement label_agreement(const std::vector<Trajectory>& a, const std::vector<Trajectory>& b) {
  if (a.size() != b.size()) fail(ErrorCode::kInvalidArgument, "label_agreement: dataset sizes differ");
  LabelAgreement r;
  std::size_t same = 0, adjacent = 0, adjacent_diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& ca = a[i].contacts;
    const auto& cb = b[i].contacts;
    if (ca.size() != cb.size()) fail(ErrorCode::kInvalidArgument, "label_agreement: trajectory lengths differ");
    for (std::size_t t = 0; t < ca.size(); ++t) {
      same += ca[t] == cb[t];
      bool near = false;
      for (std::size_t k = t == 0 ? 0 : t - 1; k <= std::min(t + 1, ca.size() - 1); ++k) near = near || ca[k] || cb[k];
      if (near) {
        ++adjacent;
        adjacent_diff += ca[t] != cb[t];
      }
      ++r.steps;
    }
  }
  if (r.steps) {
    r.agree = static_cast<double>(same) / static_cast<double>(r.steps);
    r.disagree = 1.0 - r.agree;
  }
  r.disagree_adjacent = adjacent ? static_cast<double>(adjacent_diff) / static_cast<double>(adjacent) : 0.0;
  return r;
}

}  // namespace contactdyn::sim
