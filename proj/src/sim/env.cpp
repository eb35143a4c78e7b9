#include "contactdyn/sim/env.hpp"

#include <algorithm>
#include <cmath>

#include "contactdyn/error.hpp"

namespace contactdyn::sim {

namespace {

using Vec2 = Eigen::Vector2d;

Eigen::Matrix2d rot2(double theta) {
  Eigen::Matrix2d r;
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

Vec2 planar(const geom::Vec3& v) { return Vec2(v.x(), v.y()); }

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

struct ObjectWrench {
  Vec2 force = Vec2::Zero();
  double torque = 0.0;
  std::vector<tactile::FingerForce> finger_forces;
};

ObjectWrench compute_wrench(const EnvState& s, const Eigen::VectorXd& finger_velocity, const EnvConfig& cfg) {
  ObjectWrench w;
  const Vec2 center = planar(s.pose.p);
  const double limit = std::min(s.half_x, s.half_y);
  for (int f = 0; f < cfg.fingers; ++f) {
    const Vec2 finger = s.fingers.segment<2>(2 * f);
    const ContactGeometry g = finger_contact(s, finger, cfg.finger_radius);
    tactile::FingerForce on_finger = tactile::FingerForce::Zero();
    if (g.penetration > 0.0) {
      if (g.penetration > limit) {
        fail(ErrorCode::kInstability, "finger penetration " + std::to_string(g.penetration) +
                                          " m exceeds half the object extent");
      }
      const Vec2 r = g.point - center;
      const Vec2 v_point = s.velocity + s.angular_velocity * Vec2(-r.y(), r.x());
      const Vec2 v_rel = finger_velocity.segment<2>(2 * f) - v_point;
      const double approach = -v_rel.dot(g.normal);
      const double fn = std::max(0.0, cfg.k_n * g.penetration + cfg.damping * approach);
      const Vec2 vt = v_rel - v_rel.dot(g.normal) * g.normal;
      Vec2 ft = Vec2::Zero();
      const double speed_t = vt.norm();
      if (speed_t > 0.0) ft = std::min(cfg.tangential_gain * speed_t, cfg.mu_finger * fn) * (vt / speed_t);
      const Vec2 on_object = -fn * g.normal + ft;
      w.force += on_object;
      w.torque += cross2(r, on_object);
      on_finger = tactile::FingerForce(-on_object.x(), -on_object.y(), 0.0);
    }
    w.finger_forces.push_back(on_finger);
  }
  return w;
}

}  // namespace

std::string to_string(Domain d) { return d == Domain::kSim ? "sim" : "real-twin"; }

Domain domain_from_string(const std::string& s) {
  if (s == "sim") return Domain::kSim;
  if (s == "real-twin" || s == "real") return Domain::kRealTwin;
  fail(ErrorCode::kConfig, "unknown domain '" + s + "'");
}

std::string to_string(LabelMode m) { return m == LabelMode::kGeometric ? "geometric" : "force-threshold"; }

LabelMode label_mode_from_string(const std::string& s) {
  if (s == "geometric") return LabelMode::kGeometric;
  if (s == "force-threshold") return LabelMode::kForceThreshold;
  fail(ErrorCode::kConfig, "unknown label mode '" + s + "'");
}

void EnvConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::kConfig, std::string("env: ") + what);
  };
  check(dt > 0.0, "dt must be positive");
  check(substeps >= 1, "substeps must be >= 1");
  check(half_x > 0.0 && half_y > 0.0 && half_z > 0.0, "half extents must be positive");
  check(mass > 0.0, "mass must be positive");
  check(mu >= 0.0 && mu_finger >= 0.0, "friction coefficients must be >= 0");
  check(k_n > 0.0, "k_n must be positive");
  check(damping >= 0.0 && tangential_gain >= 0.0, "damping gains must be >= 0");
  check(finger_radius > 0.0, "finger_radius must be positive");
  check(fingers >= 1, "at least one finger");
  check(sigma_a >= 0.0 && sigma_s_pos >= 0.0 && sigma_s_rot >= 0.0, "noise scales must be >= 0");
  check(latency >= 0, "latency must be >= 0");
  check(workspace > 0.0, "workspace must be positive");
  check(cloud_points >= 1, "cloud_points must be >= 1");
  check(perturb_interval > 0.0, "perturb_interval must be positive");
  if (domain == Domain::kSim) {
    check(sigma_s_pos == 0.0 && sigma_s_rot == 0.0, "sim domain has no observation noise");
    check(latency == 0, "sim domain has no latency");
    check(label_mode == LabelMode::kGeometric, "sim domain uses geometric labels");
  } else {
    check(label_mode == LabelMode::kForceThreshold, "real-twin domain uses force-threshold labels");
  }
  tactile.validate();
}

EnvConfig EnvConfig::sim() { return EnvConfig{}; }

EnvConfig EnvConfig::real_twin() {
  EnvConfig c;
  c.domain = Domain::kRealTwin;
  c.mu *= 1.4;
  c.mu_finger *= 1.4;
  c.k_n *= 0.5;
  c.latency = 1;
  c.sigma_s_pos = 0.001;
  c.sigma_s_rot = 0.5 * 0.017453292519943295;
  c.label_mode = LabelMode::kForceThreshold;
  return c;
}

EnvState make_state(const EnvConfig& cfg, const geom::Pose& pose, const Eigen::VectorXd& fingers) {
  if (fingers.size() != cfg.action_dim()) fail(ErrorCode::kInvalidArgument, "finger vector has wrong dimension");
  EnvState s;
  s.theta = geom::planar_angle(pose);
  s.pose = geom::planar_pose(pose.p.x(), pose.p.y(), s.theta);
  s.fingers = fingers;
  s.half_x = cfg.half_x;
  s.half_y = cfg.half_y;
  for (int i = 0; i < cfg.latency; ++i) s.pending.push_back(Eigen::VectorXd::Zero(cfg.action_dim()));
  return s;
}

ContactGeometry finger_contact(const EnvState& state, const Eigen::Vector2d& finger, double radius) {
  const Eigen::Matrix2d R = rot2(state.theta);
  const Vec2 center = planar(state.pose.p);
  const Vec2 local = R.transpose() * (finger - center);
  const Vec2 half(state.half_x, state.half_y);
  const Vec2 d = local.cwiseAbs() - half;
  ContactGeometry g;
  Vec2 n_local;
  Vec2 surface_local;
  double dist;
  if (d.x() > 0.0 || d.y() > 0.0) {
    const Vec2 q = d.cwiseMax(0.0);
    dist = q.norm();
    n_local = Vec2(local.x() >= 0 ? q.x() : -q.x(), local.y() >= 0 ? q.y() : -q.y()) / dist;
    surface_local = local.cwiseMax(-half).cwiseMin(half);
  } else {
    const int axis = d.x() > d.y() ? 0 : 1;
    dist = d[axis];
    n_local = Vec2::Zero();
    n_local[axis] = local[axis] >= 0 ? 1.0 : -1.0;
    surface_local = local;
    surface_local[axis] = n_local[axis] * half[axis];
  }
  g.penetration = radius - dist;
  g.normal = R * n_local;
  g.point = center + R * surface_local;
  return g;
}

std::vector<tactile::FingerForce> contact_forces(const EnvState& state, const Eigen::VectorXd& finger_velocity,
                                                 const EnvConfig& cfg) {
  return compute_wrench(state, finger_velocity, cfg).finger_forces;
}

double box_inertia(const EnvState& s, const EnvConfig& cfg) {
  return cfg.mass * (s.half_x * s.half_x + s.half_y * s.half_y) / 3.0;
}

double kinetic_energy(const EnvState& s, const EnvConfig& cfg) {
  return 0.5 * cfg.mass * s.velocity.squaredNorm() + 0.5 * box_inertia(s, cfg) * s.angular_velocity * s.angular_velocity;
}

StepResult step_env(const EnvState& state, const Eigen::VectorXd& action, const Eigen::VectorXd& noise,
                    const EnvConfig& cfg) {
  if (action.size() != cfg.action_dim() || noise.size() != cfg.action_dim()) {
    fail(ErrorCode::kInvalidArgument, "step_env: action dimension mismatch");
  }
  if (!action.allFinite() || !state.velocity.allFinite() || !std::isfinite(state.angular_velocity) ||
      !state.fingers.allFinite() || !state.pose.p.allFinite()) {
    fail(ErrorCode::kNonFinite, "step_env: non-finite state or action");
  }
  StepResult out{state, {}};
  EnvState& s = out.state;
  Eigen::VectorXd applied = action;
  if (cfg.latency > 0) {
    s.pending.push_back(action);
    applied = s.pending.front();
    s.pending.pop_front();
  }
  const Eigen::VectorXd finger_velocity = applied + noise;
  const double h = cfg.dt / cfg.substeps;
  const double inertia = box_inertia(s, cfg);
  const double friction_dv = cfg.mu * cfg.gravity * h;
  const double friction_dw = cfg.mu * cfg.mass * cfg.gravity * 0.5 * (s.half_x + s.half_y) / inertia * h;
  for (int k = 0; k < cfg.substeps; ++k) {
    const ObjectWrench w = compute_wrench(s, finger_velocity, cfg);
    s.velocity += h * w.force / cfg.mass;
    s.angular_velocity += h * w.torque / inertia;
    // table friction: removes at most friction_dv of speed per substep, sticks at rest
    const double speed = s.velocity.norm();
    s.velocity = speed <= friction_dv ? Vec2::Zero() : Vec2(s.velocity * (1.0 - friction_dv / speed));
    const double spin = std::abs(s.angular_velocity);
    s.angular_velocity = spin <= friction_dw ? 0.0 : s.angular_velocity * (1.0 - friction_dw / spin);
    s.pose.p.x() += h * s.velocity.x();
    s.pose.p.y() += h * s.velocity.y();
    s.theta += h * s.angular_velocity;
    s.fingers += h * finger_velocity;
  }
  s.theta = std::remainder(s.theta, 2.0 * 3.14159265358979323846);
  s.pose = geom::planar_pose(s.pose.p.x(), s.pose.p.y(), s.theta);
  out.forces = compute_wrench(s, finger_velocity, cfg).finger_forces;
  if (!s.velocity.allFinite() || !std::isfinite(s.angular_velocity)) fail(ErrorCode::kNonFinite, "step_env diverged");
  return out;
}

StepResult step_env(const EnvState& state, const Eigen::VectorXd& action, const EnvConfig& cfg, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd noise(cfg.action_dim());
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = cfg.sigma_a * gauss(rng);
  return step_env(state, action, noise, cfg);
}

int geometric_label(const EnvState& state, const EnvConfig& cfg) {
  for (int f = 0; f < cfg.fingers; ++f) {
    if (finger_contact(state, state.fingers.segment<2>(2 * f), cfg.finger_radius).penetration > 0.0) return 1;
  }
  return 0;
}

int label_contact(const EnvState& state, std::span<const tactile::FingerForce> forces, const EnvConfig& cfg,
                  const tactile::CalibrationOffset& offset) {
  if (cfg.label_mode == LabelMode::kGeometric) return geometric_label(state, cfg);
  return tactile::detect_contact(forces, offset, cfg.tactile);
}

}  // namespace contactdyn::sim
