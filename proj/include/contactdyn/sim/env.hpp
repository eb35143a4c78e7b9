#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "contactdyn/geometry/se3.hpp"
#include "contactdyn/rng.hpp"
#include "contactdyn/tactile/tactile.hpp"

namespace contactdyn::sim {

enum class Domain { kSim, kRealTwin };
enum class LabelMode { kGeometric, kForceThreshold };

std::string to_string(Domain d);
Domain domain_from_string(const std::string& s);
std::string to_string(LabelMode m);
LabelMode label_mode_from_string(const std::string& s);

//! Planar push environment. The object is a box sliding on a table; fingers
//! are kinematic discs driven by commanded velocities.
struct EnvConfig {
  Domain domain = Domain::kSim;
  double dt = 0.02;                 //!< seconds per recorded step
  int substeps = 10;                //!< integration substeps per step
  double half_x = 0.05;             //!< box half extents, meters
  double half_y = 0.03;
  double half_z = 0.03;             //!< only shapes the point cloud
  bool randomize_extents = false;   //!< per-trajectory extents in [0.6, 1.2] x nominal
  double mass = 0.5;                //!< kg
  double mu = 0.3;                  //!< object-table Coulomb friction
  double mu_finger = 0.5;           //!< finger-object Coulomb cap
  double k_n = 5000.0;              //!< contact stiffness, N/m
  double damping = 100.0;            //!< normal contact damping, N s/m
  double tangential_gain = 50.0;    //!< tangential viscous gain below the Coulomb cap, N s/m
  double finger_radius = 0.01;      //!< meters
  int fingers = 2;
  double sigma_a = 0.01;            //!< actuation noise, m/s
  double sigma_s_pos = 0.0;         //!< observation noise, meters
  double sigma_s_rot = 0.0;         //!< observation noise, radians
  int latency = 0;                  //!< actuation latency, steps
  LabelMode label_mode = LabelMode::kGeometric;
  double workspace = 0.5;           //!< meters
  int cloud_points = 256;
  bool perturb = true;              //!< random pose kicks
  double perturb_interval = 25.0;   //!< mean steps between kicks
  double perturb_pos = 0.002;       //!< meters
  double perturb_rot = 0.017453292519943295;  //!< radians (1 degree)
  double gravity = 9.81;
  tactile::TactileConfig tactile;

  int action_dim() const { return 2 * fingers; }
  void validate() const;

  static EnvConfig sim();
  //! Friction x1.4, stiffness x0.5, one step of latency, 1 mm / 0.5 deg pose
  //! noise, force-threshold labels.
  static EnvConfig real_twin();
};

struct EnvState {
  geom::Pose pose;                       //!< planar: z = 0, rotation about z
  double theta = 0.0;                    //!< heading, kept in sync with pose.R
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  double angular_velocity = 0.0;
  Eigen::VectorXd fingers;               //!< (x0, y0, x1, y1, ...)
  std::deque<Eigen::VectorXd> pending;   //!< latency buffer, oldest first
  double half_x = 0.05;
  double half_y = 0.03;
};

struct ContactGeometry {
  double penetration = 0.0;             //!< > 0 when the finger disc overlaps the box
  Eigen::Vector2d normal = Eigen::Vector2d::Zero();  //!< outward box normal at the contact
  Eigen::Vector2d point = Eigen::Vector2d::Zero();   //!< contact point on the box surface
};

struct StepResult {
  EnvState state;
  std::vector<tactile::FingerForce> forces;  //!< force the object exerts on each finger
};

EnvState make_state(const EnvConfig& cfg, const geom::Pose& pose, const Eigen::VectorXd& fingers);

ContactGeometry finger_contact(const EnvState& state, const Eigen::Vector2d& finger, double radius);

//! Forces on each finger for the current state, fingers moving at `finger_velocity`.
std::vector<tactile::FingerForce> contact_forces(const EnvState& state, const Eigen::VectorXd& finger_velocity,
                                                 const EnvConfig& cfg);

//! Advances one recorded step. `noise` is the actuation noise sample added to
//! the applied command (pass zeros for a noiseless step).
StepResult step_env(const EnvState& state, const Eigen::VectorXd& action, const Eigen::VectorXd& noise,
                    const EnvConfig& cfg);
//! Same, drawing actuation noise from `rng`.
StepResult step_env(const EnvState& state, const Eigen::VectorXd& action, const EnvConfig& cfg, Rng& rng);

//! Geometric label: 1 iff any finger penetrates the box.
int geometric_label(const EnvState& state, const EnvConfig& cfg);

//! Label under the domain's mode. `offset` is used only in force-threshold mode.
int label_contact(const EnvState& state, std::span<const tactile::FingerForce> forces, const EnvConfig& cfg,
                  const tactile::CalibrationOffset& offset);

double kinetic_energy(const EnvState& state, const EnvConfig& cfg);
double box_inertia(const EnvState& state, const EnvConfig& cfg);

}  // namespace contactdyn::sim
