#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "crplan/liegroup.hpp"
#include "crplan/potentials.hpp"

namespace crplan {

inline constexpr int kActuationDim = 3;
inline constexpr int kAmbientDim = 6 + kActuationDim;

/// (tau1, tau2, l): signed differential tendon tensions of the two opposing
/// pairs (N) and the commanded backbone length (m).
using Actuation = Eigen::Vector3d;

/// Single-segment tendon-driven robot with four parallel tendons, two
/// differential pairs, and an extensible backbone.
struct RobotParams {
  double E = 50e9;
  double G = 20e9;
  double r_backbone = 1e-3;
  double d_tendon = 15e-3;
  double tau_max = 70.0;
  double l_min = 0.025;
  double l_max = 0.100;
  Twist xi0 = (Twist() << 0, 0, 0, 0, 0, 1).finished();
  /// Include the axial compression -(|tau1| + |tau2|) in the actuation wrench.
  bool axial_tendon_load = true;

  void validate() const;
};

/// diag(EI, EI, GJ, GA, GA, EA) stored as its diagonal.
Vector6d stiffness_diagonal(const RobotParams& params);

/// Lower/upper corner of the admissible actuation box.
Actuation actuation_lower(const RobotParams& params);
Actuation actuation_upper(const RobotParams& params);

/// Throws DomainError naming the violated bound.
void check_actuation(const Actuation& tau, const RobotParams& params);

/// [d tau2, -d tau1, 0, 0, 0, -(|tau1| + |tau2|)], independent of arclength.
Wrench actuation_wrench(const Actuation& tau, const RobotParams& params);

/// Everything the statics depend on besides the shooting unknowns.
struct StaticsModel {
  RobotParams robot;
  Scene scene;
  int grid_size = 100;
};

/// Discretized solution of the rod equations on N equal intervals of [0, l].
struct Configuration {
  double length = 0.0;
  Actuation tau = Actuation::Zero();
  std::vector<Pose> poses;
  std::vector<Wrench> wrenches;
  std::vector<Twist> strains;

  int intervals() const { return static_cast<int>(poses.size()) - 1; }
  double arclength(int k) const { return length * k / intervals(); }
  const Pose& tip() const { return poses.back(); }
};

struct RodDerivative {
  Eigen::Matrix4d dg;
  Twist xi;
  Wrench dLambda;
};

/// Right-hand side of the canonical equations:
/// u = C^-1 (Lambda - Lambda_ad), xi = xi0 + u,
/// g' = g hat(xi), Lambda' = ad(xi)^T Lambda - W(g).
RodDerivative ode_rhs(const Pose& g, const Wrench& Lambda, const Actuation& tau,
                      const RobotParams& params, const Scene& scene);

/// State of the rod at one arclength.
struct RodState {
  Pose g;
  Wrench Lambda = Wrench::Zero();
};

/// One Runge-Kutta-Munthe-Kaas step of order four; h may be negative.
RodState rk4_step(const RodState& state, double h, const Actuation& tau,
                  const RobotParams& params, const Scene& scene);

/// Forward IVP from g(0) = e, Lambda(0) = lambda over
/// [0, tau(2)] with grid_size RK4 steps. Throws IntegrationDiverged.
Configuration integrate_ivp(const Wrench& lambda, const Actuation& tau, const StaticsModel& model);
Configuration integrate_ivp(const Wrench& lambda, const Actuation& tau, const StaticsModel& model,
                            int intervals);

/// Same integration, only the tip state. Skips the actuation range check so
/// finite-difference stencils may straddle the bounds.
RodState integrate_tip(const Wrench& lambda, const Actuation& tau, const StaticsModel& model);

/// Integrates the canonical equations from (g(l), Lambda(l)) back to s = 0.
RodState integrate_backward(const RodState& tip_state, const Actuation& tau,
                            const StaticsModel& model, int intervals);

/// Trapezoidal quadrature of the total potential energy:
/// int (u^T C u / 2 + u^T Lambda_ad + U(g)) ds + U+(g(l)).
double total_energy(const Configuration& cfg, const StaticsModel& model);

/// Smooth control perturbation eta(s) for the energy first-variation check.
using ControlPerturbation = std::function<Twist(double s)>;

/// Total energy of the kinematic trajectory driven by u*(s) + eps * eta(s),
/// where u* comes from the IVP at (lambda, tau). The energy integral is
/// carried as an extra state of the same fourth-order integrator.
double perturbed_energy(const Wrench& lambda, const Actuation& tau, const StaticsModel& model,
                        const ControlPerturbation& eta, double eps, int intervals);

struct EnergyVariation {
  double energy = 0.0;
  double derivative = 0.0;
};

/// Central difference of perturbed_energy at eps = +/- step.
EnergyVariation energy_first_variation(const Wrench& lambda, const Actuation& tau,
                                       const StaticsModel& model,
                                       const ControlPerturbation& eta, double step = 1e-5,
                                       int intervals = 400);

/// Least-squares actuation recovered from Lambda_k - C u_k along the grid
/// (moment rows give the tensions, the length is the grid extent).
Actuation recover_actuation(const Configuration& cfg, const RobotParams& params);

/// Max over nodes of |C u_k + Lambda_ad - Lambda_k|.
double constitutive_defect(const Configuration& cfg, const RobotParams& params);

/// One line per node: s, R (row-major, 9), p (3), Lambda (6), u (6).
/// Whitespace separated, '#' header line.
void write_configuration(std::ostream& os, const Configuration& cfg);

}  // namespace crplan
