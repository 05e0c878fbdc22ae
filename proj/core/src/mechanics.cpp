#include "crplan/mechanics.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <string>

#include <Eigen/Geometry>

#include "crplan/errors.hpp"

namespace crplan {

namespace {

constexpr int kReorthonormalizeEvery = 100;
constexpr int kMinIntervals = 50;

// [a, b] = ad(a) b without forming the 6x6 matrix.
Twist bracket(const Twist& a, const Twist& b) {
  Twist out;
  out.head<3>() = a.head<3>().cross(b.head<3>());
  out.tail<3>() = a.tail<3>().cross(b.head<3>()) + a.head<3>().cross(b.tail<3>());
  return out;
}

// ad(xi)^T Lambda = [m x w + n x v; n x w].
Wrench coadjoint(const Twist& xi, const Wrench& L) {
  Wrench out;
  out.head<3>() = L.head<3>().cross(xi.head<3>()) + L.tail<3>().cross(xi.tail<3>());
  out.tail<3>() = L.tail<3>().cross(xi.head<3>());
  return out;
}

// Truncated inverse of the left-trivialized dexp for g = g0 exp(Omega),
// g' = g hat(A). Accurate to the order needed by the 4-stage scheme.
Twist dexpinv(const Twist& omega, const Twist& A) {
  const Twist b1 = bracket(omega, A);
  return A + 0.5 * b1 + (1.0 / 12.0) * bracket(omega, b1);
}

struct RodFrame {
  Vector6d c_inv;
  Wrench actuation;
  Twist xi0;
  const Scene* scene;

  Twist strain(const Wrench& L) const { return c_inv.cwiseProduct(L - actuation); }

  void eval(const Pose& g, const Wrench& L, Twist& xi, Wrench& dL) const {
    xi = xi0 + strain(L);
    dL = coadjoint(xi, L) - field_wrench(*scene, g);
  }
};

RodFrame make_frame(const Actuation& tau, const RobotParams& params, const Scene& scene) {
  return RodFrame{stiffness_diagonal(params).cwiseInverse(), actuation_wrench(tau, params),
                  params.xi0, &scene};
}

RodState rkmk_step(const RodState& s0, double h, const RodFrame& f) {
  Twist A1, A2, A3, A4;
  Wrench L1, L2, L3, L4;

  f.eval(s0.g, s0.Lambda, A1, L1);
  const Twist K1 = A1;

  Twist omega = 0.5 * h * K1;
  f.eval(s0.g * exp_se3(omega), s0.Lambda + 0.5 * h * L1, A2, L2);
  const Twist K2 = dexpinv(omega, A2);

  omega = 0.5 * h * K2;
  f.eval(s0.g * exp_se3(omega), s0.Lambda + 0.5 * h * L2, A3, L3);
  const Twist K3 = dexpinv(omega, A3);

  omega = h * K3;
  f.eval(s0.g * exp_se3(omega), s0.Lambda + h * L3, A4, L4);
  const Twist K4 = dexpinv(omega, A4);

  RodState out;
  out.g = s0.g * exp_se3((h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4));
  out.Lambda = s0.Lambda + (h / 6.0) * (L1 + 2.0 * L2 + 2.0 * L3 + L4);
  return out;
}

bool finite_state(const RodState& s) {
  return s.Lambda.allFinite() && s.g.p.allFinite() && s.g.R.allFinite();
}

template <class Visitor>
RodState integrate(RodState state, double length, int intervals, const RodFrame& frame,
                   Visitor&& visit) {
  const double h = length / intervals;
  visit(0, state);
  for (int k = 1; k <= intervals; ++k) {
    state = rkmk_step(state, h, frame);
    if (k % kReorthonormalizeEvery == 0) state.g.R = project_to_rotation(state.g.R);
    if (!finite_state(state)) {
      const double s = h * k;
      throw IntegrationDiverged(s, "rod integration diverged at s = " + std::to_string(s));
    }
    visit(k, state);
  }
  return state;
}

void require_length(double l) {
  if (!(l > 0.0) || !std::isfinite(l)) throw DomainError("backbone length must be positive");
}

}  // namespace

void RobotParams::validate() const {
  if (!(E > 0.0)) throw DomainError("Young's modulus E must be positive");
  if (!(G > 0.0)) throw DomainError("shear modulus G must be positive");
  if (!(r_backbone > 0.0)) throw DomainError("backbone radius must be positive");
  if (!(d_tendon > 0.0)) throw DomainError("tendon offset must be positive");
  if (!(tau_max > 0.0)) throw DomainError("tau_max must be positive");
  if (!(l_min > 0.0 && l_min < l_max)) throw DomainError("length range requires 0 < l_min < l_max");
}

Vector6d stiffness_diagonal(const RobotParams& p) {
  const double A = std::numbers::pi * p.r_backbone * p.r_backbone;
  const double I = 0.25 * std::numbers::pi * std::pow(p.r_backbone, 4);
  const double J = 2.0 * I;
  Vector6d c;
  c << p.E * I, p.E * I, p.G * J, p.G * A, p.G * A, p.E * A;
  return c;
}

Actuation actuation_lower(const RobotParams& p) { return {-p.tau_max, -p.tau_max, p.l_min}; }
Actuation actuation_upper(const RobotParams& p) { return {p.tau_max, p.tau_max, p.l_max}; }

void check_actuation(const Actuation& tau, const RobotParams& p) {
  if (!tau.allFinite()) throw DomainError("actuation has non-finite entries");
  if (std::abs(tau(0)) > p.tau_max) throw DomainError("|tau1| exceeds tau_max");
  if (std::abs(tau(1)) > p.tau_max) throw DomainError("|tau2| exceeds tau_max");
  if (tau(2) < p.l_min) throw DomainError("length tau3 below l_min");
  if (tau(2) > p.l_max) throw DomainError("length tau3 above l_max");
}

Wrench actuation_wrench(const Actuation& tau, const RobotParams& p) {
  Wrench w = Wrench::Zero();
  w(0) = p.d_tendon * tau(1);
  w(1) = -p.d_tendon * tau(0);
  if (p.axial_tendon_load) w(5) = -(std::abs(tau(0)) + std::abs(tau(1)));
  return w;
}

RodDerivative ode_rhs(const Pose& g, const Wrench& Lambda, const Actuation& tau,
                      const RobotParams& params, const Scene& scene) {
  const RodFrame frame = make_frame(tau, params, scene);
  RodDerivative d;
  frame.eval(g, Lambda, d.xi, d.dLambda);
  d.dg = g.matrix() * hat(d.xi);
  return d;
}

RodState rk4_step(const RodState& state, double h, const Actuation& tau,
                  const RobotParams& params, const Scene& scene) {
  return rkmk_step(state, h, make_frame(tau, params, scene));
}

Configuration integrate_ivp(const Wrench& lambda, const Actuation& tau,
                            const StaticsModel& model) {
  return integrate_ivp(lambda, tau, model, model.grid_size);
}

Configuration integrate_ivp(const Wrench& lambda, const Actuation& tau, const StaticsModel& model,
                            int intervals) {
  check_actuation(tau, model.robot);
  if (intervals < kMinIntervals) throw DomainError("grid size must be at least 50 intervals");
  const RodFrame frame = make_frame(tau, model.robot, model.scene);

  Configuration cfg;
  cfg.length = tau(2);
  cfg.tau = tau;
  cfg.poses.resize(intervals + 1);
  cfg.wrenches.resize(intervals + 1);
  cfg.strains.resize(intervals + 1);

  RodState start;
  start.Lambda = lambda;
  integrate(start, tau(2), intervals, frame, [&](int k, const RodState& s) {
    cfg.poses[k] = s.g;
    cfg.wrenches[k] = s.Lambda;
    cfg.strains[k] = frame.strain(s.Lambda);
  });
  return cfg;
}

RodState integrate_tip(const Wrench& lambda, const Actuation& tau, const StaticsModel& model) {
  require_length(tau(2));
  const RodFrame frame = make_frame(tau, model.robot, model.scene);
  RodState start;
  start.Lambda = lambda;
  return integrate(start, tau(2), model.grid_size, frame, [](int, const RodState&) {});
}

RodState integrate_backward(const RodState& tip_state, const Actuation& tau,
                            const StaticsModel& model, int intervals) {
  require_length(tau(2));
  const RodFrame frame = make_frame(tau, model.robot, model.scene);
  return integrate(tip_state, -tau(2), intervals, frame, [](int, const RodState&) {});
}

double total_energy(const Configuration& cfg, const StaticsModel& model) {
  const Vector6d c = stiffness_diagonal(model.robot);
  const Wrench lad = actuation_wrench(cfg.tau, model.robot);
  const int n = cfg.intervals();
  const double h = cfg.length / n;
  double sum = 0.0;
  for (int k = 0; k <= n; ++k) {
    const Twist& u = cfg.strains[k];
    const double density = 0.5 * u.dot(c.cwiseProduct(u)) + u.dot(lad) +
                           potential(model.scene, cfg.poses[k].p);
    sum += (k == 0 || k == n) ? 0.5 * density : density;
  }
  return h * sum + tip_potential(model.scene, cfg.tip());
}

double perturbed_energy(const Wrench& lambda, const Actuation& tau, const StaticsModel& model,
                        const ControlPerturbation& eta, double eps, int intervals) {
  require_length(tau(2));
  const RodFrame f = make_frame(tau, model.robot, model.scene);
  const Vector6d c = stiffness_diagonal(model.robot);
  const double h = tau(2) / intervals;

  // Reference state (g*, Lambda*) supplies u*(s); the perturbed pose ge follows
  // xi0 + u* + eps eta and accumulates the energy density.
  Pose g = Pose::identity();
  Wrench L = lambda;
  Pose ge = Pose::identity();
  double energy = 0.0;

  auto density = [&](const Twist& ue, const Pose& pose) {
    return 0.5 * ue.dot(c.cwiseProduct(ue)) + ue.dot(f.actuation) +
           potential(model.scene, pose.p);
  };

  for (int k = 0; k < intervals; ++k) {
    const double s = h * k;
    Twist A[4], Ae[4];
    Wrench dL[4];
    double e[4];
    Twist K[4], Ke[4];

    const double offsets[4] = {0.0, 0.5, 0.5, 1.0};
    Twist omega = Twist::Zero();
    Twist omega_e = Twist::Zero();
    for (int i = 0; i < 4; ++i) {
      const Pose gi = i == 0 ? g : g * exp_se3(omega);
      const Pose gei = i == 0 ? ge : ge * exp_se3(omega_e);
      const Wrench Li = i == 0 ? L : Wrench(L + offsets[i] * h * dL[i - 1]);
      f.eval(gi, Li, A[i], dL[i]);
      const Twist ue = f.strain(Li) + eps * eta(s + offsets[i] * h);
      Ae[i] = f.xi0 + ue;
      e[i] = density(ue, gei);
      K[i] = i == 0 ? A[i] : dexpinv(omega, A[i]);
      Ke[i] = i == 0 ? Ae[i] : dexpinv(omega_e, Ae[i]);
      if (i < 3) {
        omega = offsets[i + 1] * h * K[i];
        omega_e = offsets[i + 1] * h * Ke[i];
      }
    }
    g = g * exp_se3((h / 6.0) * (K[0] + 2.0 * K[1] + 2.0 * K[2] + K[3]));
    ge = ge * exp_se3((h / 6.0) * (Ke[0] + 2.0 * Ke[1] + 2.0 * Ke[2] + Ke[3]));
    L = L + (h / 6.0) * (dL[0] + 2.0 * dL[1] + 2.0 * dL[2] + dL[3]);
    energy += (h / 6.0) * (e[0] + 2.0 * e[1] + 2.0 * e[2] + e[3]);
    if ((k + 1) % kReorthonormalizeEvery == 0) {
      g.R = project_to_rotation(g.R);
      ge.R = project_to_rotation(ge.R);
    }
  }
  if (!std::isfinite(energy)) throw IntegrationDiverged(tau(2), "perturbed energy diverged");
  return energy + tip_potential(model.scene, ge);
}

EnergyVariation energy_first_variation(const Wrench& lambda, const Actuation& tau,
                                       const StaticsModel& model,
                                       const ControlPerturbation& eta, double step,
                                       int intervals) {
  EnergyVariation out;
  out.energy = perturbed_energy(lambda, tau, model, eta, 0.0, intervals);
  const double plus = perturbed_energy(lambda, tau, model, eta, step, intervals);
  const double minus = perturbed_energy(lambda, tau, model, eta, -step, intervals);
  out.derivative = (plus - minus) / (2.0 * step);
  return out;
}

Actuation recover_actuation(const Configuration& cfg, const RobotParams& params) {
  const Vector6d c = stiffness_diagonal(params);
  Eigen::Vector2d moment_sum = Eigen::Vector2d::Zero();
  for (std::size_t k = 0; k < cfg.poses.size(); ++k) {
    const Wrench lad = cfg.wrenches[k] - c.cwiseProduct(cfg.strains[k]);
    moment_sum += lad.head<2>();
  }
  const Eigen::Vector2d m = moment_sum / static_cast<double>(cfg.poses.size());
  return {-m(1) / params.d_tendon, m(0) / params.d_tendon, cfg.length};
}

double constitutive_defect(const Configuration& cfg, const RobotParams& params) {
  const Vector6d c = stiffness_diagonal(params);
  const Wrench lad = actuation_wrench(cfg.tau, params);
  double worst = 0.0;
  for (std::size_t k = 0; k < cfg.poses.size(); ++k) {
    const Wrench r = c.cwiseProduct(cfg.strains[k]) + lad - cfg.wrenches[k];
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

void write_configuration(std::ostream& os, const Configuration& cfg) {
  os << "# s R00 R01 R02 R10 R11 R12 R20 R21 R22 px py pz"
        " m1 m2 m3 f1 f2 f3 u1 u2 u3 u4 u5 u6\n";
  const auto old_precision = os.precision(12);
  for (int k = 0; k <= cfg.intervals(); ++k) {
    const Pose& g = cfg.poses[k];
    os << cfg.arclength(k);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) os << ' ' << g.R(i, j);
    for (int i = 0; i < 3; ++i) os << ' ' << g.p(i);
    for (int i = 0; i < 6; ++i) os << ' ' << cfg.wrenches[k](i);
    for (int i = 0; i < 6; ++i) os << ' ' << cfg.strains[k](i);
    os << '\n';
  }
  os.precision(old_precision);
}

}  // namespace crplan
