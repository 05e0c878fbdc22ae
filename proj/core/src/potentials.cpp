#include "crplan/potentials.hpp"

#include <algorithm>
#include <cmath>

#include "crplan/errors.hpp"
#include "crplan/mechanics.hpp"

namespace crplan {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Eigen::Vector3d closest_point(const Obstacle& obstacle, const Eigen::Vector3d& p) {
  return std::visit(
      Overloaded{
          [](const SphereField& s) -> Eigen::Vector3d { return s.center; },
          [&p](const CapsuleField& c) -> Eigen::Vector3d {
            const Eigen::Vector3d ab = c.b - c.a;
            const double t = std::clamp((p - c.a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
            return c.a + t * ab;
          }},
      obstacle);
}

struct FieldShape {
  double r_solid, r_field, k;
};

FieldShape shape_of(const Obstacle& obstacle) {
  return std::visit([](const auto& o) { return FieldShape{o.r_solid, o.r_field, o.k}; },
                    obstacle);
}

void check_shape(const FieldShape& s) {
  if (!(s.r_solid > 0.0)) throw DomainError("obstacle r_solid must be positive");
  if (!(s.r_field > s.r_solid)) throw DomainError("obstacle r_field must exceed r_solid");
  if (!(s.k > 0.0)) throw DomainError("obstacle stiffness k must be positive");
}

}  // namespace

void validate(const Obstacle& obstacle) {
  check_shape(shape_of(obstacle));
  if (const auto* c = std::get_if<CapsuleField>(&obstacle)) {
    if ((c->b - c->a).norm() == 0.0) throw DomainError("capsule endpoints coincide");
  }
}

void validate(const Scene& scene) {
  for (const auto& o : scene.obstacles) validate(o);
}

double axis_distance(const Obstacle& obstacle, const Eigen::Vector3d& p) {
  return (p - closest_point(obstacle, p)).norm();
}

double potential(const Obstacle& obstacle, const Eigen::Vector3d& p) {
  const FieldShape s = shape_of(obstacle);
  const double d = axis_distance(obstacle, p);
  if (d >= s.r_field) return 0.0;
  const double depth = s.r_field - d;
  const double band = s.r_field - s.r_solid;
  return 0.25 * s.k * depth * depth * depth * depth / (band * band);
}

Eigen::Vector3d potential_gradient(const Obstacle& obstacle, const Eigen::Vector3d& p) {
  const FieldShape s = shape_of(obstacle);
  const Eigen::Vector3d r = p - closest_point(obstacle, p);
  const double d = r.norm();
  if (d >= s.r_field || d == 0.0) return Eigen::Vector3d::Zero();
  const double depth = s.r_field - d;
  const double band = s.r_field - s.r_solid;
  const double dU_dd = -s.k * depth * depth * depth / (band * band);
  return dU_dd * r / d;
}

double potential(const Scene& scene, const Eigen::Vector3d& p) {
  double total = 0.0;
  for (const auto& o : scene.obstacles) total += potential(o, p);
  return total;
}

Eigen::Vector3d potential_gradient(const Scene& scene, const Eigen::Vector3d& p) {
  Eigen::Vector3d total = Eigen::Vector3d::Zero();
  for (const auto& o : scene.obstacles) total += potential_gradient(o, p);
  return total;
}

Wrench field_wrench(const Scene& scene, const Pose& g) {
  Wrench W = Wrench::Zero();
  if (scene.obstacles.empty()) return W;
  W.tail<3>() = -g.R.transpose() * potential_gradient(scene, g.p);
  return W;
}

double tip_potential(const Scene& scene, const Pose& g) {
  return -scene.tip.force.dot(g.p);
}

Wrench tip_wrench(const Scene& scene, const Pose& g) {
  Wrench W = Wrench::Zero();
  W.tail<3>() = g.R.transpose() * scene.tip.force;
  return W;
}

bool in_collision(const Scene& scene, const Eigen::Vector3d& p, double backbone_radius) {
  for (const auto& o : scene.obstacles) {
    const double clearance = shape_of(o).r_solid + backbone_radius;
    if (axis_distance(o, p) < clearance) return true;
  }
  return false;
}

bool in_collision(const Scene& scene, const Configuration& cfg, double backbone_radius) {
  for (const auto& g : cfg.poses) {
    if (in_collision(scene, g.p, backbone_radius)) return true;
  }
  return false;
}

}  // namespace crplan
