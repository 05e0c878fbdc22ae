#pragma once

#include <variant>
#include <vector>

#include <Eigen/Core>

#include "crplan/liegroup.hpp"

namespace crplan {

struct Configuration;

/// Elastic ball: hard core of radius r_solid wrapped in a potential field that
/// vanishes beyond r_field.
struct SphereField {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double r_solid = 0.01;
  double r_field = 0.02;
  double k = 1e3;
};

/// Same as SphereField but around the segment [a, b].
struct CapsuleField {
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::UnitZ();
  double r_solid = 0.01;
  double r_field = 0.02;
  double k = 1e3;
};

using Obstacle = std::variant<SphereField, CapsuleField>;

/// Potential linear in the tip position, U+(g) = -force . p. Produces a
/// constant spatial force on the tip. Zero by default.
struct TipLoad {
  Eigen::Vector3d force = Eigen::Vector3d::Zero();
};

struct Scene {
  std::vector<Obstacle> obstacles;
  TipLoad tip;
};

/// Throws DomainError when an obstacle breaks 0 < r_solid < r_field, k > 0,
/// or a capsule has coincident endpoints.
void validate(const Obstacle& obstacle);
void validate(const Scene& scene);

/// Distance from p to the sphere center or capsule axis.
double axis_distance(const Obstacle& obstacle, const Eigen::Vector3d& p);

/// Quartic hinge (k/4)(r_field - d)^4 / (r_field - r_solid)^2 inside the
/// field, 0 outside. Energy per unit backbone length.
double potential(const Obstacle& obstacle, const Eigen::Vector3d& p);
Eigen::Vector3d potential_gradient(const Obstacle& obstacle, const Eigen::Vector3d& p);

/// Sum over all obstacles (overlapping fields add).
double potential(const Scene& scene, const Eigen::Vector3d& p);
Eigen::Vector3d potential_gradient(const Scene& scene, const Eigen::Vector3d& p);

/// Distributed body wrench [0; -R^T grad U(p)] induced by the scene.
Wrench field_wrench(const Scene& scene, const Pose& g);

double tip_potential(const Scene& scene, const Pose& g);

/// Tip body wrench W+ = [0; R^T force].
Wrench tip_wrench(const Scene& scene, const Pose& g);

/// True iff some backbone node lies closer than r_solid + backbone_radius to
/// an obstacle core.
bool in_collision(const Scene& scene, const Configuration& cfg, double backbone_radius);
bool in_collision(const Scene& scene, const Eigen::Vector3d& p, double backbone_radius);

}  // namespace crplan
