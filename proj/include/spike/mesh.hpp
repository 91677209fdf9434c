#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <functional>
#include <vector>

#include "spike/geometry.hpp"

namespace spike {

/// Local refinement around a boundary point: size h_loc within distance r_ref,
/// growing linearly with slope `grade` beyond.
struct RefinementSpot {
  BoundaryPoint xi;
  double h_loc = 0.0;
  double r_ref = 0.0;
};

struct MeshOptions {
  double h_mesh = 0.02;  ///< far-field size
  double grade = 0.08;
  std::vector<RefinementSpot> spots;
  std::size_t max_nodes = 4'000'000;
};

/// Refinement for a spike of width eps at xi: h_loc = eps/30, r_ref = 5 eps.
MeshOptions spike_mesh_options(double h_mesh, double eps, const BoundaryPoint& xi);

/// P1 finite elements with lumped mass on a boundary-fitted triangulation of a planar domain.
/// The first boundary_nodes().size() nodes are the boundary nodes in counter-clockwise order.
class DiscreteDomain {
 public:
  /// Throws MeshTooCoarse unless every boundary spacing is <= (radius of curvature)/40.
  static DiscreteDomain discretize(const BoundaryManifold& m, const MeshOptions& opt);
  static DiscreteDomain discretize(const BoundaryManifold& m, double h_mesh);

  const BoundaryManifold& manifold() const { return m_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  const std::vector<std::array<int, 3>>& triangles() const { return tris_; }
  std::size_t boundary_count() const { return boundary_t_.size(); }
  const std::vector<double>& boundary_params() const { return boundary_t_; }
  bool is_boundary(std::size_t i) const { return i < boundary_t_.size(); }
  double h_mesh() const { return opt_.h_mesh; }
  const MeshOptions& options() const { return opt_; }

  /// Lumped mass: one third of the adjacent triangle areas plus half of each adjacent
  /// circular-segment area between the boundary chord and the curve.
  const Eigen::VectorXd& weights() const { return mass_; }
  /// K_ij = int grad phi_i . grad phi_j, rows summing to zero.
  const Eigen::SparseMatrix<double>& stiffness() const { return stiff_; }

  /// -M^{-1} K u.
  Eigen::VectorXd laplacian(const Eigen::VectorXd& u) const;
  Eigen::VectorXd sample(const std::function<double(const Vec2&)>& f) const;
  double integrate(const Eigen::VectorXd& u) const { return mass_.dot(u); }

  /// Piecewise-linear interpolation; points outside the triangulation use the nearest triangle.
  double interpolate(const Eigen::VectorXd& u, const Vec2& x) const;
  /// Nodal values of the interpolant of `u` (defined on `src`) at the nodes of this domain.
  Eigen::VectorXd transfer(const DiscreteDomain& src, const Eigen::VectorXd& u) const;

  /// Largest positive off-diagonal stiffness entry (0 for an M-matrix).
  double max_positive_offdiagonal() const;
  double min_angle_degrees() const;
  double max_edge() const;
  double min_edge() const;

 private:
  DiscreteDomain(const BoundaryManifold& m) : m_(m) {}
  void assemble();
  void build_locator();
  int locate(const Vec2& x, Eigen::Vector3d& bary) const;

  BoundaryManifold m_;
  MeshOptions opt_;
  std::vector<Vec2> nodes_;
  std::vector<std::array<int, 3>> tris_;
  std::vector<double> boundary_t_;
  Eigen::VectorXd mass_;
  Eigen::SparseMatrix<double> stiff_;

  Vec2 lo_, hi_;
  double cell_ = 0;
  int gx_ = 0, gy_ = 0;
  std::vector<std::vector<int>> buckets_;
};

}  // namespace spike
