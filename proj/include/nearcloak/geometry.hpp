#pragma once

#include <array>
#include <complex>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nearcloak/types.hpp"

namespace nearcloak {

/// Quadrature nodes, positive weights and outward unit normals on a closed surface.
struct SurfaceQuadrature {
  std::vector<Vec3> nodes;
  std::vector<double> weights;
  std::vector<Vec3> normals;
  double radius = 0.0;  ///< > 0 for an origin-centred sphere

  std::size_t size() const { return nodes.size(); }
  double total_weight() const;
};

/// Closed triangulated surface. For sphere meshes (nominal_radius > 0) the
/// quadrature lives on the exact sphere: flat Gauss points are projected
/// radially and weighted with the projection Jacobian.
struct SurfaceMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  SurfaceQuadrature quad;
  double nominal_radius = 0.0;
  int rule_degree = 2;

  bool is_sphere() const { return nominal_radius > 0.0; }
  std::size_t vertex_count() const { return vertices.size(); }
  double max_edge_length() const;
};

/// Complex tangential field sampled at the nodes of some point set, with
/// optional surface divergence samples.
struct TangentialTrace {
  std::vector<CVec3> values;
  std::optional<std::vector<cplx>> divergence;
};

inline constexpr int max_sphere_refinement = 7;

/// Icosahedral sphere; vertices of level r are a prefix of those of level r+1.
SurfaceMesh make_sphere_mesh(double radius, int refinement, int rule_degree = 2);

/// Mesh from arbitrary closed connectivity with flat-panel quadrature.
SurfaceMesh make_polyhedral_mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles,
                                 int rule_degree = 2);

SurfaceMesh scale_mesh(const SurfaceMesh& mesh, double rho);

/// Throws ErrorKind::mesh on out-of-range indices, open edges or degenerate panels.
void validate_mesh(const SurfaceMesh& mesh);

cplx integrate_scalar(const SurfaceQuadrature& quad, const std::function<cplx(const Vec3&)>& f);
cplx integrate_scalar(const SurfaceMesh& mesh, const std::function<cplx(const Vec3&)>& f);

/// Gauss-Legendre in cos(theta) times trapezoid in phi. Exact for products of
/// spherical harmonics up to total degree 2*n_theta-1 (and < n_phi in phi).
SurfaceQuadrature make_sphere_grid(double radius, int n_theta, int n_phi);

/// Grid exact for products of tangential harmonics of degree <= n_max.
SurfaceQuadrature make_sphere_grid_for_degree(double radius, int n_max);

void write_off(std::ostream& os, const SurfaceMesh& mesh);
void write_off(const std::string& path, const SurfaceMesh& mesh);
SurfaceMesh read_off(std::istream& is);
SurfaceMesh read_off(const std::string& path);

}  // namespace nearcloak
