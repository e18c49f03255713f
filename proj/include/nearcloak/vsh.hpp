#pragma once

#include <vector>

#include "nearcloak/geometry.hpp"

namespace nearcloak {

/// Number of (n, m) pairs with 1 <= n <= n_max.
inline int vsh_mode_count(int n_max) { return n_max * (n_max + 2); }
/// Index of (n, m), n >= 1, within one polarization block.
inline int vsh_index(int n, int m) { return n * n + n + m - 1; }

/// Tangential field sum_nm a_nm grad_S Y_nm + b_nm (grad_S Y_nm ^ nu) on a sphere.
struct VshExpansion {
  int n_max = 1;
  Eigen::VectorXcd a;
  Eigen::VectorXcd b;

  static VshExpansion zero(int n_max);
  /// [a; b], length 2 n_max (n_max + 2).
  Eigen::VectorXcd flat() const;
  static VshExpansion from_flat(int n_max, const Eigen::VectorXcd& v);
  /// Copy truncated or zero-padded to another degree.
  VshExpansion resized(int n_max) const;
};

/// grad_S Y_nm on the sphere of radius R (1/R times the angular gradient).
Vec3 vsh_gradient_basis(int n, int m, const Vec3& x);
/// grad_S Y_nm ^ nu.
Vec3 vsh_rotated_basis(int n, int m, const Vec3& x);

/// Values of the expansion at arbitrary points on its sphere.
std::vector<CVec3> vsh_synthesize(const VshExpansion& e, const std::vector<Vec3>& points);
TangentialTrace vsh_synthesize_trace(const VshExpansion& e, const SurfaceQuadrature& quad);

/// Quadrature projection onto the tangential harmonics; exact for band-limited
/// input on make_sphere_grid_for_degree grids. Throws if the trace is not tangential.
VshExpansion vsh_analyze(const SurfaceQuadrature& quad, const TangentialTrace& trace, int n_max);

/// Surface divergence of the expansion at points on its sphere.
std::vector<cplx> vsh_divergence(const VshExpansion& e, const std::vector<Vec3>& points);

/// Deterministic random band-limited expansion with coefficients of decaying size.
VshExpansion random_vsh(int n_max, unsigned long long seed, int band = -1);

}  // namespace nearcloak
