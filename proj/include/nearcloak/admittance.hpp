#pragma once

#include <vector>

#include "nearcloak/media.hpp"
#include "nearcloak/mie.hpp"

namespace nearcloak {

/// Spectral weights of the discrete trace norm: (1 + n(n+1))^{1/2} on
/// gradient-type and (1 + n(n+1))^{-1/2} on rotated coefficients.
struct WeightedNorm {
  int n_max = 12;

  explicit WeightedNorm(int n_max = 12);
  static double weight_a(int n);
  static double weight_b(int n);
  /// Weights on flat [a; b] coefficient vectors.
  Eigen::VectorXd flat_weights() const;
};

/// sqrt(sum w_a |a_nm|^2 + w_b |b_nm|^2). Throws ErrorKind::validation if the
/// expansion is longer than the weights.
double thdiv_norm(const VshExpansion& e, const WeightedNorm& w);
/// Plain l2 norm of the coefficients (unweighted comparison norm).
double l2_coefficient_norm(const VshExpansion& e);

/// B(j, m) = int j . (m ^ nu) ds by quadrature. Throws ErrorKind::validation
/// when the traces do not live on the quadrature nodes.
cplx duality_pairing(const TangentialTrace& j, const TangentialTrace& m, const SurfaceQuadrature& quad);
cplx duality_pairing(const TangentialTrace& j, const TangentialTrace& m, const SurfaceMesh& mesh);

/// Largest singular value of W^{1/2} (A - B) W^{-1/2}.
double admittance_diff_norm(const AdmittanceMatrix& a, const AdmittanceMatrix& b, const WeightedNorm& w);
/// Largest singular value of A - B.
double admittance_diff_norm_l2(const AdmittanceMatrix& a, const AdmittanceMatrix& b);

/// Real-part energy balance of a layered-sphere solution:
/// sum over regions of int E . sigma conj(E) dx against
/// Re int (nu ^ conj E) . [nu ^ (nu ^ H)] ds on the outer sphere.
struct EnergyIdentity {
  double volume_term = 0.0;
  double boundary_term = 0.0;
  double residual = 0.0;          ///< |volume - boundary| / max(|volume|, |boundary|, 1e-14)
  double refined_volume_term = 0.0;
  bool under_resolved = false;    ///< doubling the radial points moved the volume term by > 10%
};
/// The medium supplies sigma and the region boundaries; radial Gauss rules
/// with radial_points nodes per region times a sphere grid exact for the
/// solution's angular degree.
EnergyIdentity energy_identity(const LayeredSolution& solution, const MaterialField& medium, int radial_points = 24);
double energy_identity_residual(const LayeredSolution& solution, const MaterialField& medium,
                                int radial_points = 24);

/// Least-squares line through (log x, log y).
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<double> residuals;  ///< log y - fitted, per point
  bool flagged = false;           ///< r_squared < 0.98
};
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace nearcloak
