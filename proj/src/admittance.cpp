#include "nearcloak/admittance.hpp"

#include <cmath>
#include <sstream>

#include "nearcloak/quadrature.hpp"

namespace nearcloak {

WeightedNorm::WeightedNorm(int n) : n_max(n) {
  if (n < 1) throw Error(ErrorKind::validation, "weighted norm: n_max must be at least 1");
}

double WeightedNorm::weight_a(int n) { return std::sqrt(1.0 + n * (n + 1.0)); }
double WeightedNorm::weight_b(int n) { return 1.0 / std::sqrt(1.0 + n * (n + 1.0)); }

Eigen::VectorXd WeightedNorm::flat_weights() const {
  const int K = vsh_mode_count(n_max);
  Eigen::VectorXd w(2 * K);
  for (int n = 1; n <= n_max; ++n) {
    for (int m = -n; m <= n; ++m) {
      w[vsh_index(n, m)] = weight_a(n);
      w[K + vsh_index(n, m)] = weight_b(n);
    }
  }
  return w;
}

double thdiv_norm(const VshExpansion& e, const WeightedNorm& w) {
  if (e.n_max > w.n_max) {
    std::ostringstream msg;
    msg << "thdiv_norm: expansion degree " << e.n_max << " exceeds weight degree " << w.n_max;
    throw Error(ErrorKind::validation, msg.str());
  }
  double s = 0.0;
  for (int n = 1; n <= e.n_max; ++n) {
    for (int m = -n; m <= n; ++m) {
      const int i = vsh_index(n, m);
      s += WeightedNorm::weight_a(n) * std::norm(e.a[i]) + WeightedNorm::weight_b(n) * std::norm(e.b[i]);
    }
  }
  return std::sqrt(s);
}

double l2_coefficient_norm(const VshExpansion& e) { return std::sqrt(e.a.squaredNorm() + e.b.squaredNorm()); }

cplx duality_pairing(const TangentialTrace& j, const TangentialTrace& m, const SurfaceQuadrature& quad) {
  if (j.values.size() != quad.size() || m.values.size() != quad.size()) {
    std::ostringstream msg;
    msg << "duality_pairing: traces have " << j.values.size() << " and " << m.values.size()
        << " samples but the surface has " << quad.size() << " nodes";
    throw Error(ErrorKind::validation, msg.str());
  }
  cplx s = 0.0;
  for (std::size_t k = 0; k < quad.size(); ++k) {
    s += quad.weights[k] * dotu(j.values[k], cross(m.values[k], quad.normals[k]));
  }
  return s;
}

cplx duality_pairing(const TangentialTrace& j, const TangentialTrace& m, const SurfaceMesh& mesh) {
  return duality_pairing(j, m, mesh.quad);
}

namespace {

void check_same_shape(const AdmittanceMatrix& a, const AdmittanceMatrix& b) {
  if (a.n_max != b.n_max || a.matrix.rows() != b.matrix.rows() || a.matrix.cols() != b.matrix.cols()) {
    std::ostringstream msg;
    msg << "admittance difference: degree " << a.n_max << " vs " << b.n_max;
    throw Error(ErrorKind::validation, msg.str());
  }
}

double largest_singular_value(const Eigen::MatrixXcd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues()[0];
}

}  // namespace

double admittance_diff_norm(const AdmittanceMatrix& a, const AdmittanceMatrix& b, const WeightedNorm& w) {
  check_same_shape(a, b);
  if (a.n_max > w.n_max) throw Error(ErrorKind::validation, "admittance difference: weights too short");
  const Eigen::VectorXd s = WeightedNorm(a.n_max).flat_weights().cwiseSqrt();
  const Eigen::MatrixXcd d = s.asDiagonal() * (a.matrix - b.matrix) * s.cwiseInverse().asDiagonal();
  return largest_singular_value(d);
}

double admittance_diff_norm_l2(const AdmittanceMatrix& a, const AdmittanceMatrix& b) {
  check_same_shape(a, b);
  return largest_singular_value(a.matrix - b.matrix);
}

namespace {

double volume_term(const LayeredSolution& sol, const MaterialField& medium, int radial_points) {
  const SurfaceQuadrature dirs = make_sphere_grid_for_degree(1.0, sol.n_max() + 1);
  double total = 0.0;
  for (const MaterialRegion& reg : medium.regions()) {
    const Rule1D rr = gauss_legendre(radial_points, reg.r_inner, reg.r_outer);
    double s = 0.0;
    for (std::size_t i = 0; i < rr.nodes.size(); ++i) {
      const double r = rr.nodes[i];
      for (std::size_t k = 0; k < dirs.size(); ++k) {
        const Vec3 x = r * dirs.nodes[k];
        const Mat3 sigma = reg.sigma(x).matrix();
        if (sigma.isZero(0.0)) continue;
        const CVec3 E = sol.E(x);
        s += rr.weights[i] * r * r * dirs.weights[k] * std::real(E.dot(sigma.cast<cplx>() * E));
      }
    }
    total += s;
  }
  return total;
}

}  // namespace

EnergyIdentity energy_identity(const LayeredSolution& sol, const MaterialField& medium, int radial_points) {
  const double R = sol.spec().outer_radius();
  if (std::abs(medium.outer_radius() - R) > 1e-12 * R) {
    throw Error(ErrorKind::validation, "energy identity: medium and solution radii differ");
  }
  EnergyIdentity out;
  out.volume_term = volume_term(sol, medium, radial_points);
  out.refined_volume_term = volume_term(sol, medium, 2 * radial_points);
  const double scale = std::max(std::abs(out.refined_volume_term), 1e-14);
  out.under_resolved = std::abs(out.refined_volume_term - out.volume_term) > 0.1 * scale;

  const SurfaceQuadrature g = make_sphere_grid_for_degree(R, sol.n_max() + 1);
  double b = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec3& n = g.normals[k];
    const CVec3 E = sol.E(g.nodes[k]), H = sol.H(g.nodes[k]);
    const CVec3 nE = cross(n, CVec3(E.conjugate()));
    b += g.weights[k] * std::real(dotu(nE, cross(n, cross(n, H))));
  }
  out.boundary_term = b;
  out.residual = std::abs(out.volume_term - out.boundary_term) /
                 std::max({std::abs(out.volume_term), std::abs(out.boundary_term), 1e-14});
  return out;
}

double energy_identity_residual(const LayeredSolution& sol, const MaterialField& medium, int radial_points) {
  return energy_identity(sol, medium, radial_points).residual;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::validation, "slope fit needs two or more points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(y[i])) {
      throw Error(ErrorKind::numeric, "slope fit needs positive finite values");
    }
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorKind::validation, "slope fit needs distinct abscissae");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (f.intercept + f.slope * lx[i]);
    f.residuals.push_back(r);
    ss_res += r * r;
  }
  f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  f.flagged = f.r_squared < 0.98;
  return f;
}

}  // namespace nearcloak
