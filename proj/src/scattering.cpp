#include "nearcloak/scattering.hpp"

#include <cmath>
#include <sstream>

#include "nearcloak/mie.hpp"

namespace nearcloak {

DenseSolver::DenseSolver(const Eigen::MatrixXcd& A, const std::string& what, double condition_limit)
    : A_(A), lu_(A) {
  const double rc = lu_.rcond();
  condition_ = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
  if (!(condition_ <= condition_limit)) {
    std::ostringstream msg;
    msg << what << ": condition estimate " << condition_ << " exceeds " << condition_limit
        << " (scale too large or frequency near a resonance)";
    throw Error(ErrorKind::conditioning, msg.str());
  }
}

Eigen::VectorXcd DenseSolver::solve(const Eigen::VectorXcd& b) const {
  Eigen::VectorXcd x = lu_.solve(b);
  const double nb = b.norm();
  residual_ = nb > 0.0 ? (A_ * x - b).norm() / nb : 0.0;
  return x;
}

namespace {

Eigen::MatrixXcd identity_plus(const Eigen::MatrixXcd& M, double sign = 1.0) {
  Eigen::MatrixXcd A = sign * M;
  A.diagonal().array() += 1.0;
  return A;
}

ScatterSolution exterior_from_density(const SpacePtr& surface, double omega, Eigen::VectorXcd a) {
  ScatterSolution s;
  s.omega = omega;
  s.surfaces = {surface};
  s.densities = {std::move(a)};
  const SpacePtr sp = surface;
  const Eigen::VectorXcd d = s.densities[0];
  s.E = [sp, d, omega](const Vec3& x) { return eval_fields(*sp, d, x, omega).U; };
  s.H = [sp, d, omega](const Vec3& x) { return eval_fields(*sp, d, x, omega).V; };
  return s;
}

}  // namespace

ScatterSolution solve_exterior(const SpacePtr& surface, double omega, const TangentialTrace& phi) {
  if (phi.values.size() != surface->vertex_count()) {
    throw Error(ErrorKind::validation, "exterior data must be given at the mesh vertices");
  }
  double vmax = 1.0;
  for (const auto& v : phi.values) vmax = std::max(vmax, v.norm());
  for (std::size_t i = 0; i < phi.values.size(); ++i) {
    if (std::abs(dotu(surface->normal(i), phi.values[i])) > 1e-10 * vmax) {
      std::ostringstream msg;
      msg << "exterior data not tangential at vertex " << i;
      throw Error(ErrorKind::validation, msg.str());
    }
  }
  return solve_exterior(surface, omega, surface->to_dofs(phi.values));
}

ScatterSolution solve_exterior(const SpacePtr& surface, double omega, const Eigen::VectorXcd& phi) {
  if (phi.size() != surface->dof_count()) throw Error(ErrorKind::validation, "exterior data size mismatch");
  const BoundaryOperatorMatrix M = assemble_magnetic_dipole(surface, omega);
  const DenseSolver solver(identity_plus(M.matrix), "exterior system I + M");
  ScatterSolution s = exterior_from_density(surface, omega, solver.solve(2.0 * phi));
  s.residual = solver.last_residual();
  s.condition = solver.condition();
  const double np = phi.norm();
  const Eigen::VectorXcd& a = s.densities[0];
  s.trace_residual = np > 0.0 ? (0.5 * (a + M.matrix * a) - phi).norm() / np : a.norm();
  return s;
}

CVec3 exterior_far_field(const ScatterSolution& s, const Vec3& direction) {
  return bie_far_field(*s.surfaces.at(0), s.densities.at(0), direction, s.omega);
}

ScaledExteriorSolution solve_exterior_scaled(const SpacePtr& reference, double tau, double omega,
                                             const Eigen::VectorXcd& phi_scaled) {
  const BoundaryOperatorMatrix M0 = assemble_magnetic_dipole(reference, 0.0);
  const BoundaryOperatorMatrix R = assemble_split_remainder(reference, tau, omega);
  return solve_exterior_scaled(M0.matrix, R.matrix, phi_scaled);
}

ScaledExteriorSolution solve_exterior_scaled(const Eigen::MatrixXcd& M0, const Eigen::MatrixXcd& R,
                                             const Eigen::VectorXcd& phi_scaled) {
  const DenseSolver solver(identity_plus(M0 + R), "scaled exterior system I + M0 + R");
  ScaledExteriorSolution s;
  s.density = solver.solve(2.0 * phi_scaled);
  s.condition = solver.condition();
  s.residual = solver.last_residual();
  return s;
}

// ---------------------------------------------------------------------------

AnnulusSystem::AnnulusSystem(const SpacePtr& outer, const SpacePtr& inner_reference, double tau, double omega)
    : AnnulusSystem(outer, inner_reference, tau, omega, identity_plus(assemble_magnetic_dipole(outer, omega).matrix),
                    identity_plus(assemble_magnetic_dipole(inner_reference, 0.0).matrix, -1.0),
                    assemble_split_remainder(inner_reference, tau, omega).matrix) {}

AnnulusSystem::AnnulusSystem(const SpacePtr& outer, const SpacePtr& inner_reference, double tau, double omega,
                             const Eigen::MatrixXcd& L11, const Eigen::MatrixXcd& L22, const Eigen::MatrixXcd& R22)
    : outer_(outer), inner_ref_(inner_reference), tau_(tau), omega_(omega), L11_(L11), L22_(L22), R22_(R22) {
  if (!(tau > 0.0)) throw Error(ErrorKind::domain, "annulus scale must be positive");
  inner_ = make_space(scale_mesh(inner_reference->mesh(), tau), inner_reference->options());
  assemble_coupling();
}

void AnnulusSystem::assemble_coupling() {
  L21_ = assemble_magnetic_dipole(inner_, outer_, omega_).matrix;
  R12_ = assemble_magnetic_dipole(outer_, inner_, omega_).matrix;
}

Eigen::MatrixXcd AnnulusSystem::lower() const {
  const Eigen::Index n1 = L11_.rows(), n2 = L22_.rows();
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n1 + n2, n1 + n2);
  A.topLeftCorner(n1, n1) = L11_;
  A.bottomLeftCorner(n2, n1) = L21_;
  A.bottomRightCorner(n2, n2) = L22_;
  return A;
}

Eigen::MatrixXcd AnnulusSystem::matrix() const {
  Eigen::MatrixXcd A = lower();
  const Eigen::Index n1 = L11_.rows(), n2 = L22_.rows();
  A.topRightCorner(n1, n2) -= R12_;
  A.bottomRightCorner(n2, n2) -= R22_;
  return A;
}

Eigen::VectorXcd AnnulusSystem::solve(const Eigen::VectorXcd& P, double* condition, double* residual) const {
  const DenseSolver solver(matrix(), "annulus block system (L - R)");
  Eigen::VectorXcd a = solver.solve(P);
  if (condition) *condition = solver.condition();
  if (residual) *residual = solver.last_residual();
  return a;
}

Eigen::VectorXcd AnnulusSystem::apply_block_inverse(const Eigen::VectorXcd& P) const {
  const Eigen::Index n1 = L11_.rows(), n2 = L22_.rows();
  const DenseSolver s11(L11_, "L11 = I + M");
  const DenseSolver s22(L22_, "L22 = I - M0");
  Eigen::VectorXcd a(n1 + n2);
  a.head(n1) = s11.solve(P.head(n1));
  a.tail(n2) = s22.solve(P.tail(n2) - L21_ * a.head(n1));
  return a;
}

namespace {

ScatterSolution annulus_impl(const AnnulusSystem& sys, const ScatterSolution& exterior,
                             const Eigen::MatrixXcd* electric_self) {
  const SpacePtr& outer = sys.outer();
  const SpacePtr& inner = sys.inner();
  const double omega = sys.omega();
  const std::size_t nv = outer->vertex_count();
  std::vector<CVec3> b(nv);
  Eigen::VectorXcd q(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    const Vec3& n = outer->normal(i);
    const FieldSample f = eval_fields(*exterior.surfaces.at(0), exterior.densities.at(0), outer->vertex(i), omega);
    b[i] = cross(n, f.U);
    q[i] = -imag_unit * omega * dotu(n, f.V);  // Div(nu ^ U) = -nu . curl U
  }
  const Eigen::VectorXcd bd = outer->to_dofs(b);
  Eigen::VectorXcd P1;
  if (electric_self) {
    P1 = electric_self->leftCols(bd.size()) * bd + electric_self->rightCols(q.size()) * q;
  } else {
    P1 = apply_electric_dipole(assemble_electric_dipole(outer, outer, omega), bd, q);
  }
  const Eigen::VectorXcd P2 = apply_electric_dipole(assemble_electric_dipole(inner, outer, omega), bd);
  Eigen::VectorXcd P(P1.size() + P2.size());
  P << 2.0 * P1, 2.0 * P2;

  ScatterSolution s;
  s.omega = omega;
  s.tau = sys.tau();
  const Eigen::VectorXcd a = sys.solve(P, &s.condition, &s.residual);
  const Eigen::VectorXcd a1 = a.head(P1.size());
  const Eigen::VectorXcd a2 = a.tail(P2.size());
  s.surfaces = {outer, inner, outer};
  s.densities = {a1, a2, bd};
  // Stratton-Chu in the annulus (outward normal of the annulus is -nu on the hole)
  s.H = [outer, inner, a1, a2, bd, omega](const Vec3& x) {
    return CVec3(-eval_fields(*outer, a1, x, omega).U + eval_fields(*inner, a2, x, omega).U -
                 eval_fields(*outer, bd, x, omega).V);
  };
  s.E = [outer, inner, a1, a2, bd, omega](const Vec3& x) {
    return CVec3(-eval_fields(*outer, bd, x, omega).U + eval_fields(*outer, a1, x, omega).V -
                 eval_fields(*inner, a2, x, omega).V);
  };
  return s;
}

}  // namespace

ScatterSolution solve_annulus(const AnnulusSystem& system, const ScatterSolution& exterior) {
  return annulus_impl(system, exterior, nullptr);
}

Eigen::VectorXcd annulus_outer_trace(const ScatterSolution& annulus) { return annulus.densities.at(0); }

// ---------------------------------------------------------------------------

DecompositionSolver::DecompositionSolver(const SpacePtr& outer, const SpacePtr& inner_reference, double omega, int n_max_out)
    : outer_(outer), inner_ref_(inner_reference), omega_(omega), n_max_out_(n_max_out) {
  if (!outer->mesh().is_sphere() || !inner_reference->mesh().is_sphere()) {
    throw Error(ErrorKind::validation, "the decomposition solver needs concentric sphere meshes");
  }
  const EigenvalueReport rep = is_em_eigenvalue(omega, outer->mesh().nominal_radius, 1e-6);
  if (rep.is_eigenvalue) {
    std::ostringstream msg;
    msg << "omega = " << omega << " is an interior eigenvalue of the outer ball (n = " << rep.min_n << ", "
        << to_string(rep.min_pol) << ", determinant " << rep.min_determinant << ")";
    throw Error(ErrorKind::resonance, msg.str());
  }
  L11_ = identity_plus(assemble_magnetic_dipole(outer, omega).matrix);
  M0_ = assemble_magnetic_dipole(inner_reference, 0.0).matrix;
  electric_self_ = assemble_electric_dipole(outer, outer, omega).matrix;
}

namespace {

std::function<CVec3(const Vec3&)> vacuum_field(double R, double omega, const VshExpansion& psi) {
  if (psi.a.norm() + psi.b.norm() == 0.0) return [](const Vec3&) { return CVec3(CVec3::Zero()); };
  auto sol = std::make_shared<LayeredSolution>(solve_layered_sphere(LayeredSphereSpec::vacuum_ball(R, omega), psi));
  return [sol](const Vec3& x) { return sol->E(x); };
}

}  // namespace

DecompositionResult DecompositionSolver::solve(double tau, const std::function<CVec3(const Vec3&)>& phi_scaled,
                               const VshExpansion& psi, bool check_decomposition) const {
  const double R_outer = outer_->mesh().nominal_radius;
  const Eigen::MatrixXcd R22 = assemble_split_remainder(inner_ref_, tau, omega_).matrix;
  Eigen::MatrixXcd L22 = -M0_;
  L22.diagonal().array() += 1.0;
  const AnnulusSystem sys(outer_, inner_ref_, tau, omega_, L11_, L22, R22);
  const SpacePtr& inner = sys.inner();
  const auto E0 = vacuum_field(R_outer, omega_, psi);

  DecompositionResult out;
  out.tau = tau;
  const Eigen::VectorXcd data = inner->sample([&](const Vec3& x, const Vec3& n) {
    const CVec3 p = phi_scaled(x / tau);
    const CVec3 t = p - n.cast<cplx>() * dotu(n, p);
    return CVec3(t - cross(n, E0(x)));
  });
  {
    double s = 0.0;
    const auto& q = inner_ref_->mesh().quad;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const CVec3 p = phi_scaled(q.nodes[i]);
      s += q.weights[i] * (p - q.normals[i].cast<cplx>() * dotu(q.normals[i], p)).squaredNorm();
    }
    out.phi_scaled_norm = std::sqrt(s);
  }
  const ScaledExteriorSolution ext_scaled = solve_exterior_scaled(M0_, R22, data);
  out.exterior_condition = ext_scaled.condition;
  out.exterior_residual = ext_scaled.residual;
  const ScatterSolution ext = exterior_from_density(inner, omega_, ext_scaled.density);

  const ScatterSolution ann = annulus_impl(sys, ext, &electric_self_);
  out.annulus_condition = ann.condition;
  out.annulus_residual = ann.residual;

  std::vector<CVec3> nv(outer_->vertex_count());
  for (std::size_t i = 0; i < nv.size(); ++i) {
    nv[i] = cross(outer_->normal(i), eval_fields(*inner, ext.densities[0], outer_->vertex(i), omega_).V);
  }
  out.trace_dofs = outer_->to_dofs(nv) - annulus_outer_trace(ann);
  out.trace = vsh_analyze(outer_->mesh().quad, outer_->trace_at_quadrature(out.trace_dofs), n_max_out_);

  if (check_decomposition) {
    // nu ^ (U - U~) just inside the outer sphere, extrapolated linearly to it
    const SurfaceQuadrature dirs = make_sphere_grid(1.0, 4, 8);
    double num = 0.0, den = 0.0;
    for (const Vec3& d : dirs.nodes) {
      const Vec3 x1 = R_outer * (1.0 - 0.04) * d, x2 = R_outer * (1.0 - 0.02) * d;
      const CVec3 u1 = cross(d, ext.E(x1)), u2 = cross(d, ext.E(x2));
      const CVec3 e = 2.0 * (u2 - cross(d, ann.E(x2))) - (u1 - cross(d, ann.E(x1)));
      num = std::max(num, e.norm());
      den = std::max(den, (2.0 * u2 - u1).norm());
    }
    out.decomposition_residual = den > 0.0 ? num / den : num;
  }
  return out;
}

VshExpansion DecompositionSolver::oracle(double tau, const std::function<CVec3(const Vec3&)>& phi_scaled,
                                 const VshExpansion& psi, int n_data) const {
  const double R_outer = outer_->mesh().nominal_radius;
  const double r_in = tau * inner_ref_->mesh().nominal_radius;
  const auto E0 = vacuum_field(R_outer, omega_, psi);
  const SurfaceQuadrature g = make_sphere_grid_for_degree(r_in, n_data);
  TangentialTrace tr;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3& n = g.normals[i];
    const CVec3 p = phi_scaled(g.nodes[i] / tau);
    tr.values.push_back(p - n.cast<cplx>() * dotu(n, p) - cross(n, E0(g.nodes[i])));
  }
  const VacuumAnnulusField f(r_in, R_outer, omega_, vsh_analyze(g, tr, n_data), VshExpansion::zero(n_data));
  return f.magnetic_trace_outer().resized(n_max_out_);
}

DecompositionResult solve_lemma_crucial(const SpacePtr& outer, const SpacePtr& inner_reference, double omega, double tau,
                                const std::function<CVec3(const Vec3&)>& phi_scaled, const VshExpansion& psi,
                                int n_max_out) {
  return DecompositionSolver(outer, inner_reference, omega, n_max_out).solve(tau, phi_scaled, psi, true);
}

}  // namespace nearcloak
