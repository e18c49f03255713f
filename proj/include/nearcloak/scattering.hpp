#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nearcloak/bie.hpp"
#include "nearcloak/vsh.hpp"

namespace nearcloak {

/// Dense LU with a 1-norm condition estimate. Throws ErrorKind::conditioning
/// when the estimate exceeds the limit.
class DenseSolver {
 public:
  DenseSolver(const Eigen::MatrixXcd& A, const std::string& what, double condition_limit = 1e12);

  Eigen::VectorXcd solve(const Eigen::VectorXcd& b) const;
  double condition() const { return condition_; }
  /// ||A x - b|| / ||b|| of the last solve.
  double last_residual() const { return residual_; }

 private:
  Eigen::MatrixXcd A_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
  double condition_ = 0.0;
  mutable double residual_ = 0.0;
};

/// Fields represented by layer potentials on one or more surfaces.
struct ScatterSolution {
  double omega = 0.0;
  double tau = 1.0;
  std::vector<SpacePtr> surfaces;
  std::vector<Eigen::VectorXcd> densities;
  std::function<CVec3(const Vec3&)> E;
  std::function<CVec3(const Vec3&)> H;
  double residual = 0.0;        ///< relative residual of the linear system
  double condition = 0.0;       ///< condition estimate of the system matrix
  double trace_residual = 0.0;  ///< relative mismatch of the prescribed trace
};

/// Radiating (U, V) = (curl int a G, curl U / (i omega)) outside the surface
/// with nu ^ U = phi, from (I + M) a = 2 phi. phi holds vertex values.
ScatterSolution solve_exterior(const SpacePtr& surface, double omega, const TangentialTrace& phi);
ScatterSolution solve_exterior(const SpacePtr& surface, double omega, const Eigen::VectorXcd& phi_dofs);

/// U ~ e^{i omega r}/r * far_field for an exterior solution.
CVec3 exterior_far_field(const ScatterSolution& s, const Vec3& direction);

/// The same problem posed on the reference surface for the surface scaled by
/// tau: [I + M0 + R] a~ = 2 phi(tau .), with a~(x') = a(tau x').
struct ScaledExteriorSolution {
  Eigen::VectorXcd density;
  double condition = 0.0;
  double residual = 0.0;
};
ScaledExteriorSolution solve_exterior_scaled(const SpacePtr& reference, double tau, double omega,
                                             const Eigen::VectorXcd& phi_scaled);
/// Same, reusing assembled I + M0 and R on the reference surface.
ScaledExteriorSolution solve_exterior_scaled(const Eigen::MatrixXcd& M0, const Eigen::MatrixXcd& R,
                                             const Eigen::VectorXcd& phi_scaled);

/// Block system for the annulus between the outer surface and the reference
/// inner surface scaled by tau, unknowns (a1, a~2) = (nu ^ V on the outer
/// surface, nu ^ V(tau .) on the inner reference surface).
class AnnulusSystem {
 public:
  AnnulusSystem(const SpacePtr& outer, const SpacePtr& inner_reference, double tau, double omega);
  /// Reuses tau-independent blocks (I + M_outer and I - M0_inner).
  AnnulusSystem(const SpacePtr& outer, const SpacePtr& inner_reference, double tau, double omega,
                const Eigen::MatrixXcd& L11, const Eigen::MatrixXcd& L22, const Eigen::MatrixXcd& R22);

  const Eigen::MatrixXcd& L11() const { return L11_; }
  const Eigen::MatrixXcd& L21() const { return L21_; }
  const Eigen::MatrixXcd& L22() const { return L22_; }
  const Eigen::MatrixXcd& R12() const { return R12_; }
  const Eigen::MatrixXcd& R22() const { return R22_; }
  const SpacePtr& outer() const { return outer_; }
  const SpacePtr& inner() const { return inner_; }  ///< the scaled inner surface
  double tau() const { return tau_; }
  double omega() const { return omega_; }

  /// L - R.
  Eigen::MatrixXcd matrix() const;
  /// L alone (R dropped).
  Eigen::MatrixXcd lower() const;
  /// Solves (L - R) a = P.
  Eigen::VectorXcd solve(const Eigen::VectorXcd& P, double* condition = nullptr, double* residual = nullptr) const;
  /// L^{-1} P through the block formula (L11^{-1}; -L22^{-1} L21 L11^{-1}, L22^{-1}).
  Eigen::VectorXcd apply_block_inverse(const Eigen::VectorXcd& P) const;

 private:
  SpacePtr outer_, inner_ref_, inner_;
  double tau_, omega_;
  Eigen::MatrixXcd L11_, L21_, L22_, R12_, R22_;
  void assemble_coupling();
};

/// Vacuum annulus field with nu ^ U = nu ^ U_ext on the outer surface and 0 on
/// the inner one. The right-hand side comes from the electric dipole operator
/// applied to nu ^ U_ext. Returns E = U~, H = V~ and densities (a1, a~2).
ScatterSolution solve_annulus(const AnnulusSystem& system, const ScatterSolution& exterior);

/// Tangential magnetic trace nu ^ V~ of an annulus solution on the outer surface.
Eigen::VectorXcd annulus_outer_trace(const ScatterSolution& annulus);

/// Output of the decomposition E~ = U - U~ for a ball with a small hole.
struct DecompositionResult {
  double tau = 0.0;
  Eigen::VectorXcd trace_dofs;   ///< nu ^ (H_tau - H0) at outer vertices
  VshExpansion trace;            ///< its spectral coefficients
  double phi_scaled_norm = 0.0;  ///< L2 norm of phi(tau .) on the reference surface
  double exterior_condition = 0.0;
  double annulus_condition = 0.0;
  double exterior_residual = 0.0;
  double annulus_residual = 0.0;
  double decomposition_residual = 0.0;  ///< |nu ^ (U - U~)| / |nu ^ U| just inside the outer sphere
};

/// Reuses the tau-independent operators across a tau sweep on sphere meshes.
class DecompositionSolver {
 public:
  /// outer: sphere of radius R_Omega, inner_reference: sphere of radius R_D.
  DecompositionSolver(const SpacePtr& outer, const SpacePtr& inner_reference, double omega, int n_max_out = 8);

  /// phi_scaled(x') gives phi(tau x') for x' on the reference inner sphere;
  /// psi is nu ^ E on the outer sphere. Throws ErrorKind::resonance when omega
  /// is an interior eigenvalue of the outer ball.
  DecompositionResult solve(double tau, const std::function<CVec3(const Vec3&)>& phi_scaled, const VshExpansion& psi,
                    bool check_decomposition = false) const;

  /// Same quantity from the spectral annulus oracle.
  VshExpansion oracle(double tau, const std::function<CVec3(const Vec3&)>& phi_scaled, const VshExpansion& psi,
                      int n_data = 12) const;

  const SpacePtr& outer() const { return outer_; }
  const SpacePtr& inner_reference() const { return inner_ref_; }

 private:
  SpacePtr outer_, inner_ref_;
  double omega_;
  int n_max_out_;
  Eigen::MatrixXcd L11_, M0_, electric_self_;
};

/// One-shot version of DecompositionSolver::solve.
DecompositionResult solve_lemma_crucial(const SpacePtr& outer, const SpacePtr& inner_reference, double omega, double tau,
                                const std::function<CVec3(const Vec3&)>& phi_scaled, const VshExpansion& psi,
                                int n_max_out = 8);

}  // namespace nearcloak
