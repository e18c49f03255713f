#pragma once

#include <iosfwd>
#include <vector>

#include "nearcloak/vsh.hpp"

namespace nearcloak {

enum class Polarization { te, tm };
const char* to_string(Polarization p);

/// One homogeneous isotropic shell; relative units, vacuum = (1, 1, 0).
struct Layer {
  double outer_radius = 1.0;
  double eps = 1.0;
  double mu = 1.0;
  double sigma = 0.0;
};

/// Concentric layers listed from the centre outwards. With pec_radius > 0 the
/// ball of that radius is a perfect conductor and layer 0 starts there.
struct LayeredSphereSpec {
  std::vector<Layer> layers;
  double omega = 1.0;
  double pec_radius = 0.0;

  void validate() const;
  double outer_radius() const { return layers.back().outer_radius; }
  double inner_radius(std::size_t layer) const;
  /// k = omega sqrt(mu (eps + i sigma/omega)), Im k >= 0.
  cplx wavenumber(std::size_t layer) const;
  /// Index of the layer containing radius r (interfaces belong to the inner layer).
  std::size_t layer_of(double r) const;

  static LayeredSphereSpec vacuum_ball(double radius, double omega);
};

/// Tangential-trace admittances of one degree n at the outer sphere:
/// (nu^H)_a = tm * (nu^E)_b and (nu^H)_b = te * (nu^E)_a.
struct ModalAdmittance {
  cplx te;
  cplx tm;
};

std::vector<ModalAdmittance> modal_admittances(const LayeredSphereSpec& spec, int n_max);

/// Matrix acting on flat [a; b] coefficient vectors, mapping nu^E to nu^H.
struct AdmittanceMatrix {
  int n_max = 1;
  Eigen::MatrixXcd matrix;

  VshExpansion apply(const VshExpansion& e) const;
};

AdmittanceMatrix admittance_sphere(const LayeredSphereSpec& spec, int n_max);

/// Field of a layered sphere driven by nu^E on its outer boundary.
class LayeredSolution {
 public:
  LayeredSolution(LayeredSphereSpec spec, VshExpansion boundary_data);

  const LayeredSphereSpec& spec() const { return spec_; }
  int n_max() const { return data_.n_max; }
  const VshExpansion& boundary_data() const { return data_; }

  CVec3 E(const Vec3& x) const;
  CVec3 H(const Vec3& x) const;
  /// nu^H on the outer sphere.
  VshExpansion magnetic_trace() const;

  /// Coefficient of the regular (outgoing = false) or outgoing radial part of
  /// mode (n, m, pol) in a layer.
  cplx coefficient(int n, int m, Polarization pol, std::size_t layer, bool outgoing) const;

  /// Columns: n,m,pol,layer,coeff_re,coeff_im with pol in {TE_j, TE_h, TM_j, TM_h}.
  void write_csv(std::ostream& os) const;

 private:
  void fields(const Vec3& x, CVec3& E, CVec3& H) const;

  LayeredSphereSpec spec_;
  VshExpansion data_;
  std::vector<ModalAdmittance> admittance_;
  // [n][layer] -> (regular, outgoing) amplitudes per unit boundary coefficient
  std::vector<std::vector<std::array<cplx, 2>>> te_;
  std::vector<std::vector<std::array<cplx, 2>>> tm_;
};

LayeredSolution solve_layered_sphere(const LayeredSphereSpec& spec, const VshExpansion& boundary_data);

/// Outgoing vacuum field outside the sphere of radius R with nu^E = trace there.
class RadiatingSphereField {
 public:
  RadiatingSphereField(double radius, double omega, VshExpansion trace);

  CVec3 E(const Vec3& x) const;
  CVec3 H(const Vec3& x) const;
  /// E ~ e^{i omega r}/r * far_field(direction).
  CVec3 far_field(const Vec3& direction) const;
  VshExpansion magnetic_trace() const;

 private:
  void fields(const Vec3& x, CVec3& E, CVec3& H) const;

  double radius_;
  double omega_;
  VshExpansion trace_;
  Eigen::VectorXcd c_;  // TE amplitudes
  Eigen::VectorXcd d_;  // TM amplitudes
};

/// Vacuum field in r_in < |x| < r_out with nu^E prescribed on both spheres.
class VacuumAnnulusField {
 public:
  VacuumAnnulusField(double r_in, double r_out, double omega, const VshExpansion& inner_trace,
                     const VshExpansion& outer_trace);

  CVec3 E(const Vec3& x) const;
  CVec3 H(const Vec3& x) const;
  VshExpansion magnetic_trace_outer() const;
  VshExpansion magnetic_trace_inner() const;

 private:
  VshExpansion magnetic_trace_at(double r) const;
  void fields(const Vec3& x, CVec3& E, CVec3& H) const;

  double r_in_, r_out_, omega_;
  int n_max_;
  // per flat mode index: (regular, outgoing) amplitudes of TE and TM parts
  std::vector<std::array<cplx, 2>> te_, tm_;
};

struct EigenvalueReport {
  bool is_eigenvalue = false;
  double min_determinant = 1.0;
  int min_n = 1;
  Polarization min_pol = Polarization::te;
  double nearest_omega = 0.0;
  double distance = 0.0;
  int nearest_n = 1;
  Polarization nearest_pol = Polarization::te;
  /// Modal determinants, [n-1] -> (TE, TM).
  std::vector<std::array<double, 2>> determinants;
};

/// Interior vacuum-ball resonance check: TE zeros of f = j_n(omega R), TM zeros
/// of f = [z j_n]'(omega R). The modal determinant is |f|/sqrt(f^2 + f'^2),
/// roughly the distance in omega R to the nearest zero.
EigenvalueReport is_em_eigenvalue(double omega, double radius, double tol, int n_max = 12);

}  // namespace nearcloak
